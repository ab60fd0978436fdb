"""Labeler: keyword tables, entity extraction, backends, macro-recall."""

import json
import string
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logan.labeler import (
    FAULT_CATEGORIES,
    GOLDEN_SIGNALS,
    Entity,
    KeywordTables,
    RemoteBackend,
    RemoteError,
    RuleBackend,
    classify_batch,
    load_keyword_tables,
    macro_recall,
    rule_based_entities,
    rule_based_faults,
    rule_based_golden,
)

# ---------------------------------------------------------------------------
# golden signal rules


@pytest.mark.parametrize(
    "text,expected",
    [
        ("Operation Timed out", "latency"),
        ("Session ID XX does not exist", "availability"),
        ("Connection Broken", "error"),
        ("", "information"),
        ("disk usage exceeded limit", "saturation"),
        ("rate limit hit for client", "traffic"),
        ("heartbeat received", "information"),
    ],
)
def test_golden_examples(text, expected):
    assert rule_based_golden(text) == expected


def test_golden_priority_error_beats_latency():
    # both "failure" (error) and "timeout" (latency) fire
    assert rule_based_golden("timeout failure while polling") == "error"


def test_golden_keyword_prefix_match():
    # open-ended word-start matching: "saturat" covers derived forms
    assert rule_based_golden("pool is saturated") == "saturation"
    assert rule_based_golden("request failed") == "error"


def test_faults_multi_label():
    got = rule_based_faults("connection reset while writing to disk")
    assert got == {"network", "io"}


def test_faults_default_other():
    assert rule_based_faults("all quiet") == {"other"}


def test_keyword_file_override(tmp_path):
    path = tmp_path / "kw.json"
    path.write_text(json.dumps({
        "golden": {"latency": ["sluggish"]},
        "faults": {"network": ["mesh"]},
    }))
    tables = load_keyword_tables(str(path))
    assert tables.golden_of("sluggish response") == "latency"
    assert tables.golden_of("Operation Timed out") == "information"  # replaced
    assert tables.faults_of("mesh partition") == {"network"}
    assert tables.golden_of("broken pipe") == "error"  # untouched default


def test_keyword_file_toml(tmp_path):
    path = tmp_path / "kw.toml"
    path.write_text('[golden]\ntraffic = ["flood"]\n')
    tables = load_keyword_tables(str(path))
    assert tables.golden_of("flood of events") == "traffic"


def test_keyword_file_rejects_unknown_class(tmp_path):
    path = tmp_path / "kw.json"
    path.write_text(json.dumps({"golden": {"speed": ["x"]}}))
    with pytest.raises(ValueError):
        load_keyword_tables(str(path))


# ---------------------------------------------------------------------------
# entities

EXEMPLAR = (
    "2024-10-20 14:30 ERROR [ErrorCode: 500] [ThreadID - 123] [Config: /db.json] "
    "Unable to fetch data from https://ABC.com/api/data. "
    "Connection failure for userID=6789"
)


def test_entities_exemplar_line():
    got = {(e.entity_type, e.text) for e in rule_based_entities(EXEMPLAR)}
    assert got == {
        ("DateTime", "2024-10-20 14:30"),
        ("Level", "ERROR"),
        ("ErrorCode", "500"),
        ("ProcessID", "123"),
        ("FileOrDir", "/db.json"),
        ("Symptom", "Unable to fetch data"),
        ("URL", "https://ABC.com/api/data"),
        ("Cause", "Connection failure"),
        ("NVPair", "userID=6789"),
    }


def test_entities_plain_words():
    assert rule_based_entities("plain words") == []


def test_entities_overlap_resolution_fixture():
    # NVPair "pid=42" starts left of ProcessID "42", so leftmost-longest
    # keeps the pair and drops the contained ProcessID.
    got = {(e.entity_type, e.text) for e in rule_based_entities("pid=42 wrote /var/log/x.log")}
    assert got == {("NVPair", "pid=42"), ("FileOrDir", "/var/log/x.log")}


def test_entities_pid_without_pair_syntax():
    got = {(e.entity_type, e.text) for e in rule_based_entities("worker pid 42 started")}
    assert ("ProcessID", "42") in got


def test_entities_cause_after_cue():
    ents = {(e.entity_type, e.text) for e in rule_based_entities("restart due to watchdog reset.")}
    assert ("Cause", "watchdog reset") in ents


def test_entities_url_inside_text_beats_path():
    ents = rule_based_entities("GET https://x.io/a/b done")
    types = [(e.entity_type, e.text) for e in ents]
    assert ("URL", "https://x.io/a/b") in types
    assert all(t != "FileOrDir" for t, _ in types)


_printable = st.text(alphabet=string.printable, max_size=120)


@settings(max_examples=150, deadline=None)
@given(text=_printable)
def test_entities_spans_slice_back_and_never_overlap(text):
    ents = rule_based_entities(text)
    last_end = -1
    for e in ents:
        assert 0 <= e.start < e.end <= len(text)
        assert text[e.start:e.end] == e.text
        assert e.start >= last_end
        last_end = e.end


# ---------------------------------------------------------------------------
# classify_batch


def test_rule_backend_pure_function():
    lines = [EXEMPLAR, "Operation Timed out", "quiet line"]
    backend = RuleBackend()
    a = classify_batch(backend, lines)
    b = classify_batch(backend, lines)
    assert [x.to_dict() for x in a] == [x.to_dict() for x in b]
    assert a[1].golden == "latency"
    assert a[2].golden == "information" and a[2].faults == {"other"}


def test_classify_batch_limit():
    backend = RuleBackend()
    backend_limit = backend.batch_limit
    try:
        backend.batch_limit = 2
        with pytest.raises(ValueError):
            classify_batch(backend, ["a", "b", "c"])
    finally:
        backend.batch_limit = backend_limit


class _GscOnly:
    backend_id = "gsc-only"
    capabilities = frozenset({"gsc"})
    batch_limit = 100

    def run_task(self, task, lines):
        assert task == "gsc"
        return ["error" for _ in lines]


def test_partial_capabilities_fill_defaults():
    out = classify_batch(_GscOnly(), ["boom", "bang"])
    assert all(ls.golden == "error" for ls in out)
    assert all(ls.faults == {"other"} for ls in out)
    assert all(ls.entities == [] for ls in out)


class _AlwaysDown:
    backend_id = "remote:dead"
    capabilities = frozenset({"gsc", "fcp", "ner"})
    batch_limit = 100

    def run_task(self, task, lines):
        raise RemoteError("boom", attempts=3)


def test_remote_failure_falls_back_to_rules():
    warnings: list[str] = []
    out = classify_batch(_AlwaysDown(), ["Operation Timed out"], warnings=warnings)
    assert out[0].golden == "latency"
    assert out[0].backend_id == "rule"
    assert len(warnings) == 3  # one per task
    assert all("fell back" in w for w in warnings)


# ---------------------------------------------------------------------------
# remote backend over a live local stub


class _StubHandler(BaseHTTPRequestHandler):
    fail_first = 0  # class-level counter of forced failures

    def do_POST(self):
        cls = type(self)
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if cls.fail_first > 0:
            cls.fail_first -= 1
            self.send_response(500)
            self.end_headers()
            return
        task, lines = body["task"], body["lines"]
        if task == "gsc":
            labels = ["error" if "bad" in l else "information" for l in lines]
        elif task == "fcp":
            labels = [["network"] if "net" in l else [] for l in lines]
        else:
            labels = [
                [{"type": "Level", "start": 0, "end": 4, "text": l[0:4]}] if l.startswith("WARN")
                else []
                for l in lines
            ]
        payload = json.dumps({"labels": labels}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


def test_remote_backend_roundtrip(stub_server):
    backend = RemoteBackend(stub_server, timeout_ms=2000, retries=1)
    out = classify_batch(backend, ["bad net day", "WARN low"])
    assert out[0].golden == "error"
    assert out[0].faults == {"network"}
    assert out[1].golden == "information"
    assert out[1].entities[0].entity_type == "Level"
    assert out[1].entities[0].text == "WARN"
    assert out[0].backend_id.startswith("remote:")


def test_remote_backend_retries_then_succeeds(stub_server):
    _StubHandler.fail_first = 1
    backend = RemoteBackend(stub_server, timeout_ms=2000, retries=2)
    assert backend.run_task("gsc", ["bad"]) == ["error"]


def test_remote_backend_exhausts_retries():
    backend = RemoteBackend("http://127.0.0.1:1", timeout_ms=200, retries=1)
    with pytest.raises(RemoteError) as err:
        backend.run_task("gsc", ["x"])
    assert err.value.attempts == 2


# ---------------------------------------------------------------------------
# macro_recall


def test_macro_recall_hand_computed():
    assert macro_recall(["A", "B", "B", "B"], ["A", "A", "B", "B"], {"A", "B"}) == 0.75


def test_macro_recall_perfect():
    truth = ["A", "B", "C", "A"]
    assert macro_recall(list(truth), truth, {"A", "B", "C"}) == 1.0


def test_macro_recall_absent_class_excluded():
    assert macro_recall(["B", "B", "B"], ["A", "A", "A"], {"A", "B"}) == 0.0


def test_macro_recall_errors():
    with pytest.raises(ValueError):
        macro_recall([], [], {"A"})
    with pytest.raises(ValueError):
        macro_recall(["A"], ["A", "B"], {"A", "B"})
    with pytest.raises(ValueError):
        macro_recall(["A"], ["Z"], {"A"})


@settings(max_examples=80, deadline=None)
@given(
    pairs=st.lists(
        st.tuples(st.sampled_from(GOLDEN_SIGNALS), st.sampled_from(GOLDEN_SIGNALS)),
        min_size=1,
        max_size=40,
    ),
    seed=st.integers(0, 2**16),
)
def test_macro_recall_permutation_invariant(pairs, seed):
    import random

    preds = [p for p, _ in pairs]
    truth = [t for _, t in pairs]
    base = macro_recall(preds, truth, GOLDEN_SIGNALS)

    order = list(range(len(pairs)))
    random.Random(seed).shuffle(order)
    shuffled = macro_recall([preds[i] for i in order], [truth[i] for i in order], GOLDEN_SIGNALS)
    assert shuffled == pytest.approx(base)


def test_fault_categories_cover_spec_set():
    assert set(FAULT_CATEGORIES) == {
        "memory", "network", "authentication", "io", "device", "application", "other",
    }
    assert set(GOLDEN_SIGNALS) == {
        "latency", "traffic", "error", "saturation", "availability", "information",
    }
