"""Job service: schedule analysis jobs, run them on a worker pool, serve results.

State lives in three append-only JSON-lines files under the data directory
(jobs journal, usage stats, feedback) plus a filesystem blob store for
uploads and finished bundles.  The journal is replayed at startup to rebuild
the in-memory index and the FIFO queue; jobs caught mid-run by a crash are
marked failed with reason "interrupted" (at-most-once execution).
"""

from __future__ import annotations

import email.parser
import email.policy
import json
import queue
import threading
import time
import urllib.request
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .config import JobsvcConfig, RunConfig
from .pipeline import analyze_paths
from .util import rfc3339

STATUSES = ("scheduled", "running", "completed", "failed")
Q2_CHOICES = ("none", "1-5m", "6-15m", ">30m")


class JobError(RuntimeError):
    """Service-level failure with an HTTP-ish status code."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class JobStateError(RuntimeError):
    """Illegal status transition."""


def _now() -> datetime:
    return datetime.now(timezone.utc)


# ---------------------------------------------------------------------------
# Blob store


class FileBlobStore:
    """Filesystem-backed store; keys are opaque slash-separated UTF-8."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        path = (self.root / key).resolve()
        if not path.is_relative_to(self.root.resolve()):
            raise ValueError(f"key escapes store root: {key!r}")
        return path

    def put(self, key: str, data: bytes) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)

    def get(self, key: str) -> bytes:
        try:
            return self._path(key).read_bytes()
        except FileNotFoundError:
            raise KeyError(key) from None

    def list(self, prefix: str = "") -> list[str]:
        keys = []
        for path in self.root.rglob("*"):
            if path.is_file():
                key = path.relative_to(self.root).as_posix()
                if key.startswith(prefix):
                    keys.append(key)
        return sorted(keys)

    def delete(self, key: str) -> None:
        self._path(key).unlink(missing_ok=True)

    def local_path(self, key: str) -> Path:
        """Filesystem location of a key (this implementation only)."""
        return self._path(key)


# ---------------------------------------------------------------------------
# Jobs


@dataclass
class Job:
    job_id: str
    status: str = "scheduled"
    submitted: datetime | None = None
    started: datetime | None = None
    finished: datetime | None = None
    input_key: str = ""
    bundle_key: str | None = None
    stats: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "status": self.status,
            "submitted": rfc3339(self.submitted),
            "started": rfc3339(self.started),
            "finished": rfc3339(self.finished),
            "input_key": self.input_key,
            "bundle_key": self.bundle_key,
            "stats": self.stats,
            "error": self.error,
        }

    def _require(self, expected: str) -> None:
        if self.status != expected:
            raise JobStateError(
                f"job {self.job_id}: cannot leave {self.status}, expected {expected}"
            )


class JobService:
    """Queue, worker pool, and persistent job state."""

    def __init__(
        self,
        data_dir: str | Path,
        pool_size: int = 2,
        webhook_url: str | None = None,
        config: RunConfig | None = None,
        runner=None,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.blobs = FileBlobStore(self.data_dir / "blobs")
        self.journal_path = self.data_dir / "jobs.jsonl"
        self.usage_path = self.data_dir / "usage.jsonl"
        self.feedback_path = self.data_dir / "feedback.jsonl"
        self.pool_size = max(1, int(pool_size))
        self.webhook_url = webhook_url
        self.config = config or RunConfig()
        self.runner = runner or self._analyze
        self.warnings: list[str] = []

        self.jobs: dict[str, Job] = {}
        self._queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._workers: list[threading.Thread] = []
        self._stopping = False
        self._replay()

    # -- journal ------------------------------------------------------------

    def _append(self, event: dict) -> None:
        # caller holds the lock; one writer keeps the journal ordered
        with open(self.journal_path, "a", encoding="utf-8") as fp:
            fp.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay(self) -> None:
        order: list[str] = []
        if self.journal_path.exists():
            with open(self.journal_path, encoding="utf-8") as fp:
                for n, line in enumerate(fp, start=1):
                    if not line.strip():
                        continue
                    try:
                        event = json.loads(line)
                    except json.JSONDecodeError:
                        self.warnings.append(f"journal: skipping corrupt line {n}")
                        continue
                    self._apply(event, order)
        with self._lock:
            for job in self.jobs.values():
                if job.status == "running":  # crashed mid-run
                    job.status = "failed"
                    job.error = "interrupted"
                    job.finished = _now()
                    self._append({
                        "event": "failed", "job_id": job.job_id,
                        "finished": rfc3339(job.finished), "error": job.error,
                    })
                    self._usage_record(job)
        for job_id in order:
            if self.jobs[job_id].status == "scheduled":
                self._queue.put(job_id)

    def _apply(self, event: dict, order: list[str]) -> None:
        kind = event.get("event")
        job_id = event.get("job_id", "")

        def when(field_name):
            value = event.get(field_name)
            return datetime.fromisoformat(value.replace("Z", "+00:00")) if value else None

        if kind == "scheduled":
            self.jobs[job_id] = Job(
                job_id=job_id, submitted=when("submitted"),
                input_key=event.get("input_key", ""),
            )
            order.append(job_id)
        elif kind == "started" and job_id in self.jobs:
            job = self.jobs[job_id]
            job.status, job.started = "running", when("started")
        elif kind == "completed" and job_id in self.jobs:
            job = self.jobs[job_id]
            job.status, job.finished = "completed", when("finished")
            job.bundle_key = event.get("bundle_key")
            job.stats = event.get("stats", {})
        elif kind == "failed" and job_id in self.jobs:
            job = self.jobs[job_id]
            job.status, job.finished = "failed", when("finished")
            job.error = event.get("error")

    # -- scheduling ---------------------------------------------------------

    def schedule_upload(self, files: list[tuple[str, bytes]]) -> str:
        if not files or all(len(data) == 0 for _, data in files):
            raise JobError(400, "empty payload: nothing to analyze")
        job_id = uuid.uuid4().hex[:12]
        input_key = f"uploads/{job_id}/"
        try:
            for filename, data in files:
                name = Path(filename).name or "upload.log"
                self.blobs.put(input_key + name, data)
        except OSError as exc:
            raise JobError(503, f"storage failure: {exc}") from exc
        return self._enqueue(job_id, input_key)

    def schedule_path(self, path: str) -> str:
        if not path:
            raise JobError(400, "empty payload: missing path")
        if not Path(path).exists():
            raise JobError(400, f"no such path: {path}")
        job_id = uuid.uuid4().hex[:12]
        input_key = f"local:{path}"
        try:
            # persist the request itself so the journal alone can replay it
            self.blobs.put(f"uploads/{job_id}/manifest.json",
                           json.dumps({"path": path}).encode())
        except OSError as exc:
            raise JobError(503, f"storage failure: {exc}") from exc
        return self._enqueue(job_id, input_key)

    def _enqueue(self, job_id: str, input_key: str) -> str:
        job = Job(job_id=job_id, submitted=_now(), input_key=input_key)
        with self._lock:
            self.jobs[job_id] = job
            self._append({
                "event": "scheduled", "job_id": job_id,
                "submitted": rfc3339(job.submitted), "input_key": input_key,
            })
        self._queue.put(job_id)
        return job_id

    # -- queries ------------------------------------------------------------

    def query(self, job_id: str) -> Job:
        try:
            return self.jobs[job_id]
        except KeyError:
            raise JobError(404, f"unknown job: {job_id}") from None

    def get_bundle(self, job_id: str) -> bytes:
        job = self.query(job_id)
        if job.status != "completed" or not job.bundle_key:
            raise JobError(404, f"job {job_id} has no bundle (status {job.status})")
        return self.blobs.get(job.bundle_key)

    def usage_snapshot(self) -> str:
        if not self.usage_path.exists():
            return ""
        return self.usage_path.read_text(encoding="utf-8")

    # -- feedback -----------------------------------------------------------

    def feedback(self, job_id: str, q1_useful: str, q2_time_saved: str,
                 q3_text: str = "") -> dict:
        self.query(job_id)  # 404 on unknown job
        if q1_useful not in ("yes", "no"):
            raise JobError(400, f"q1_useful must be yes/no, got {q1_useful!r}")
        if q2_time_saved not in Q2_CHOICES:
            raise JobError(400, f"q2_time_saved must be one of {Q2_CHOICES}")
        entry = {
            "job_id": job_id, "q1_useful": q1_useful,
            "q2_time_saved": q2_time_saved, "q3_text": q3_text,
            "submitted": rfc3339(_now()),
        }
        with self._lock:
            with open(self.feedback_path, "a", encoding="utf-8") as fp:
                fp.write(json.dumps(entry, sort_keys=True) + "\n")
        return entry

    def feedback_aggregate(self) -> dict:
        entries = []
        if self.feedback_path.exists():
            with open(self.feedback_path, encoding="utf-8") as fp:
                entries = [json.loads(line) for line in fp if line.strip()]
        histogram = {choice: 0 for choice in Q2_CHOICES}
        useful = 0
        for entry in entries:
            useful += entry["q1_useful"] == "yes"
            histogram[entry["q2_time_saved"]] += 1
        return {
            "count": len(entries),
            "useful_rate": useful / len(entries) if entries else None,
            "q2_histogram": histogram,
        }

    # -- workers ------------------------------------------------------------

    def start(self) -> None:
        self._stopping = False
        for i in range(self.pool_size):
            worker = threading.Thread(
                target=self._worker_loop, name=f"logan-worker-{i}", daemon=True
            )
            worker.start()
            self._workers.append(worker)

    def stop(self) -> None:
        self._stopping = True
        for _ in self._workers:
            self._queue.put(None)
        for worker in self._workers:
            worker.join(timeout=30)
        self._workers.clear()

    def _worker_loop(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is None or self._stopping:
                return
            try:
                self._run_job(job_id)
            except Exception:  # per-job failure never kills the worker
                pass

    def _input_paths(self, job: Job) -> list[str]:
        if job.input_key.startswith("local:"):
            return [job.input_key[len("local:"):]]
        return [str(self.blobs.local_path(job.input_key))]

    def _analyze(self, job: Job, paths: list[str]) -> tuple[str, dict]:
        t0 = time.perf_counter()
        result = analyze_paths(paths, cfg=self.config)
        stats = {
            "files": len(result.stream.files),
            "bytes": sum(f.byte_size for f in result.stream.files),
            "lines": result.stream.total_lines,
            "wall_time": dict(result.stats.wall_time, job=time.perf_counter() - t0),
        }
        return result.bundle.to_json(), stats

    def _run_job(self, job_id: str) -> None:
        with self._lock:
            job = self.jobs[job_id]
            job._require("scheduled")
            job.status, job.started = "running", _now()
            self._append({
                "event": "started", "job_id": job_id,
                "started": rfc3339(job.started),
            })
        try:
            bundle_text, stats = self.runner(job, self._input_paths(job))
            bundle_key = f"bundles/{job_id}.json"
            self.blobs.put(bundle_key, bundle_text.encode("utf-8"))
            with self._lock:
                job._require("running")
                job.status, job.finished = "completed", _now()
                job.bundle_key, job.stats = bundle_key, stats
                self._append({
                    "event": "completed", "job_id": job_id,
                    "finished": rfc3339(job.finished),
                    "bundle_key": bundle_key, "stats": stats,
                })
                self._usage_record(job)
        except Exception as exc:
            with self._lock:
                job._require("running")
                job.status, job.finished = "failed", _now()
                job.error = f"{type(exc).__name__}: {exc}"
                self._append({
                    "event": "failed", "job_id": job_id,
                    "finished": rfc3339(job.finished), "error": job.error,
                })
                self._usage_record(job)
        self._fire_webhook(job)

    def _usage_record(self, job: Job) -> None:
        # caller holds the lock; exactly one record per terminal job
        record = {
            "job_id": job.job_id, "status": job.status,
            "submitted": rfc3339(job.submitted), "started": rfc3339(job.started),
            "finished": rfc3339(job.finished),
            "files": job.stats.get("files"), "bytes": job.stats.get("bytes"),
            "lines": job.stats.get("lines"),
            "wall_time": job.stats.get("wall_time"), "error": job.error,
        }
        with open(self.usage_path, "a", encoding="utf-8") as fp:
            fp.write(json.dumps(record, sort_keys=True) + "\n")

    def _fire_webhook(self, job: Job) -> None:
        if not self.webhook_url:
            return
        payload = json.dumps({
            "job_id": job.job_id, "status": job.status, "error": job.error,
        }).encode()
        request = urllib.request.Request(
            self.webhook_url, data=payload,
            headers={"Content-Type": "application/json"}, method="POST",
        )
        try:
            urllib.request.urlopen(request, timeout=5).close()
        except Exception as exc:
            self.warnings.append(f"webhook: delivery failed ({exc})")


def service_from_config(cfg: RunConfig, runner=None) -> JobService:
    js: JobsvcConfig = cfg.jobsvc
    return JobService(
        data_dir=js.data_dir,
        pool_size=js.pool_size,
        webhook_url=js.webhook_url,
        config=cfg,
        runner=runner,
    )


# ---------------------------------------------------------------------------
# HTTP layer


def parse_multipart(content_type: str, body: bytes) -> list[tuple[str, bytes]]:
    """File parts of a multipart/form-data payload as (filename, bytes)."""
    head = f"Content-Type: {content_type}\r\nMIME-Version: 1.0\r\n\r\n".encode()
    message = email.parser.BytesParser(policy=email.policy.HTTP).parsebytes(head + body)
    if not message.is_multipart():
        raise JobError(400, "expected a multipart/form-data body")
    files = []
    for part in message.iter_parts():
        filename = part.get_filename()
        if filename:
            files.append((filename, part.get_payload(decode=True) or b""))
    return files


class _Handler(BaseHTTPRequestHandler):
    service: JobService  # set by make_server

    def log_message(self, *args):  # quiet by default
        pass

    def _send(self, code: int, payload, content_type="application/json"):
        body = payload if isinstance(payload, bytes) else (
            json.dumps(payload, sort_keys=True) + "\n"
        ).encode()
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _json_body(self) -> dict:
        try:
            data = json.loads(self._body() or b"{}")
        except json.JSONDecodeError as exc:
            raise JobError(400, f"invalid JSON body: {exc}") from exc
        if not isinstance(data, dict):
            raise JobError(400, "JSON body must be an object")
        return data

    def do_POST(self):
        route = urlparse(self.path).path
        try:
            if route == "/schedule":
                content_type = self.headers.get("Content-Type", "")
                if content_type.startswith("multipart/form-data"):
                    files = parse_multipart(content_type, self._body())
                    job_id = self.service.schedule_upload(files)
                else:
                    data = self._json_body()
                    job_id = self.service.schedule_path(str(data.get("path", "")))
                self._send(200, {"job_id": job_id, "status": "scheduled"})
            elif route == "/feedback":
                data = self._json_body()
                self.service.feedback(
                    str(data.get("job_id", "")),
                    str(data.get("q1_useful", "")),
                    str(data.get("q2_time_saved", "")),
                    str(data.get("q3_text", "")),
                )
                self._send(200, {"ok": True})
            else:
                self._send(404, {"error": f"no such route: {route}"})
        except JobError as exc:
            self._send(exc.code, {"error": str(exc)})

    def do_GET(self):
        url = urlparse(self.path)
        params = parse_qs(url.query)
        job_id = (params.get("job_id") or [""])[0]
        try:
            if url.path == "/query":
                self._send(200, self.service.query(job_id).to_dict())
            elif url.path == "/bundle":
                self._send(200, self.service.get_bundle(job_id))
            elif url.path == "/stats":
                self._send(200, self.service.usage_snapshot().encode(),
                           content_type="application/x-ndjson")
            elif url.path == "/feedback":
                self._send(200, self.service.feedback_aggregate())
            else:
                self._send(404, {"error": f"no such route: {url.path}"})
        except JobError as exc:
            self._send(exc.code, {"error": str(exc)})

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()


def make_server(service: JobService, host: str = "127.0.0.1", port: int = 8080):
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def serve(cfg: RunConfig) -> None:
    """Blocking entrypoint: start workers and serve HTTP until interrupted."""
    service = service_from_config(cfg)
    service.start()
    server = make_server(service, cfg.jobsvc.host, cfg.jobsvc.port)
    print(f"serving on http://{cfg.jobsvc.host}:{server.server_address[1]} "
          f"(pool={service.pool_size}, data={service.data_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        service.stop()
