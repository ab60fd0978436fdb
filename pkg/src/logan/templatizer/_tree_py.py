"""Pure-Python twin of the clustering kernel.

Same contract as the compiled extension (`_tree_cy`); selected when the
extension is not built or LOGAN_PURE_PYTHON is set.  Keep the two
implementations behaviorally identical: the parity test diffs them on
random inputs.
"""

NAME = "python"
WILDCARD = "<*>"


def best_match(candidates, seq):
    """Return (index, similarity) of the best candidate, or (-1, 0.0).

    Similarity counts positions where the tokens are equal and the
    candidate token is a literal, divided by total length.  Ties keep the
    earliest candidate (assignment order).
    """
    n = len(seq)
    if n == 0 or not candidates:
        return -1, 0.0
    best_i = -1
    best_sim = -1.0
    for i, tokens in enumerate(candidates):
        eq = 0
        for a, b in zip(tokens, seq):
            if a == b and a != WILDCARD:
                eq += 1
        sim = eq / n
        if sim > best_sim:
            best_sim = sim
            best_i = i
    return best_i, best_sim


def merge_tokens(template_tokens, seq):
    """Wildcard every position where the template and sequence differ."""
    return [a if a == b else WILDCARD for a, b in zip(template_tokens, seq)]
