# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled clustering kernel.

Behaviorally identical to `_tree_py`; the hot loops (candidate scan and
token merge) run with C-level indexing instead of Python iteration.
"""

NAME = "cython"

cdef str WILDCARD = "<*>"


def best_match(list candidates, list seq):
    cdef Py_ssize_t n = len(seq)
    cdef Py_ssize_t m = len(candidates)
    cdef Py_ssize_t i, j, eq
    cdef Py_ssize_t best_i = -1
    cdef double best_sim = -1.0
    cdef double sim
    cdef list tokens
    cdef str a, b
    if n == 0 or m == 0:
        return -1, 0.0
    for i in range(m):
        tokens = <list> candidates[i]
        eq = 0
        for j in range(n):
            a = <str> tokens[j]
            b = <str> seq[j]
            if a == b and a != WILDCARD:
                eq += 1
        sim = eq / (<double> n)
        if sim > best_sim:
            best_sim = sim
            best_i = i
    return best_i, best_sim


def merge_tokens(list template_tokens, list seq):
    cdef Py_ssize_t n = len(template_tokens)
    cdef Py_ssize_t i
    cdef list out = [None] * n
    cdef str a, b
    for i in range(n):
        a = <str> template_tokens[i]
        b = <str> seq[i]
        out[i] = a if a == b else WILDCARD
    return out
