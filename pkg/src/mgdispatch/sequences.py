"""Algebra on fixed-step probability sequences.

``seq_add`` convolves two independent generation sequences; ``seq_sub_floor``
forms the equivalent-load sequence (load minus generation) with all negative
outcomes collapsed onto the zero bin.  Sequence lengths stay in the low
hundreds here, so the direct O(N^2) convolution is exact and fast enough.
"""

from __future__ import annotations

import numpy as np

from ._kernels import conv_add, conv_sub_floor
from .probmodel import ProbSeq


def _check_steps(x: ProbSeq, y: ProbSeq) -> None:
    if x.step_q != y.step_q:
        raise ValueError(
            f"step mismatch: {x.step_q} kW vs {y.step_q} kW")


def seq_add(a: ProbSeq, b: ProbSeq) -> ProbSeq:
    """Distribution of the sum of two independent sequences.

    c(i) = sum over ia + ib = i of a(ia) * b(ib); output has
    len(a) + len(b) - 1 entries.
    """
    _check_steps(a, b)
    return ProbSeq(step_q=a.step_q, probs=conv_add(a.probs, b.probs))


def seq_sub_floor(d: ProbSeq, c: ProbSeq) -> ProbSeq:
    """Distribution of max(D - C, 0) for independent sequences d and c.

    e(i) = sum over id - ic = i of d(id) * c(ic) for i >= 1; all outcomes
    with id <= ic are pooled into e(0).  Output has len(d) entries.
    """
    _check_steps(d, c)
    return ProbSeq(step_q=d.step_q, probs=conv_sub_floor(d.probs, c.probs))


def expectation(s: ProbSeq) -> float:
    """Mean power of a sequence: sum_i i * q * s(i), in kW."""
    return float(s.step_q * np.dot(np.arange(s.probs.size), s.probs))


def expected_equivalent_load(d: ProbSeq, a: ProbSeq, b: ProbSeq) -> float:
    """Signed expected net load E[d] - E[a] - E[b], in kW.

    Deliberately not floored at zero: the power-balance constraint uses
    this signed value, while the reserve chance constraint uses the
    floored sequence from :func:`seq_sub_floor`.
    """
    _check_steps(d, a)
    _check_steps(d, b)
    return expectation(d) - expectation(a) - expectation(b)
