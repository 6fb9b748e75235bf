"""Entropy, mutual information and total variation. Everything is in bits."""
from __future__ import annotations

import numpy as np

from .errors import ConsistencyError, ValidationError
from .prob_core import JointDist, Pmf, marginal_table

CLAMP_TOL = 1e-10


def _table(p) -> np.ndarray:
    if isinstance(p, (Pmf, JointDist)):
        return p.probs
    return np.asarray(p, dtype=float)


def _clamp(v: float, what: str) -> float:
    if v < 0:
        if v < -CLAMP_TOL:
            raise ConsistencyError(f"{what} = {v:.3e} is negative beyond rounding")
        return 0.0
    return float(v)


def entropy_table(probs: np.ndarray) -> float:
    p = probs[probs > 0]
    return float(-(p * np.log2(p)).sum())


def entropy(p) -> float:
    """H(p) = -sum p log2 p with 0 log 0 = 0."""
    return _clamp(entropy_table(_table(p)), "entropy")


def binary_entropy(a: float) -> float:
    if not 0.0 <= a <= 1.0:
        raise ValidationError(f"binary_entropy: argument {a!r} outside [0, 1]")
    return entropy_table(np.array([a, 1.0 - a]))


def _axis_sets(ndim: int, *sets) -> list[tuple[int, ...]]:
    out = []
    seen: set[int] = set()
    for s in sets:
        s = (int(s),) if isinstance(s, (int, np.integer)) else tuple(int(a) for a in s)
        if not s:
            raise ValidationError("empty axis set")
        if any(a < 0 or a >= ndim for a in s):
            raise ValidationError(f"axes {s} out of range for a {ndim}-axis table")
        if seen & set(s):
            raise ValidationError(f"overlapping axis sets: {sets}")
        seen |= set(s)
        out.append(s)
    return out


def _h(probs: np.ndarray, axes) -> float:
    return entropy_table(marginal_table(probs, axes))


def mutual_information(j, axes_a, axes_b) -> float:
    probs = _table(j)
    a, b = _axis_sets(probs.ndim, axes_a, axes_b)
    v = _h(probs, a) + _h(probs, b) - _h(probs, a + b)
    return _clamp(v, "mutual information")


def conditional_mutual_information(j, axes_a, axes_b, axes_c) -> float:
    probs = _table(j)
    a, b, c = _axis_sets(probs.ndim, axes_a, axes_b, axes_c)
    v = _h(probs, a + c) + _h(probs, b + c) - _h(probs, a + b + c) - _h(probs, c)
    return _clamp(v, "conditional mutual information")


def total_variation(p, q) -> float:
    """Half the L1 distance between two tables of identical shape."""
    a, b = _table(p), _table(q)
    if a.shape != b.shape:
        raise ValidationError(f"total_variation: shape mismatch {a.shape} vs {b.shape}")
    return float(0.5 * np.abs(a - b).sum())


def triple_informations(pU: np.ndarray, pXgU: np.ndarray, pYgU: np.ndarray) -> tuple[float, float]:
    """(I(X;U), I(X,Y;U)) for the factored triple, straight from the kernels."""
    pxyu = np.einsum("u,ux,uy->xyu", pU, pXgU, pYgU)
    ixu = mutual_information(pxyu, 0, 2)
    ixyu = mutual_information(pxyu, (0, 1), 2)
    return ixu, ixyu
