"""Finite-alphabet probability primitives.

All distributions are immutable wrappers around read-only numpy arrays.
Symbols are 0-based integers; optional string labels are carried for I/O only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError, ZeroProbabilityError

PROB_TOL = 1e-12
# Internal products/sums of many terms accumulate rounding beyond PROB_TOL;
# they are checked against this looser bound and then renormalized.
INTERNAL_TOL = 1e-9


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def _check_mass(probs: np.ndarray, what: str, tol: float = PROB_TOL) -> None:
    if not np.all(np.isfinite(probs)):
        raise ValidationError(f"{what}: non-finite entries")
    if np.any(probs < 0):
        idx = tuple(int(i) for i in np.argwhere(probs < 0)[0])
        raise ValidationError(f"{what}: negative entry at index {idx}")
    total = probs.sum()
    if abs(total - 1.0) > tol:
        raise ValidationError(f"{what}: mass {total!r} differs from 1 by more than {tol:g}")


def renormalized(probs, what: str = "table") -> np.ndarray:
    """Divide by the total after checking it is within INTERNAL_TOL of 1."""
    probs = np.asarray(probs, dtype=float)
    probs = np.where(np.abs(probs) < 1e-300, 0.0, probs)
    if np.any(probs < -INTERNAL_TOL):
        raise ValidationError(f"{what}: negative entries beyond rounding")
    probs = np.clip(probs, 0.0, None)
    _check_mass(probs, what, INTERNAL_TOL)
    return probs / probs.sum()


@dataclass(frozen=True, eq=False)
class Pmf:
    probs: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValidationError("Pmf: probs must be a non-empty vector")
        _check_mass(probs, "Pmf")
        object.__setattr__(self, "probs", _frozen(probs))
        if self.labels is not None and len(self.labels) != probs.size:
            raise ValidationError("Pmf: labels length differs from alphabet size")

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    def __len__(self):
        return self.probs.size

    def __repr__(self):
        return f"Pmf({np.array2string(self.probs, precision=6)})"

    @classmethod
    def uniform(cls, size: int) -> "Pmf":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, size: int, symbol: int) -> "Pmf":
        p = np.zeros(size)
        p[symbol] = 1.0
        return cls(p)


@dataclass(frozen=True, eq=False)
class JointDist:
    """Multi-axis probability table. Axis order is meaningful."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim == 0 or probs.size == 0:
            raise ValidationError("JointDist: probs must have at least one axis")
        _check_mass(probs, "JointDist")
        object.__setattr__(self, "probs", _frozen(probs))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.probs.shape

    @property
    def ndim(self) -> int:
        return self.probs.ndim

    def __repr__(self):
        return f"JointDist(shape={self.shape})"

    @classmethod
    def from_unnormalized(cls, table, what: str = "JointDist") -> "JointDist":
        return cls(renormalized(table, what))


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic kernel; ``kernel[x, y] = q(y|x)``."""

    kernel: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=float)
        if k.ndim != 2 or k.size == 0:
            raise ValidationError("Channel: kernel must be a non-empty matrix")
        for row in range(k.shape[0]):
            _check_mass(k[row], f"Channel row {row}")
        object.__setattr__(self, "kernel", _frozen(k))

    @property
    def input_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def output_size(self) -> int:
        return self.kernel.shape[1]

    def __repr__(self):
        return f"Channel({self.input_size}->{self.output_size})"

    def row(self, x: int) -> Pmf:
        return Pmf(self.kernel[x])

    @classmethod
    def from_rows(cls, rows) -> "Channel":
        rows = np.asarray(rows, dtype=float)
        return cls(np.vstack([renormalized(r, "Channel row") for r in rows]))


@dataclass(frozen=True, eq=False)
class TripleDist:
    """p(x,y,u) = pU(u) pXgU(x|u) pYgU(y|u); X - U - Y holds by construction.

    ``pXgU`` and ``pYgU`` are kernels with rows indexed by u.
    """

    pU: Pmf
    pXgU: Channel
    pYgU: Channel

    def __post_init__(self):
        k = self.pU.alphabet_size
        if self.pXgU.input_size != k or self.pYgU.input_size != k:
            raise ValidationError("TripleDist: kernel row counts must equal |U|")
        cap = self.x_size * self.y_size + 1
        if k > cap:
            raise ValidationError(f"TripleDist: |U|={k} exceeds the cardinality cap |X||Y|+1={cap}")

    @property
    def x_size(self) -> int:
        return self.pXgU.output_size

    @property
    def y_size(self) -> int:
        return self.pYgU.output_size

    @property
    def u_size(self) -> int:
        return self.pU.alphabet_size

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.x_size, self.y_size, self.u_size

    def __repr__(self):
        return "TripleDist(|X|={}, |Y|={}, |U|={})".format(*self.sizes)

    @classmethod
    def from_arrays(cls, pU, pXgU, pYgU) -> "TripleDist":
        """Build from raw arrays; rows of unused symbols (pU == 0) may be anything nonnegative."""
        pU = renormalized(pU, "pU")
        pXgU = _fill_rows(np.asarray(pXgU, dtype=float))
        pYgU = _fill_rows(np.asarray(pYgU, dtype=float))
        return cls(Pmf(pU), Channel.from_rows(pXgU), Channel.from_rows(pYgU))


def _fill_rows(k: np.ndarray) -> np.ndarray:
    k = k.copy()
    for row in range(k.shape[0]):
        if k[row].sum() <= 0:
            k[row] = 1.0 / k.shape[1]
    return k


# ---------------------------------------------------------------------------
# operations


def make_pmf(weights: Sequence[float]) -> Pmf:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValidationError("make_pmf: weights must be a non-empty vector")
    bad = np.flatnonzero(~np.isfinite(w) | (w < 0))
    if bad.size:
        raise ValidationError(f"make_pmf: weight at index {int(bad[0])} is negative or non-finite")
    total = w.sum()
    if total <= 0:
        raise ValidationError("make_pmf: all weights are zero (index 0 onward)")
    if abs(total - 1.0) <= PROB_TOL:
        return Pmf(w)
    return Pmf(w / total)


def _axes(axes, ndim: int, what: str) -> tuple[int, ...]:
    if isinstance(axes, (int, np.integer)):
        axes = (int(axes),)
    axes = tuple(sorted(set(int(a) for a in axes)))
    if not axes:
        raise ValidationError(f"{what}: empty axis set")
    if axes[0] < 0 or axes[-1] >= ndim:
        raise ValidationError(f"{what}: axes {axes} out of range for {ndim}-axis table")
    return axes


def marginal_table(probs: np.ndarray, keep_axes) -> np.ndarray:
    keep = _axes(keep_axes, probs.ndim, "marginal")
    drop = tuple(a for a in range(probs.ndim) if a not in keep)
    return probs.sum(axis=drop) if drop else probs


def marginal(j: JointDist, keep_axes) -> JointDist:
    """Sum out every axis not in ``keep_axes``; kept axes stay in ascending order."""
    return JointDist.from_unnormalized(marginal_table(j.probs, keep_axes), "marginal")


def condition(j: JointDist, given_axis: int, given_value: int) -> JointDist:
    """Slice at ``given_axis == given_value`` and renormalize; the axis is removed."""
    (axis,) = _axes(given_axis, j.ndim, "condition")
    if j.ndim < 2:
        raise ValidationError("condition: need at least two axes")
    if not 0 <= given_value < j.shape[axis]:
        raise ValidationError(f"condition: value {given_value} out of range for axis {axis}")
    piece = np.take(j.probs, given_value, axis=axis)
    mass = piece.sum()
    if mass <= 0:
        raise ZeroProbabilityError(f"condition: event axis{axis}={given_value} has probability zero")
    return JointDist(renormalized(piece / mass, "condition"))


def joint_table(t: TripleDist) -> np.ndarray:
    return np.einsum("u,ux,uy->xyu", t.pU.probs, t.pXgU.kernel, t.pYgU.kernel)


def joint_from_markov(t: TripleDist) -> JointDist:
    """Three-axis table ordered (x, y, u)."""
    return JointDist.from_unnormalized(joint_table(t), "joint_from_markov")


def product_joint(p: Pmf, q: Channel) -> JointDist:
    """p(x) q(y|x) as an (x, y) table."""
    if p.alphabet_size != q.input_size:
        raise ValidationError("product_joint: source size differs from channel input size")
    return JointDist.from_unnormalized(p.probs[:, None] * q.kernel, "product_joint")


def iid_prob(p: Pmf, seq: Iterable[int]) -> float:
    """Probability of ``seq`` under the i.i.d. extension of ``p`` (log-domain product)."""
    seq = np.asarray(list(seq), dtype=int)
    if seq.size and (seq.min() < 0 or seq.max() >= p.alphabet_size):
        raise ValidationError("iid_prob: symbol out of range")
    with np.errstate(divide="ignore"):
        logs = np.log(p.probs[seq])
    return float(np.exp(logs.sum()))


def iid_table(p: np.ndarray, n: int) -> np.ndarray:
    """Flat vector of i.i.d. probabilities over all length-n sequences (lexicographic order)."""
    out = np.ones(1)
    for _ in range(n):
        out = np.outer(out, p).ravel()
    return out


def sequences(alphabet: int, n: int) -> np.ndarray:
    """All length-n sequences in lexicographic order, shape (alphabet**n, n)."""
    if n == 0:
        return np.zeros((1, 0), dtype=int)
    grids = np.indices((alphabet,) * n).reshape(n, -1)
    return grids.T.copy()


# ---------------------------------------------------------------------------
# randomness


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator. Accepts an int or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


def split_rng(seed, count: int) -> list[np.random.Generator]:
    """Independent child streams; never share one stream between tasks."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return [make_rng(child) for child in ss.spawn(count)]


def inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized draw: ``cdf[..., k]`` cumulative rows, ``u`` uniforms with matching leading shape."""
    idx = (cdf < u[..., None]).sum(axis=-1)
    # guard against cdf[-1] < 1 by rounding: fall back to the last symbol with positive mass
    last = cdf.shape[-1] - 1 - np.argmax(np.diff(cdf, prepend=0.0, axis=-1)[..., ::-1] > 0, axis=-1)
    return np.minimum(idx, last)


def sample(p: Pmf, rng: np.random.Generator, size=None):
    """Draw symbol(s) from ``p``; identical stream state gives identical draws."""
    cdf = np.cumsum(p.probs)
    if size is None:
        return int(inverse_cdf(cdf, np.asarray(rng.random())))
    return inverse_cdf(cdf, rng.random(size))


# ---------------------------------------------------------------------------
# JSON

def _load(obj, fields: set[str], what: str) -> dict:
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise ValidationError(f"{what}: expected a JSON object")
    extra = set(obj) - fields
    missing = fields - set(obj)
    if extra:
        raise ValidationError(f"{what}: unexpected field(s) {sorted(extra)}")
    if missing:
        raise ValidationError(f"{what}: missing field(s) {sorted(missing)}")
    return obj


def _numbers(value, what: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what}: not a numeric array ({exc})") from None
    return arr


def pmf_to_json(p: Pmf) -> dict:
    return {"probs": p.probs.tolist()}


def pmf_from_json(obj) -> Pmf:
    d = _load(obj, {"probs"}, "Pmf JSON")
    return Pmf(_numbers(d["probs"], "Pmf JSON 'probs'"))


def channel_to_json(c: Channel) -> dict:
    return {"kernel": c.kernel.tolist()}


def channel_from_json(obj) -> Channel:
    d = _load(obj, {"kernel"}, "Channel JSON")
    k = _numbers(d["kernel"], "Channel JSON 'kernel'")
    if k.ndim != 2:
        raise ValidationError("Channel JSON 'kernel': expected a list of equal-length rows")
    return Channel(k)


def joint_to_json(j: JointDist) -> dict:
    return {"shape": list(j.shape), "probs": j.probs.ravel().tolist()}


def joint_from_json(obj) -> JointDist:
    d = _load(obj, {"shape", "probs"}, "JointDist JSON")
    shape = tuple(int(s) for s in d["shape"])
    flat = _numbers(d["probs"], "JointDist JSON 'probs'").ravel()
    if int(np.prod(shape)) != flat.size:
        raise ValidationError(f"JointDist JSON: {flat.size} entries do not fill shape {shape}")
    return JointDist(flat.reshape(shape))


def triple_to_json(t: TripleDist) -> dict:
    return {"pU": t.pU.probs.tolist(), "pXgU": t.pXgU.kernel.tolist(), "pYgU": t.pYgU.kernel.tolist()}


def triple_from_json(obj) -> TripleDist:
    d = _load(obj, {"pU", "pXgU", "pYgU"}, "TripleDist JSON")
    return TripleDist(
        Pmf(_numbers(d["pU"], "TripleDist JSON 'pU'")),
        Channel(_numbers(d["pXgU"], "TripleDist JSON 'pXgU'")),
        Channel(_numbers(d["pYgU"], "TripleDist JSON 'pYgU'")),
    )
