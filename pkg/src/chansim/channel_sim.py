"""Random-codebook channel simulation at finite block length.

A code is a table of u-sequences U^n(i, j), indexed by the description i and
the common-randomness index j. The encoder sees (x^n, j) and draws i with
probability proportional to prod_k p(x_k | U_k(i, j)); the decoder draws each
y_k from p(y | U_k(i, j)). For small n every distribution involved is
enumerated exactly.

Indices are 0-based throughout: i in range(N1), j in range(N2).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, ConsistencyError, ValidationError, ZeroProbabilityError
from .info_measures import entropy_table, total_variation
from .prob_core import (Channel, JointDist, Pmf, TripleDist, inverse_cdf, iid_table, joint_table,
                        make_rng, sequences)
from .rate_region import g_epsilon

CAP_WORDS = 2 ** 20
CAP_ENUM = 2 ** 24
CHAIN_TOL = 1e-9


def codebook_size(n: int, rate: float) -> int:
    """ceil(2^{nR}); the small guard keeps exact powers of two from rounding up."""
    return int(math.ceil(2.0 ** (n * rate) - 1e-9))


@dataclass(frozen=True, eq=False)
class Codebook:
    n: int
    r1: float
    r2: float
    u_alphabet: int
    words: np.ndarray  # (N1, N2, n) integer symbols
    seed: int | None = None

    def __post_init__(self):
        w = np.asarray(self.words)
        n1, n2 = codebook_size(self.n, self.r1), codebook_size(self.n, self.r2)
        if w.shape != (n1, n2, self.n):
            raise ValidationError(f"codebook words have shape {w.shape}, expected {(n1, n2, self.n)}")
        if w.size and (w.min() < 0 or w.max() >= self.u_alphabet):
            raise ValidationError("codebook symbol out of range")
        w = w.astype(np.int64)
        w.setflags(write=False)
        object.__setattr__(self, "words", w)

    @property
    def n1(self) -> int:
        return self.words.shape[0]

    @property
    def n2(self) -> int:
        return self.words.shape[1]

    def flat(self) -> np.ndarray:
        """All codewords as one list indexed by m = i * N2 + j."""
        return self.words.reshape(-1, self.n)

    def to_json(self) -> dict:
        return {"n": self.n, "r1": self.r1, "r2": self.r2, "seed": self.seed, "words": self.words.tolist()}

    @classmethod
    def from_json(cls, obj, u_alphabet: int | None = None) -> "Codebook":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        fields = {"n", "r1", "r2", "seed", "words"}
        if not isinstance(obj, dict) or set(obj) != fields:
            got = sorted(obj) if isinstance(obj, dict) else type(obj).__name__
            raise ValidationError(f"codebook JSON must have exactly the fields {sorted(fields)}, got {got}")
        n = int(obj["n"])
        words = np.asarray(obj["words"], dtype=np.int64)
        if words.ndim != 3:
            words = words.reshape(codebook_size(n, obj["r1"]), codebook_size(n, obj["r2"]), n)
        if u_alphabet is None:
            u_alphabet = int(words.max()) + 1 if words.size else 1
        seed = obj["seed"]
        return cls(n, float(obj["r1"]), float(obj["r2"]), u_alphabet, words, None if seed is None else int(seed))


def draw_codebook(pU: Pmf, n: int, r1: float, r2: float, seed: int, cap_words: int = CAP_WORDS) -> Codebook:
    """i.i.d. draws from pU for every entry of the (N1, N2, n) table."""
    if n < 1:
        raise ValidationError("block length must be at least 1")
    if r1 < 0 or r2 < 0:
        raise ValidationError("rates must be nonnegative")
    n1, n2 = codebook_size(n, r1), codebook_size(n, r2)
    if n1 * n2 > cap_words:
        raise CapExceededError(
            f"codebook needs {n1}x{n2} = {n1 * n2} words, above the cap {cap_words}; reduce n or the rates")
    rng = make_rng(seed)
    words = inverse_cdf(np.cumsum(pU.probs), rng.random((n1, n2, n)))
    return Codebook(n, float(r1), float(r2), pU.alphabet_size, words, int(seed))


def softcover_tv(codebook: Codebook, pVgU: Channel, pV_target: Pmf, cap_enum: int = CAP_ENUM) -> float:
    """Exact TV between the codebook-induced law of V^n and the i.i.d. target.

    The codebook is read as a flat list of M words, each used with probability 1/M.
    """
    n = codebook.n
    nv = pVgU.output_size
    if nv ** n > cap_enum:
        raise CapExceededError(f"|V|^n = {nv}^{n} exceeds the enumeration cap {cap_enum}; reduce n")
    if pVgU.input_size != codebook.u_alphabet or pV_target.alphabet_size != nv:
        raise ValidationError("softcover_tv: kernel and target sizes do not match the codebook")
    words = codebook.flat()
    M = words.shape[0]
    K = pVgU.kernel
    Q = np.zeros(nv ** n)
    chunk = max(1, (1 << 22) // nv ** n)
    for s in range(0, M, chunk):
        block = words[s:s + chunk]
        acc = np.ones((block.shape[0], 1))
        for k in range(n):
            acc = (acc[:, :, None] * K[block[:, k]][:, None, :]).reshape(block.shape[0], -1)
        Q += acc.sum(axis=0)
    Q /= M
    return total_variation(Q, iid_table(pV_target.probs, n))


# ---------------------------------------------------------------------------
# codes


@dataclass(frozen=True, eq=False)
class SimulationCode:
    codebook: Codebook
    triple: TripleDist
    source: Pmf
    channel: Channel

    def __post_init__(self):
        t = self.triple
        if t.u_size != self.codebook.u_alphabet:
            raise ValidationError("triple |U| differs from the codebook alphabet")
        if (t.x_size, t.y_size) != (self.source.alphabet_size, self.channel.output_size):
            raise ValidationError("triple alphabets differ from the source and channel")
        pxy = joint_table(t).sum(axis=2)
        gap = total_variation(pxy, self.source.probs[:, None] * self.channel.kernel)
        if gap > 1e-9:
            raise ValidationError(f"triple marginal is {gap:.3g} away from the target in TV")

    @classmethod
    def from_triple(cls, codebook: Codebook, triple: TripleDist) -> "SimulationCode":
        """Take the target to be the (X,Y) marginal of the triple itself."""
        pxy = joint_table(triple).sum(axis=2)
        px = pxy.sum(axis=1)
        q = np.full_like(pxy, 1.0 / pxy.shape[1])
        live = px > 0
        q[live] = pxy[live] / px[live, None]
        return cls(codebook, triple, Pmf(px / px.sum()), Channel.from_rows(q))

    @property
    def n(self) -> int:
        return self.codebook.n

    @property
    def pXgU(self) -> np.ndarray:
        return self.triple.pXgU.kernel

    @property
    def pYgU(self) -> np.ndarray:
        return self.triple.pYgU.kernel


def _log(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


def _posterior_rows(loglik: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalize log-likelihood rows; rows with no finite entry become uniform.

    Returns (posterior, dead) where ``dead`` flags the fallback rows.
    """
    top = loglik.max(axis=-1, keepdims=True)
    dead = ~np.isfinite(top[..., 0])
    top = np.where(np.isfinite(top), top, 0.0)
    w = np.exp(loglik - top)
    w[dead] = 1.0
    return w / w.sum(axis=-1, keepdims=True), dead


def encoder_posterior(code: SimulationCode, xseq, j: int) -> Pmf:
    """p(i | x^n, j) proportional to prod_k p(x_k | U_k(i, j))."""
    xseq = np.asarray(xseq, dtype=int)
    if xseq.shape != (code.n,):
        raise ValidationError(f"xseq must have length {code.n}")
    if xseq.min() < 0 or xseq.max() >= code.triple.x_size:
        raise ValidationError("xseq symbol out of range")
    if not 0 <= j < code.codebook.n2:
        raise ValidationError(f"j={j} out of range")
    words = code.codebook.words[:, j, :]
    loglik = _log(code.pXgU[words, xseq[None, :]]).sum(axis=1)
    if not np.isfinite(loglik).any():
        raise ZeroProbabilityError(f"no codeword in bin j={j} can produce xseq={tuple(xseq.tolist())}")
    post, _ = _posterior_rows(loglik)
    return Pmf(post / post.sum())


def decode_sample(code: SimulationCode, i: int, j: int, rng: np.random.Generator) -> np.ndarray:
    """y_k drawn independently from p(y | U_k(i, j))."""
    if not (0 <= i < code.codebook.n1 and 0 <= j < code.codebook.n2):
        raise ValidationError(f"index pair ({i}, {j}) out of range")
    u = code.codebook.words[i, j]
    cdf = np.cumsum(code.pYgU, axis=1)
    return inverse_cdf(cdf[u], rng.random(code.n))


@dataclass(eq=False)
class InducedDist:
    """Exact law of (x^n, y^n, i, j); sequence axes are flattened lexicographically."""

    n: int
    x_size: int
    y_size: int
    joint: JointDist
    epsilon: float
    fallback_mass: float = 0.0  # probability of (x^n, j) pairs no codeword can explain
    source_gap: float = 0.0

    @property
    def n1(self) -> int:
        return self.joint.shape[2]

    @property
    def n2(self) -> int:
        return self.joint.shape[3]

    def xy_marginal(self) -> np.ndarray:
        return self.joint.probs.sum(axis=(2, 3))

    def letters(self) -> np.ndarray:
        """Table with axes (x_1..x_n, y_1..y_n, i, j)."""
        shape = (self.x_size,) * self.n + (self.y_size,) * self.n + (self.n1, self.n2)
        return self.joint.probs.reshape(shape)


def enumeration_size(code: SimulationCode) -> int:
    t = code.triple
    return t.x_size ** code.n * t.y_size ** code.n * code.codebook.n1 * code.codebook.n2


def _encoder_table(code: SimulationCode) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Posterior p(i | x^n, j) as (Xn, N1, N2), fallback flags (Xn, N2), x sequences."""
    xs = sequences(code.triple.x_size, code.n)
    words = code.codebook.words  # (N1, N2, n)
    lx = _log(code.pXgU)  # (U, X)
    loglik = np.zeros((xs.shape[0], code.codebook.n1, code.codebook.n2))
    for k in range(code.n):
        loglik += lx[words[None, :, :, k], xs[:, k, None, None]]
    post, dead = _posterior_rows(np.moveaxis(loglik, 1, 2))  # (Xn, N2, N1)
    return np.moveaxis(post, 2, 1), dead, xs


def _decoder_table(code: SimulationCode) -> np.ndarray:
    """p(y^n | i, j) as (N1, N2, Yn)."""
    words = code.codebook.words
    K = code.pYgU
    acc = np.ones(words.shape[:2] + (1,))
    for k in range(code.n):
        acc = (acc[..., :, None] * K[words[..., k]][..., None, :]).reshape(words.shape[:2] + (-1,))
    return acc


def induced_distribution_exact(code: SimulationCode, cap_enum: int = CAP_ENUM) -> InducedDist:
    size = enumeration_size(code)
    if size > cap_enum:
        raise CapExceededError(
            f"exact enumeration needs {size} table entries, above the cap {cap_enum}; reduce n or the rates")
    n, n1, n2 = code.n, code.codebook.n1, code.codebook.n2
    px = iid_table(code.source.probs, n)
    post, dead, _ = _encoder_table(code)
    dec = _decoder_table(code)
    # p(x, y, i, j) = p(j) p(x) p(i|x,j) p(y|i,j)
    joint = np.einsum("x,xij,ijy->xyij", px / n2, post, dec)
    total = joint.sum()
    if abs(total - 1.0) > 1e-9:
        raise ConsistencyError(f"induced table has mass {total!r}")
    joint /= total
    fallback = float((px[:, None] * dead).sum() / n2)
    target = iid_table((code.source.probs[:, None] * code.channel.kernel).ravel(), n)
    # reorder target from interleaved (x1 y1 x2 y2 ...) to (x1..xn, y1..yn)
    nx, ny = code.triple.x_size, code.triple.y_size
    target = target.reshape((nx, ny) * n).transpose(list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)))
    target = target.reshape(nx ** n, ny ** n)
    eps = total_variation(joint.sum(axis=(2, 3)), target)
    xj = joint.sum(axis=(1, 2))
    source_gap = total_variation(xj, np.outer(px, np.full(n2, 1.0 / n2)))
    if source_gap > 1e-9:
        raise ConsistencyError(f"source marginal moved by {source_gap:.3g} in TV")
    return InducedDist(n, nx, ny, JointDist(joint), float(eps), fallback, float(source_gap))


def simulate_batch(code: SimulationCode, num_blocks: int, rng: np.random.Generator,
                   chunk: int = 8192) -> tuple[np.ndarray, np.ndarray]:
    """Run the code on ``num_blocks`` independent source blocks.

    Returns (xs, ys), each of shape (num_blocks, n). Pairs (x^n, j) that no
    codeword can explain are encoded with a uniform i, as in the exact table.
    """
    n, n1, n2 = code.n, code.codebook.n1, code.codebook.n2
    cdf_x = np.cumsum(code.source.probs)
    cdf_y = np.cumsum(code.pYgU, axis=1)
    lx = _log(code.pXgU)
    xs = np.empty((num_blocks, n), dtype=np.int64)
    ys = np.empty((num_blocks, n), dtype=np.int64)
    words = code.codebook.words
    for s in range(0, num_blocks, chunk):
        b = min(chunk, num_blocks - s)
        x = inverse_cdf(cdf_x, rng.random((b, n)))
        j = rng.integers(n2, size=b)
        cand = words[:, j, :]  # (N1, b, n)
        loglik = lx[cand, x[None]].sum(axis=2).T  # (b, N1)
        post, _ = _posterior_rows(loglik)
        i = inverse_cdf(np.cumsum(post, axis=1), rng.random(b))
        u = words[i, j]  # (b, n)
        y = inverse_cdf(cdf_y[u], rng.random((b, n)))
        xs[s:s + b] = x
        ys[s:s + b] = y
    return xs, ys


# ---------------------------------------------------------------------------
# converse


@dataclass(eq=False)
class ConverseReport:
    n: int
    r1: float
    r2: float
    r1_eff: float  # log2(N1)/n, the rate the code actually uses
    r2_eff: float
    epsilon: float
    h_i: float
    h_i_given_j: float
    h_ij: float
    i_x_j: float
    i_x_ij: float
    i_xy_ij: float
    per_letter_i_xu: float
    per_letter_i_xyu: float
    entropy_gap: float  # |H(X^n,Y^n) - sum_k H(X_k,Y_k)|
    i_xy_k: float  # I(X_K,Y_K;K)
    g_eps: float | None
    relaxed_checked: bool
    violations: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _mi(p: np.ndarray, a, b) -> float:
    """I(A;B) from a table; axes given as tuples."""
    keep = tuple(sorted(a + b))
    drop = tuple(k for k in range(p.ndim) if k not in keep)
    pab = p.sum(axis=drop) if drop else p
    pos = {ax: i for i, ax in enumerate(keep)}
    pa = pab.sum(axis=tuple(pos[k] for k in b))
    pb = pab.sum(axis=tuple(pos[k] for k in a))
    return entropy_table(pa) + entropy_table(pb) - entropy_table(pab)


def verify_converse(ind: InducedDist, r1: float, r2: float) -> ConverseReport:
    """Evaluate every quantity of the converse chain on an exact induced law.

    The first two chains hold for any code whatsoever; a violation beyond 1e-9
    raises ConsistencyError. The relaxed per-letter bounds are checked only
    when 0 < epsilon < 1/4, where the slack g(epsilon) is defined.
    """
    n = ind.n
    n1, n2 = ind.n1, ind.n2
    P = ind.joint.probs  # (Xn, Yn, I, J)
    r1_eff, r2_eff = math.log2(n1) / n, math.log2(n2) / n
    pij = P.sum(axis=(0, 1))
    h_i = entropy_table(pij.sum(axis=1))
    h_j = entropy_table(pij.sum(axis=0))
    h_ij = entropy_table(pij)
    i_x_j = _mi(P, (0,), (3,))
    i_x_ij = _mi(P, (0,), (2, 3))
    i_x_i_given_j = h_ij - h_j - (entropy_table(P.sum(axis=1)) - entropy_table(P.sum(axis=(1, 2))))
    i_xy_ij = _mi(P, (0, 1), (2, 3))

    # per-letter law p(x_k, y_k, i, j, k) with K uniform on the block
    L = ind.letters()
    per = np.zeros((ind.x_size, ind.y_size, n1, n2, n))
    for k in range(n):
        drop = tuple(a for a in range(2 * n) if a not in (k, n + k))
        per[..., k] = L.sum(axis=drop) / n
    pl_xu = _mi(per, (0,), (2, 3, 4))
    pl_xyu = _mi(per, (0, 1), (2, 3, 4))
    i_xy_k = _mi(per, (0, 1), (4,))
    h_xy_n = entropy_table(P.sum(axis=(2, 3)))
    h_letters = sum(entropy_table(per[..., k].sum(axis=(2, 3)) * n) for k in range(n))
    entropy_gap = abs(h_xy_n - h_letters)

    bad = []

    def need(lhs, rhs, label):
        if lhs < rhs - CHAIN_TOL:
            bad.append(f"{label}: {lhs:.12g} < {rhs:.12g}")

    need(n * r1_eff, h_i, "n R1 >= H(I)")
    need(h_i, h_ij - h_j, "H(I) >= H(I|J)")
    need(h_ij - h_j, i_x_i_given_j, "H(I|J) >= I(X^n;I|J)")
    need(CHAIN_TOL, abs(i_x_ij - i_x_i_given_j), "I(X^n;I|J) = I(X^n;I,J)")
    need(n * (r1_eff + r2_eff), h_ij, "n(R1+R2) >= H(I,J)")
    need(h_ij, i_xy_ij, "H(I,J) >= I(X^n,Y^n;I,J)")
    # the source block is exactly i.i.d., so the X-only chain needs no slack
    need(i_x_ij, n * pl_xu, "I(X^n;I,J) >= n I(X_K;I,J,K)")

    eps = ind.epsilon
    g = None
    relaxed = 0.0 < eps < 0.25
    if eps <= 1e-12:
        g, relaxed = 0.0, True
    elif relaxed:
        g = g_epsilon(eps, ind.x_size, ind.y_size).g_value
    if relaxed:
        need(n * g, entropy_gap, "|H(X^n,Y^n) - sum H(X_k,Y_k)| <= n g")
        need(n * g, i_xy_k, "I(X_K,Y_K;K) <= n g")
        need(i_xy_ij, n * pl_xyu - 2 * n * g, "I(X^n,Y^n;I,J) >= n I(X_K,Y_K;I,J,K) - 2n g")
        need(r1_eff, pl_xu - 2 * g, "R1 >= I(X;U) - 2g")
        need(r1_eff + r2_eff, pl_xyu - 2 * g, "R1+R2 >= I(X,Y;U) - 2g")
    report = ConverseReport(n, float(r1), float(r2), r1_eff, r2_eff, float(eps), h_i, h_ij - h_j, h_ij, i_x_j,
                            i_x_ij, i_xy_ij, pl_xu, pl_xyu, entropy_gap, i_xy_k, g, relaxed, bad)
    if bad:
        raise ConsistencyError("converse chain violated: " + "; ".join(bad))
    return report
