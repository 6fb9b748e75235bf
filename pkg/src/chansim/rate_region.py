"""Simulation rate region: membership certificates, boundary search, common information.

A rate pair (r1, r2) is in the region when some triple p(x,y,u) with the
target (X,Y) marginal, X - U - Y Markov and |U| <= |X||Y| + 1 satisfies

    r1 >= I(X;U)        and        r1 + r2 >= I(X,Y;U).

The lower boundary r1(r2) = min over triples of max(I(X;U), I(X,Y;U) - r2) is
searched numerically. All returned values are upper bounds on the true
boundary: the search is local, although every reported point carries a triple
that provably achieves it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._decomp import CertificatePool, Decomposition, DecompositionProblem
from .errors import ValidationError
from .info_measures import total_variation, triple_informations
from .prob_core import Channel, JointDist, Pmf, TripleDist, make_rng, product_joint, renormalized

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    source: Pmf
    channel: Channel
    u_cardinality: int | None = None

    def __post_init__(self):
        if self.source.alphabet_size != self.channel.input_size:
            raise ValidationError("ProblemSpec: source size differs from channel input size")
        if self.u_cardinality is None:
            object.__setattr__(self, "u_cardinality", self.u_cap)
        if not 1 <= self.u_cardinality <= self.u_cap:
            raise ValidationError(f"ProblemSpec: u_cardinality must lie in [1, {self.u_cap}]")

    @property
    def x_size(self) -> int:
        return self.source.alphabet_size

    @property
    def y_size(self) -> int:
        return self.channel.output_size

    @property
    def u_cap(self) -> int:
        return self.x_size * self.y_size + 1

    @property
    def target(self) -> JointDist:
        return product_joint(self.source, self.channel)

    @classmethod
    def from_joint(cls, pXY: JointDist, u_cardinality: int | None = None) -> "ProblemSpec":
        P = pXY.probs
        if P.ndim != 2:
            raise ValidationError("expected a two-axis joint p(x,y)")
        px = P.sum(axis=1)
        Q = np.full_like(P, 1.0 / P.shape[1])
        live = px > 0
        Q[live] = P[live] / px[live, None]
        return cls(Pmf(renormalized(px)), Channel.from_rows(Q), u_cardinality)


@dataclass(frozen=True)
class RatePoint:
    r1: float
    r2: float

    def __post_init__(self):
        if not (self.r1 >= 0 and self.r2 >= 0):
            raise ValidationError(f"RatePoint: rates must be nonnegative, got ({self.r1}, {self.r2})")


@dataclass(frozen=True, eq=False)
class RegionCertificate:
    triple: TripleDist
    i_xu: float
    i_xyu: float
    marginal_gap: float
    accepted: bool = True
    violations: tuple[str, ...] = ()

    def value(self, r2: float) -> float:
        """Smallest r1 this triple certifies at ``r2``."""
        return max(self.i_xu, self.i_xyu - r2)


@dataclass(frozen=True)
class EpsilonParams:
    epsilon: float
    g_value: float


@dataclass
class OptimizerOptions:
    n_restarts: int = 64
    seed: int = 0
    tol: float = MEMBERSHIP_TOL
    n_bisect: int = 10
    lam_hi: float = 0.999
    seed_cascade: bool = False  # also seed with the erasure-cascade family when the shape fits


@dataclass(eq=False)
class BoundaryCurve:
    points: list[tuple[RatePoint, RegionCertificate]]
    r2_grid: np.ndarray
    repairs: list[int] = field(default_factory=list)
    restarts_used: list[int] = field(default_factory=list)
    upper_bound: bool = True

    @property
    def r1(self) -> np.ndarray:
        return np.array([rp.r1 for rp, _ in self.points])

    @property
    def r2(self) -> np.ndarray:
        return np.array([rp.r2 for rp, _ in self.points])

    def rows(self) -> list[tuple]:
        out = []
        for k, (rp, cert) in enumerate(self.points):
            used = self.restarts_used[k] if k < len(self.restarts_used) else 0
            out.append((rp.r2, rp.r1, cert.i_xu, cert.i_xyu, cert.marginal_gap, used))
        return out


CURVE_COLUMNS = ("r2", "r1", "i_xu", "i_xyu", "marginal_gap", "restarts_used")


# ---------------------------------------------------------------------------
# membership


def _triple_values(t: TripleDist) -> tuple[float, float, np.ndarray]:
    ixu, ixyu = triple_informations(t.pU.probs, t.pXgU.kernel, t.pYgU.kernel)
    pxy = np.einsum("u,ux,uy->xy", t.pU.probs, t.pXgU.kernel, t.pYgU.kernel)
    return ixu, ixyu, pxy


def _check_shapes(spec: ProblemSpec, t: TripleDist):
    if (t.x_size, t.y_size) != (spec.x_size, spec.y_size):
        raise ValidationError(f"triple alphabets {t.x_size}x{t.y_size} differ from spec {spec.x_size}x{spec.y_size}")
    if t.u_size > spec.u_cap:
        raise ValidationError(f"|U|={t.u_size} exceeds the cardinality cap {spec.u_cap}")


def check_membership(spec: ProblemSpec, rp: RatePoint, t: TripleDist, tol: float = MEMBERSHIP_TOL) -> RegionCertificate:
    """Certificate for ``rp`` using triple ``t``; ``accepted`` tells whether it certifies the point."""
    _check_shapes(spec, t)
    ixu, ixyu, pxy = _triple_values(t)
    gap = total_variation(pxy, spec.target.probs)
    bad = []
    if gap > tol:
        bad.append(f"marginal: TV {gap:.3g} > {tol:g}")
    if rp.r1 < ixu - tol:
        bad.append(f"r1: {rp.r1:.9g} < I(X;U) = {ixu:.9g}")
    if rp.r1 + rp.r2 < ixyu - tol:
        bad.append(f"sum rate: {rp.r1 + rp.r2:.9g} < I(X,Y;U) = {ixyu:.9g}")
    return RegionCertificate(t, ixu, ixyu, gap, not bad, tuple(bad))


def g_epsilon(epsilon: float, x_size: int, y_size: int) -> EpsilonParams:
    """Slack 4 eps (log|X| + log|Y| + log 1/eps), in bits."""
    if not 0.0 < epsilon < 0.25:
        raise ValidationError(f"epsilon must lie in (0, 1/4), got {epsilon!r}")
    g = 4.0 * epsilon * (math.log2(x_size) + math.log2(y_size) + math.log2(1.0 / epsilon))
    return EpsilonParams(float(epsilon), g)


def epsilon_membership(spec: ProblemSpec, rp: RatePoint, t: TripleDist, ep: EpsilonParams) -> RegionCertificate:
    """Relaxed membership: TV < eps and both rate constraints loosened by 2 g(eps).

    The rate comparisons allow the same rounding tolerance as check_membership.
    """
    _check_shapes(spec, t)
    ixu, ixyu, pxy = _triple_values(t)
    gap = total_variation(pxy, spec.target.probs)
    slack = 2.0 * ep.g_value
    bad = []
    if not gap < ep.epsilon:
        bad.append(f"marginal: TV {gap:.3g} >= epsilon {ep.epsilon:g}")
    if rp.r1 < ixu - slack - MEMBERSHIP_TOL:
        bad.append(f"r1: {rp.r1:.9g} < I(X;U) - 2g = {ixu - slack:.9g}")
    if rp.r1 + rp.r2 < ixyu - slack - MEMBERSHIP_TOL:
        bad.append(f"sum rate: {rp.r1 + rp.r2:.9g} < I(X,Y;U) - 2g = {ixyu - slack:.9g}")
    return RegionCertificate(t, ixu, ixyu, gap, not bad, tuple(bad))


# ---------------------------------------------------------------------------
# search


def _to_triple(d: Decomposition) -> TripleDist:
    return TripleDist(Pmf(d.w), Channel(d.a), Channel(d.b))


def _certificate(spec: ProblemSpec, d: Decomposition, r2: float, tol: float) -> tuple[RatePoint, RegionCertificate]:
    t = _to_triple(d)
    ixu, ixyu, _ = _triple_values(t)
    rp = RatePoint(max(ixu, ixyu - r2, 0.0), r2)
    return rp, check_membership(spec, rp, t, tol)


def _cascade_seeds(problem: DecompositionProblem) -> list[Decomposition]:
    """Erasure-cascade family; only meaningful for a 2x3 erasure-shaped target."""
    P = problem.P
    if P.shape != (2, 3) or P[0, 2] != 0 or P[1, 0] != 0:
        return []
    px = problem.px
    if not np.allclose(px, 0.5, atol=1e-12):
        return []
    pe = problem.Q[0, 1]
    if abs(problem.Q[1, 1] - pe) > 1e-12 or pe <= 0 or pe >= 1:
        return []
    out = []
    for p2 in np.linspace(0.0, min(0.5, pe), 11):
        p1 = 1 - (1 - pe) / (1 - p2)
        w = [(1 - p1) / 2, p1, (1 - p1) / 2]
        a = [[1, 0], [0.5, 0.5], [0, 1]]
        b = [[1 - p2, p2, 0], [0, 1, 0], [0, p2, 1 - p2]]
        d = problem.make(w, a, b)
        if d is not None:
            out.append(d)
    return out


class RegionSearch:
    """Multistart scalarized search sharing one certificate pool across r2 values.

    The boundary is the lower envelope of max(I(X;U), I(X,Y;U) - r2). Minimizing
    lam*I(X;U) + (1-lam)*I(X,Y;U) traces the convex frontier of achievable
    (I(X;U), I(X,Y;U)) pairs; the optimum at r2 sits where I(X,Y;U) - I(X;U) = r2,
    which is located by bisection on lam. Time-sharing between certificates
    covers flat parts of the frontier.
    """

    def __init__(self, spec: ProblemSpec, opts: OptimizerOptions | None = None):
        self.spec = spec
        self.opts = opts or OptimizerOptions()
        self.problem = DecompositionProblem(spec.target.probs, spec.u_cardinality)
        self.pool = CertificatePool(self.problem)
        self.rng = make_rng(self.opts.seed)
        for d in (self.problem.u_equals_x(), self.problem.u_equals_y(), self.problem.constant_u()):
            self.pool.add(d)
        if self.opts.seed_cascade:
            for d in _cascade_seeds(self.problem):
                self.pool.add(d)
        self._ends: tuple[Decomposition, Decomposition] | None = None
        self.end_restarts = 0

    def _solve_many(self, mu: float, n_random: int, warm: Sequence[Decomposition] = ()) -> tuple[Decomposition | None, int]:
        best, used = None, 0
        runs = [(d.state) for d in warm if d is not None and d.state is not None] + [None] * n_random
        for state in runs:
            d = self.problem.solve(mu, self.rng, warm=state)
            used += 1
            if d is None:
                continue
            self.pool.add(d)
            score = d.i_xu + mu * (d.i_xyu - d.i_xu)
            if best is None or score < best.i_xu + mu * (best.i_xyu - best.i_xu) - 1e-12:
                best = d
        return best, used

    def endpoints(self) -> tuple[Decomposition, Decomposition]:
        if self._ends is None:
            n_end = max(2, self.opts.n_restarts // 8)
            lo, u1 = self._solve_many(1.0, n_end)
            hi, u2 = self._solve_many(1.0 - self.opts.lam_hi, n_end)
            self.end_restarts = u1 + u2
            self._ends = (lo, hi)
        return self._ends

    def search(self, r2: float) -> tuple[Decomposition, int]:
        """Best certificate at r2 and the number of local solves that informed it."""
        lo, hi = self.endpoints()
        used = self.end_restarts
        budget = self.opts.n_restarts - used
        if lo is not None and hi is not None and budget > 0 and self.opts.n_bisect > 0:
            s_lo = lo.i_xyu - lo.i_xu
            s_hi = hi.i_xyu - hi.i_xu
            if s_lo < r2 < s_hi:
                per_step = max(1, budget // self.opts.n_bisect)
                lam_lo, lam_hi = 0.0, self.opts.lam_hi
                for _ in range(self.opts.n_bisect):
                    if used + per_step > self.opts.n_restarts:
                        break
                    lam = 0.5 * (lam_lo + lam_hi)
                    n_random = max(0, per_step - 2)
                    d, u = self._solve_many(1.0 - lam, n_random, warm=(lo, hi)[: per_step - n_random])
                    used += u
                    if d is None:
                        continue
                    if d.i_xyu - d.i_xu < r2:
                        lam_lo, lo = lam, d
                    else:
                        lam_hi, hi = lam, d
        return self.pool.best(r2), used


def min_r1_at_r2(spec: ProblemSpec, r2: float, opts: OptimizerOptions | None = None) -> tuple[RatePoint, RegionCertificate]:
    """Best found r1 at r2 with its certificate (an upper bound on the boundary)."""
    if not r2 >= 0:
        raise ValidationError(f"r2 must be nonnegative, got {r2!r}")
    opts = opts or OptimizerOptions()
    search = RegionSearch(spec, opts)
    d, _ = search.search(float(r2))
    return _certificate(spec, d, float(r2), opts.tol)


def boundary_curve(spec: ProblemSpec, r2_grid, opts: OptimizerOptions | None = None) -> BoundaryCurve:
    """Boundary r1(r2) on a sorted grid.

    Every certificate found anywhere in the sweep is re-evaluated at every grid
    point, so the reported curve is nonincreasing by construction. ``repairs``
    lists grid indices where a certificate found for another point won.
    """
    grid = np.asarray(r2_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("r2 grid must be a non-empty vector")
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise ValidationError("r2 grid must be nonnegative and sorted ascending")
    opts = opts or OptimizerOptions()
    search = RegionSearch(spec, opts)
    own, used = [], []
    for r2 in grid:
        d, u = search.search(float(r2))
        own.append(d.value(float(r2)))
        used.append(u)
    points, repairs = [], []
    for k, r2 in enumerate(grid):
        d = search.pool.best(float(r2))
        if d.value(float(r2)) < own[k] - 1e-12:
            repairs.append(k)
        points.append(_certificate(spec, d, float(r2), opts.tol))
    # guard against rounding in the re-evaluation
    for k in range(1, len(points)):
        if points[k][0].r1 > points[k - 1][0].r1:
            rp, cert = points[k - 1]
            points[k] = _certificate(spec, _decomp_of(cert), float(grid[k]), opts.tol)
            if k not in repairs:
                repairs.append(k)
    return BoundaryCurve(points, grid, sorted(repairs), used)


def _decomp_of(cert: RegionCertificate) -> Decomposition:
    t = cert.triple
    return Decomposition(t.pU.probs, t.pXgU.kernel, t.pYgU.kernel, cert.i_xu, cert.i_xyu, cert.marginal_gap)


# ---------------------------------------------------------------------------
# common information


def wyner_common_information(pXY: JointDist, u_card: int | None = None,
                             opts: OptimizerOptions | None = None) -> tuple[float, TripleDist]:
    """min I(X,Y;U) over X - U - Y; returns the best found value and its triple."""
    if pXY.ndim != 2:
        raise ValidationError("wyner_common_information: expected a two-axis joint")
    opts = opts or OptimizerOptions()
    spec = ProblemSpec.from_joint(pXY, u_card)
    search = RegionSearch(spec, opts)
    n = max(1, opts.n_restarts // 8)
    search._solve_many(1.0, n)
    vals = np.array([c.i_xyu for c in search.pool.items])
    d = CertificatePool._tiebreak(search.pool.items, vals)
    t = _to_triple(d)
    _, ixyu, _ = _triple_values(t)
    return ixyu, t


def conditional_common_information(pW: Pmf, per_w_joints: Sequence[JointDist], u_card: int | None = None,
                                   opts: OptimizerOptions | None = None) -> float:
    """sum_w p(w) C(X;Y|W=w); the minimization separates across w."""
    if len(per_w_joints) != pW.alphabet_size:
        raise ValidationError("conditional_common_information: need one joint per w")
    shapes = {j.shape for j in per_w_joints}
    if len(shapes) != 1:
        raise ValidationError(f"conditional_common_information: inconsistent shapes {sorted(shapes)}")
    total = 0.0
    for w, j in zip(pW.probs, per_w_joints):
        if w > 0:
            total += w * wyner_common_information(j, u_card, opts)[0]
    return float(total)
