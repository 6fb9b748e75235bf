"""Closed-form region boundary for an erasure channel with a uniform binary input.

The boundary is traced by a cascade X -> U -> Y of two erasure channels with
erasure probabilities p1 then p2, where (1 - p1)(1 - p2) = 1 - pe.  Along the
family

    I(X;U)   = 1 - p1
    I(X,Y;U) = h(pe) + (1 - p1)(1 - h(p2))

with p2 ranging over [0, min(1/2, pe)].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ValidationError
from .info_measures import binary_entropy
from .prob_core import Channel, Pmf, TripleDist
from .rate_region import BoundaryCurve, ProblemSpec, RatePoint, check_membership

ERASURE = 1  # output alphabet is (0, e, 1)
BEC_COLUMNS = ("p2", "p1", "i_xu", "i_xyu", "r1", "r2")


def _check_pe(pe: float):
    if not 0.0 <= pe <= 1.0:
        raise ValidationError(f"erasure probability {pe!r} outside [0, 1]")


def p2_max(pe: float) -> float:
    return min(0.5, pe)


@dataclass(frozen=True)
class BecCascadeParams:
    pe: float
    p2: float

    def __post_init__(self):
        _check_pe(self.pe)
        if not 0.0 <= self.p2 <= p2_max(self.pe):
            raise ValidationError(f"p2={self.p2!r} outside [0, min(1/2, pe)] = [0, {p2_max(self.pe)}]")

    @property
    def p1(self) -> float:
        return 1.0 - (1.0 - self.pe) / (1.0 - self.p2)

    @property
    def i_xu(self) -> float:
        return 1.0 - self.p1

    @property
    def i_xyu(self) -> float:
        return binary_entropy(self.pe) + (1.0 - self.p1) * (1.0 - binary_entropy(self.p2))


def bec_channel(pe: float) -> Channel:
    _check_pe(pe)
    return Channel(np.array([[1.0 - pe, pe, 0.0], [0.0, pe, 1.0 - pe]]))


def bec_spec(pe: float, u_cardinality: int | None = None) -> ProblemSpec:
    return ProblemSpec(Pmf([0.5, 0.5]), bec_channel(pe), u_cardinality)


def cascade_triple(params: BecCascadeParams) -> TripleDist:
    """U over (0, e, 1) via an erasure channel from X; Y via a second one from U, e absorbing."""
    p1, p2 = params.p1, params.p2
    pU = np.array([(1 - p1) / 2, p1, (1 - p1) / 2])
    pXgU = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    pYgU = np.array([[1 - p2, p2, 0.0], [0.0, 1.0, 0.0], [0.0, p2, 1 - p2]])
    return TripleDist(Pmf(pU), Channel(pXgU), Channel(pYgU))


@dataclass(eq=False)
class BecBoundary(BoundaryCurve):
    """Boundary points plus the cascade parameters that produced them."""

    params: list[BecCascadeParams] | None = None

    def rows(self) -> list[tuple]:
        out = []
        for par, (rp, _) in zip(self.params, self.points):
            out.append((par.p2, par.p1, par.i_xu, par.i_xyu, rp.r1, rp.r2))
        return out


def bec_boundary(pe: float, p2_grid) -> BecBoundary:
    """Parametric boundary points (I(X;U), I(X,Y;U) - I(X;U)), one per p2.

    Each point is the corner where both rate constraints are tight.  The curve
    continues flat at r1 = 1 - pe beyond r2 = h(pe), and with slope -1 to the
    left of the p2 = p2_max corner; ``completions`` returns those two extremes.
    """
    _check_pe(pe)
    grid = np.asarray(p2_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("p2 grid must be a non-empty vector")
    spec = bec_spec(pe)
    params, points = [], []
    for p2 in grid:
        par = BecCascadeParams(pe, float(p2))
        rp = RatePoint(par.i_xu, max(par.i_xyu - par.i_xu, 0.0))
        points.append((rp, check_membership(spec, rp, cascade_triple(par))))
        params.append(par)
    return BecBoundary(points, np.array([rp.r2 for rp, _ in points]), params=params)


def completions(pe: float) -> tuple[tuple[RatePoint, BecCascadeParams], tuple[RatePoint, BecCascadeParams]]:
    """The two extreme points: r2 = 0 (common information) and the data-processing floor."""
    top = BecCascadeParams(pe, p2_max(pe))
    bottom = BecCascadeParams(pe, 0.0)
    return (RatePoint(top.i_xyu, 0.0), top), (RatePoint(bottom.i_xu, bottom.i_xyu - bottom.i_xu), bottom)


def bec_r1_at_r2(pe: float, r2: float) -> float:
    """Exact boundary r1 at r2 for the uniform-input erasure channel."""
    _check_pe(pe)
    if r2 < 0:
        raise ValidationError("r2 must be nonnegative")
    top = BecCascadeParams(pe, p2_max(pe))
    s_top = top.i_xyu - top.i_xu
    if r2 <= s_top:
        return top.i_xyu - r2
    h_pe = binary_entropy(pe)
    if r2 >= h_pe:
        return 1.0 - pe
    # r2(p2) = h(pe) - (1 - p1) h(p2) decreases in p2 on [0, p2_max]
    f = lambda p2: BecCascadeParams(pe, p2).i_xyu - BecCascadeParams(pe, p2).i_xu - r2
    p2 = brentq(f, 0.0, p2_max(pe), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return BecCascadeParams(pe, p2).i_xu


def bec_table(pe: float, count: int) -> BecBoundary:
    """``count`` rows: ``count - 1`` parametric points plus the r2 = 0 completion, deduplicated."""
    if count < 1:
        raise ValidationError("grid count must be positive")
    _check_pe(pe)
    hi = p2_max(pe)
    grid = np.linspace(0.0, hi, max(count - 1, 1)) if count > 1 else np.array([hi])
    curve = bec_boundary(pe, grid)
    if count > 1:
        (rp, par), _ = completions(pe)
        spec = bec_spec(pe)
        curve.points.append((rp, check_membership(spec, rp, cascade_triple(par))))
        curve.params.append(par)
    # order by r2 ascending and drop exact duplicates (degenerate pe)
    seen, pts, pars = set(), [], []
    for (rp, cert), par in sorted(zip(curve.points, curve.params), key=lambda z: (z[0][0].r2, -z[0][0].r1)):
        key = (round(rp.r1, 12), round(rp.r2, 12))
        if key in seen:
            continue
        seen.add(key)
        pts.append((rp, cert))
        pars.append(par)
    return BecBoundary(pts, np.array([rp.r2 for rp, _ in pts]), params=pars)
