"""Coordinated team play against an adversary: payoff floors versus common information.

Team members choose actions x and y from a joint strategy p(x,y); the opponent
picks z to minimize the expected payoff Pi(x,y,z). A time-sharing label W
(revealed to the opponent) mixes strategies, and the cost of a mixture is the
conditional common information C(X;Y|W). r0_upper searches for the cheapest
mixture meeting a payoff floor; its values are upper bounds.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleError, ValidationError
from .prob_core import JointDist, Pmf, make_rng, renormalized
from .rate_region import OptimizerOptions, wyner_common_information

THETA_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Game:
    payoff: np.ndarray  # (X, Y, Z)

    def __post_init__(self):
        p = np.array(self.payoff, dtype=float)
        if p.ndim != 3 or min(p.shape) < 1:
            raise ValidationError("payoff must be a 3-axis tensor with every size >= 1")
        if not np.all(np.isfinite(p)):
            raise ValidationError("payoff entries must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "payoff", p)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.payoff.shape

    def to_json(self) -> dict:
        return {"sizes": list(self.sizes), "payoff": self.payoff.ravel().tolist()}

    @classmethod
    def from_json(cls, obj) -> "Game":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or set(obj) != {"sizes", "payoff"}:
            raise ValidationError('game JSON must have exactly the fields ["payoff", "sizes"]')
        sizes = tuple(int(s) for s in obj["sizes"])
        flat = np.asarray(obj["payoff"], dtype=float).ravel()
        if len(sizes) != 3 or int(np.prod(sizes)) != flat.size:
            raise ValidationError(f"game JSON: {flat.size} payoff entries do not fill sizes {sizes}")
        return cls(flat.reshape(sizes))

    @classmethod
    def matching_team(cls) -> "Game":
        """Payoff 1 when x = y and the opponent missed: 1{x = y != z}, all binary."""
        p = np.zeros((2, 2, 2))
        for x in range(2):
            for z in range(2):
                if x != z:
                    p[x, x, z] = 1.0
        return cls(p)


@dataclass(eq=False)
class TimeSharingStrategy:
    pW: Pmf
    strategies: list[JointDist]

    def __post_init__(self):
        if len(self.strategies) != self.pW.alphabet_size:
            raise ValidationError("need one strategy per time-sharing label")
        if len({s.shape for s in self.strategies}) != 1 or self.strategies[0].ndim != 2:
            raise ValidationError("strategies must be two-axis joints of one common shape")


@dataclass(eq=False)
class PayoffReport:
    theta: float
    argmin_z: tuple[int, ...]
    rate: float | None = None


@dataclass(eq=False)
class GameOptions:
    seed: int = 0
    w_cap: int = 3
    n_starts: int = 8  # alternating-LP starts for the best independent strategy
    n_mix: int = 3  # interior points on the segment between anchor strategies
    n_perturb: int = 8
    wyner: OptimizerOptions = field(default_factory=lambda: OptimizerOptions(n_restarts=32))


def _expected(payoff: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.einsum("xy,xyz->z", p, payoff)


def worst_case_payoff(g: Game, pXY: JointDist) -> PayoffReport:
    """min_z E[Pi(X,Y,z)]; ties are reported in index order."""
    if pXY.shape != g.sizes[:2]:
        raise ValidationError(f"strategy shape {pXY.shape} differs from game action sizes {g.sizes[:2]}")
    e = _expected(g.payoff, pXY.probs)
    theta = float(e.min())
    tol = 1e-12 * float(np.abs(g.payoff).max())
    return PayoffReport(theta, tuple(int(z) for z in np.flatnonzero(e <= theta + tol)))


def timeshare_payoff(g: Game, s: TimeSharingStrategy, opts: GameOptions | None = None,
                     _cache: dict | None = None) -> PayoffReport:
    """W-average of per-label worst cases, with rate C(X;Y|W)."""
    opts = opts or GameOptions()
    theta, rate, arg = 0.0, 0.0, set()
    for w, strat in zip(s.pW.probs, s.strategies):
        rep = worst_case_payoff(g, strat)
        if w > 0:
            theta += w * rep.theta
            rate += w * _common_info(strat.probs, opts, _cache)
            arg.update(rep.argmin_z)
    return PayoffReport(float(theta), tuple(sorted(arg)), float(rate))


def _common_info(p: np.ndarray, opts: GameOptions, cache: dict | None) -> float:
    key = p.tobytes()
    if cache is not None and key in cache:
        return cache[key]
    v = wyner_common_information(JointDist(p), None, opts.wyner)[0]
    if cache is not None:
        cache[key] = v
    return v


# ---------------------------------------------------------------------------
# linear programs on the normalized payoff


def _normalized(payoff: np.ndarray) -> tuple[np.ndarray, float, float]:
    lo, hi = float(payoff.min()), float(payoff.max())
    span = hi - lo if hi > lo else 1.0
    return (payoff - lo) / span, lo, span


def _maximin_lp(M: np.ndarray) -> tuple[float, np.ndarray]:
    """max_p min_z sum_k p_k M[k, z] over the simplex."""
    k, nz = M.shape
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A = np.hstack([-M.T, np.ones((nz, 1))])
    res = linprog(c, A_ub=A, b_ub=np.zeros(nz), A_eq=np.r_[np.ones(k), 0.0][None, :], b_eq=[1.0],
                  bounds=[(0, None)] * k + [(None, None)], method="highs")
    if res.status != 0:
        raise ValidationError(f"payoff LP failed: {res.message}")
    p = np.clip(res.x[:k], 0.0, None)
    return float(-res.fun), p / p.sum()


def max_theta(g: Game) -> tuple[float, np.ndarray]:
    """Largest worst-case payoff over all correlated strategies, and a maximizer."""
    Pn, lo, span = _normalized(g.payoff)
    nx, ny, nz = g.sizes
    v, p = _maximin_lp(Pn.reshape(nx * ny, nz))
    p = p.reshape(nx, ny)
    return float(_expected(g.payoff, p).min()), p


def product_maximin(g: Game, n_starts: int = 8, seed: int = 0) -> tuple[float, np.ndarray]:
    """Best worst-case payoff over independent strategies p(x)q(y), by alternating LPs."""
    Pn, _, _ = _normalized(g.payoff)
    nx, ny, nz = g.sizes
    rng = make_rng(seed)
    starts = [np.full(ny, 1.0 / ny)] + [np.eye(ny)[k] for k in range(ny)]
    starts += [rng.dirichlet(np.ones(ny)) for _ in range(max(0, n_starts - len(starts)))]
    best_v, best = -np.inf, None
    for q in starts[:max(n_starts, 1 + ny)]:
        v_old = -np.inf
        for _ in range(50):
            _, p = _maximin_lp(np.einsum("xyz,y->xz", Pn, q))
            v, q = _maximin_lp(np.einsum("xyz,x->yz", Pn, p))
            if v <= v_old + 1e-13:
                break
            v_old = v
        joint = np.outer(p, q)
        val = float(_expected(g.payoff, joint).min())
        if val > best_v + 1e-12:
            best_v, best = val, joint
    return best_v, best


# ---------------------------------------------------------------------------
# rate search


@dataclass(eq=False)
class _Candidate:
    p: np.ndarray
    theta: float
    rate: float


class StrategyPool:
    """Strategies with their (worst-case payoff, common information) pairs.

    The cheapest W-mixture meeting a payoff floor is an LP over pool weights.
    """

    def __init__(self, g: Game, opts: GameOptions):
        self.g, self.opts = g, opts
        self.items: list[_Candidate] = []
        self._cache: dict = {}

    def add(self, p: np.ndarray):
        p = renormalized(np.clip(p, 0.0, None), "strategy").reshape(self.g.sizes[:2])
        p = np.where(p < 1e-15, 0.0, p)
        p = p / p.sum()
        theta = worst_case_payoff(self.g, JointDist(p)).theta
        self.items.append(_Candidate(p, theta, _common_info(p, self.opts, self._cache)))

    def cheapest(self, theta: float) -> tuple[float, TimeSharingStrategy] | None:
        th = np.array([c.theta for c in self.items])
        rt = np.array([c.rate for c in self.items])
        if th.max() < theta - THETA_TOL:
            return None
        res = linprog(rt, A_ub=-th[None, :], b_ub=[-theta],
                      A_eq=np.ones((1, th.size)), b_eq=[1.0], bounds=[(0, None)] * th.size, method="highs")
        if res.status != 0:
            k = int(np.argmax(th))
            weights = np.eye(th.size)[k]
        else:
            weights = np.clip(res.x, 0.0, None)
        support = [int(k) for k in np.argsort(-weights, kind="stable")[: self.opts.w_cap] if weights[k] > 1e-9]
        w = weights[support] / weights[support].sum()
        # dropping tiny weights can push the floor below target: fall back to the best single strategy
        if float(w @ th[support]) < theta - THETA_TOL:
            feas = [k for k in range(th.size) if th[k] >= theta - THETA_TOL]
            k = min(feas, key=lambda k: (rt[k], -th[k]))
            support, w = [k], np.array([1.0])
        order = np.argsort(support)
        support = [support[k] for k in order]
        w = w[order]
        strat = TimeSharingStrategy(Pmf(w), [JointDist(self.items[k].p) for k in support])
        return float(w @ rt[support]), strat


def _build_pool(g: Game, opts: GameOptions) -> StrategyPool:
    pool = StrategyPool(g, opts)
    _, p_ind = product_maximin(g, opts.n_starts, opts.seed)
    _, p_max = max_theta(g)
    pool.add(p_ind)
    pool.add(p_max)
    for t in np.linspace(0.0, 1.0, opts.n_mix + 2)[1:-1]:
        pool.add((1 - t) * p_ind + t * p_max)
    rng = make_rng(opts.seed + 1)
    anchors = [c.p for c in pool.items]
    for k in range(opts.n_perturb):
        base = anchors[k % len(anchors)]
        noise = rng.dirichlet(np.ones(base.size)).reshape(base.shape)
        pool.add(0.9 * base + 0.1 * noise)
    return pool


def r0_upper(g: Game, theta_target: float, opts: GameOptions | None = None,
             pool: StrategyPool | None = None) -> tuple[float, TimeSharingStrategy]:
    """Cheapest mixture found whose worst-case payoff meets ``theta_target``."""
    opts = opts or GameOptions()
    top, _ = max_theta(g)
    if theta_target > top + THETA_TOL:
        raise InfeasibleError(f"payoff floor {theta_target:.9g} exceeds the best achievable {top:.9g}")
    pool = pool or _build_pool(g, opts)
    out = pool.cheapest(theta_target)
    if out is None:  # only reachable when the pool misses the LP optimum by rounding
        raise InfeasibleError(f"no pooled strategy reaches {theta_target:.9g}")
    return out


@dataclass(eq=False)
class R0Point:
    theta: float
    rate: float | None
    strategy: TimeSharingStrategy | None
    feasible: bool = True
    repaired: bool = False


def r0_curve(g: Game, theta_grid: Sequence[float], opts: GameOptions | None = None) -> list[R0Point]:
    """r0_upper on a sorted grid; infeasible floors are flagged instead of raising."""
    grid = np.asarray(theta_grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) < 0):
        raise ValidationError("theta grid must be sorted ascending")
    opts = opts or GameOptions()
    pool = _build_pool(g, opts)
    out = []
    for th in grid:
        try:
            rate, strat = r0_upper(g, float(th), opts, pool)
            out.append(R0Point(float(th), rate, strat))
        except InfeasibleError:
            out.append(R0Point(float(th), None, None, feasible=False))
    # a certificate for a higher floor also serves every lower floor
    for k in range(len(out) - 2, -1, -1):
        a, b = out[k], out[k + 1]
        if a.feasible and b.feasible and b.rate < a.rate:
            out[k] = R0Point(a.theta, b.rate, b.strategy, True, True)
    return out
