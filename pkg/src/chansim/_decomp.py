"""Search over decompositions P(x,y) = sum_u w_u a_u(x) b_u(y).

A decomposition with weights ``w``, rows ``a_u = p(x|u)`` and ``b_u = p(y|u)``
is exactly a triple in the feasible set: X - U - Y holds by construction and the
(X,Y) marginal is enforced as an equality.

The local solver parametrizes p(u|x) and p(y|u) by softmaxes whose supports are
restricted to maximal all-positive rectangles of supp(P). Every atom then sits
inside supp(P) and structural zeros of the target stay exact. The marginal
equality is handled by an augmented Lagrangian; the result is projected back
onto the feasible set by ``repair`` so that every returned certificate is
exactly feasible up to rounding.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .info_measures import entropy_table, triple_informations

LN2 = np.log(2.0)
PRUNE = 1e-9
DUP_TOL = 1e-12
MERGE_TOL = 1e-7  # solver atoms closer than this are one atom split by rounding


@dataclass(eq=False)
class Decomposition:
    w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    i_xu: float
    i_xyu: float
    gap: float
    state: tuple | None = field(default=None, repr=False)  # raw solver state for warm starts

    @property
    def size(self) -> int:
        return self.w.size

    def value(self, r2: float) -> float:
        return max(self.i_xu, self.i_xyu - r2)

    def sort_key(self) -> tuple:
        return (self.size, tuple(np.round(np.concatenate([self.w, self.a.ravel(), self.b.ravel()]), 12)))


def maximal_rectangles(support: np.ndarray) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All maximal (rows, cols) blocks with every cell inside ``support``."""
    nx = support.shape[0]
    out = set()
    for r in range(1, nx + 1):
        for rows in itertools.combinations(range(nx), r):
            cols = np.all(support[list(rows)], axis=0)
            if not cols.any():
                continue
            closed = tuple(x for x in range(nx) if support[x, cols].all())
            out.add((closed, tuple(int(c) for c in np.flatnonzero(cols))))
    return sorted(out)


def _msoftmax(t: np.ndarray, mask: np.ndarray) -> np.ndarray:
    t = np.where(mask, t, -np.inf)
    e = np.exp(t - t.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def canonical(w, a, b, tol: float = DUP_TOL) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Merge identical atoms and sort atoms lexicographically by (a, b)."""
    atoms: list[list] = []
    for wi, ai, bi in zip(w, a, b):
        for atom in atoms:
            if np.abs(atom[1] - ai).max() < tol and np.abs(atom[2] - bi).max() < tol:
                tot = atom[0] + wi
                atom[1] = (atom[0] * atom[1] + wi * ai) / tot
                atom[2] = (atom[0] * atom[2] + wi * bi) / tot
                atom[0] = tot
                break
        else:
            atoms.append([float(wi), ai.copy(), bi.copy()])
    atoms.sort(key=lambda t: tuple(np.round(np.concatenate([t[1], t[2]]), 12)))
    w = np.array([t[0] for t in atoms])
    return w / w.sum(), np.array([t[1] for t in atoms]), np.array([t[2] for t in atoms])


def _merged_size(d1: Decomposition, d2: Decomposition) -> int:
    n = d1.size
    for ai, bi in zip(d2.a, d2.b):
        if not any(np.abs(aj - ai).max() < DUP_TOL and np.abs(bj - bi).max() < DUP_TOL
                   for aj, bj in zip(d1.a, d1.b)):
            n += 1
    return n


class DecompositionProblem:
    """Target joint ``P`` (rows x, cols y) with cardinality cap ``u_card``."""

    def __init__(self, P: np.ndarray, u_card: int):
        self.P = np.asarray(P, dtype=float)
        self.nx, self.ny = self.P.shape
        self.px = self.P.sum(axis=1)
        self.rows = np.flatnonzero(self.px > 0)
        self.Q = np.zeros_like(self.P)
        self.Q[self.rows] = self.P[self.rows] / self.px[self.rows, None]
        self.h_y_given_x = float(sum(self.px[x] * entropy_table(self.Q[x]) for x in self.rows))
        self.u_card = int(u_card)
        self.support = self.P > 0
        sub = self.support[self.rows]
        self.rects = [(tuple(int(self.rows[r]) for r in rr), cc) for rr, cc in maximal_rectangles(sub)]

    # -- certificates ----------------------------------------------------
    def make(self, w, a, b, state=None) -> Decomposition | None:
        """Project raw atoms onto the feasible set and evaluate them."""
        w = np.asarray(w, dtype=float).copy()
        a = np.asarray(a, dtype=float).copy()
        b = np.asarray(b, dtype=float).copy()
        while True:
            out = self._repair(w, a, b)
            if out is None:
                return None
            w2, a2, b2 = out
            if w2.size <= self.u_card:
                break
            # too many atoms: drop the lightest non-point-mass atom and repair again
            point = (a > 0).sum(axis=1) == 1
            cand = np.flatnonzero(~point)
            if cand.size == 0:
                return None
            drop = cand[np.argmin(w[cand])]
            keep = np.arange(w.size) != drop
            w, a, b = w[keep], a[keep], b[keep]
        ixu, ixyu = triple_informations(w2, a2, b2)
        M = np.einsum("u,ux,uy->xy", w2, a2, b2)
        gap = 0.5 * np.abs(M - self.P).sum()
        return Decomposition(w2, a2, b2, ixu, ixyu, float(gap), state)

    def _repair(self, w, a, b):
        keep = w >= PRUNE
        w, a, b = w[keep], a[keep].copy(), b[keep].copy()
        # keep each atom inside supp(P): restrict b to columns allowed by every row of a
        for u in range(w.size):
            a[u] = np.where(a[u] < PRUNE * 1e-3, 0.0, a[u])
            a[u] /= a[u].sum()
            cols = np.all(self.support[a[u] > 0], axis=0)
            b[u] = np.where(cols & (b[u] >= PRUNE * 1e-3), b[u], 0.0)
            if b[u].sum() <= 0:
                w[u] = 0.0
                b[u] = cols / max(cols.sum(), 1)
            else:
                b[u] /= b[u].sum()
        keep = w > 0
        w, a, b = w[keep], a[keep], b[keep]
        if w.size:
            w, a, b = canonical(w, a, b, MERGE_TOL)
            w = w / w.sum()
            M = np.einsum("u,ux,uy->xy", w, a, b)
            pos = M > 0
            delta = max(0.0, float(np.max(1.0 - self.P[pos] / M[pos])))
            w = (1.0 - delta) * w
            R = np.clip(self.P - (1.0 - delta) * M, 0.0, None)
        else:
            R = self.P.copy()
        W, A, B = list(w), list(a), list(b)
        for x in range(self.nx):
            r = R[x].sum()
            if r <= 0:
                continue
            e = np.zeros(self.nx)
            e[x] = 1.0
            for u in range(len(W)):
                if A[u][x] == 1.0:
                    B[u] = (W[u] * B[u] + R[x]) / (W[u] + r)
                    W[u] += r
                    break
            else:
                W.append(r)
                A.append(e)
                B.append(R[x] / r)
        if not W:
            return None
        return canonical(np.array(W), np.array(A), np.array(B))

    def u_equals_x(self) -> Decomposition:
        w = self.px[self.rows]
        a = np.eye(self.nx)[self.rows]
        return self.make(w, a, self.Q[self.rows])

    def u_equals_y(self) -> Decomposition | None:
        py = self.P.sum(axis=0)
        cols = np.flatnonzero(py > 0)
        if cols.size > self.u_card:
            return None
        return self.make(py[cols], (self.P[:, cols] / py[cols]).T, np.eye(self.ny)[cols])

    def constant_u(self) -> Decomposition | None:
        """Feasible only for product targets."""
        py = self.P.sum(axis=0)
        if np.abs(np.outer(self.px, py) - self.P).max() > 1e-12:
            return None
        return self.make([1.0], self.px[None, :], py[None, :])

    def mixture(self, d1: Decomposition, d2: Decomposition, t: float) -> Decomposition | None:
        if t >= 1.0:
            return d1
        if t <= 0.0:
            return d2
        w = np.concatenate([t * d1.w, (1 - t) * d2.w])
        a = np.vstack([d1.a, d2.a])
        b = np.vstack([d1.b, d2.b])
        w, a, b = canonical(w, a, b)
        if w.size > self.u_card:
            return None
        ixu, ixyu = triple_informations(w, a, b)
        M = np.einsum("u,ux,uy->xy", w, a, b)
        return Decomposition(w, a, b, ixu, ixyu, float(0.5 * np.abs(M - self.P).sum()))

    # -- local solver ----------------------------------------------------
    def random_masks(self, rng: np.random.Generator):
        """Assign one maximal rectangle to each atom; the first few cover supp(P)."""
        K = self.u_card
        order = list(rng.permutation(len(self.rects)))
        uncovered = self.support.copy()
        chosen = []
        for k in order:
            rows, cols = self.rects[k]
            if uncovered[np.ix_(rows, cols)].any():
                chosen.append(k)
                uncovered[np.ix_(rows, cols)] = False
        rest = [k for k in order if k not in chosen]
        chosen += rest
        while len(chosen) < K:
            chosen.append(int(rng.integers(len(self.rects))))
        chosen = chosen[:K]
        rng.shuffle(chosen)
        mA = np.zeros((self.nx, K), dtype=bool)
        mB = np.zeros((K, self.ny), dtype=bool)
        for u, k in enumerate(chosen):
            rows, cols = self.rects[k]
            mA[list(rows), u] = True
            mB[u, list(cols)] = True
        # rows outside supp(px) are irrelevant; give them a harmless full mask
        idle = np.setdiff1d(np.arange(self.nx), self.rows)
        mA[idle] = True
        return mA, mB

    def solve(self, mu: float, rng: np.random.Generator, warm: tuple | None = None,
              rho0: float = 10.0, growth: float = 4.0, outer: int = 25, tol: float = 1e-9,
              maxiter: int = 400) -> Decomposition | None:
        """Local minimum of I(X;U) + mu*(I(X,Y;U) - I(X;U)) over the masked family."""
        px, Q = self.px, self.Q
        if warm is None:
            mA, mB = self.random_masks(rng)
            z = rng.normal(size=mA.size + mB.size)
        else:
            mA, mB, z = warm
            z = z + 0.05 * rng.normal(size=z.size)
        nx, K = mA.shape
        nA = nx * K
        pxc = px[:, None]
        L = np.zeros_like(Q)
        rho = rho0

        def unpack(z):
            return _msoftmax(z[:nA].reshape(nx, K), mA), _msoftmax(z[nA:].reshape(K, -1), mB)

        def aug(z):
            A, B = unpack(z)
            pu = px @ A
            lA = np.log(np.where(mA & (A > 0), A, 1.0))
            lB = np.log(np.where(mB & (B > 0), B, 1.0))
            lpu = np.log(np.maximum(pu, 1e-300))
            ixu = ((pxc * A * lA).sum() - (pu * lpu).sum()) / LN2
            hb = -(B * lB).sum(axis=1) / LN2
            val = ixu + mu * (self.h_y_given_x - (pu * hb).sum())
            gA = pxc * (lA - lpu[None, :]) / LN2 - mu * pxc * hb[None, :]
            gB = mu * pu[:, None] * (lB + 1.0) / LN2
            R = pxc * (A @ B - Q)
            val += (L * R).sum() + 0.5 * rho * (R ** 2).sum()
            G = pxc * (L + rho * R)
            gA = gA + G @ B.T
            gB = gB + A.T @ G
            ta = A * (gA - (A * gA).sum(axis=1, keepdims=True))
            tb = B * (gB - (B * gB).sum(axis=1, keepdims=True))
            return val, np.concatenate([ta.ravel(), tb.ravel()])

        opts = {"maxiter": maxiter, "ftol": 1e-16, "gtol": 1e-12}
        for _ in range(outer):
            res = minimize(aug, z, jac=True, method="L-BFGS-B", options=opts)
            z = res.x
            A, B = unpack(z)
            R = pxc * (A @ B - Q)
            L += rho * R
            if 0.5 * np.abs(R).sum() < tol:
                break
            rho = min(rho * growth, 1e8)
        A, B = unpack(z)
        pu = px @ A
        live = pu > 0
        a = np.zeros((K, nx))
        a[live] = (pxc * A).T[live] / pu[live, None]
        return self.make(pu, a, B, state=(mA, mB, z))


def mixture_values(a: np.ndarray, b: np.ndarray, r2: float):
    """Best time-share of every certificate pair at ``r2``.

    Returns (value matrix, t matrix) where pair (i, j) uses weight t on i.
    """
    ai, aj = a[:, None], a[None, :]
    bi, bj = b[:, None] - r2, b[None, :] - r2
    # f(t) = max(aj + t(ai - aj), bj + t(bi - bj)); optimum at an end or the crossing
    with np.errstate(divide="ignore", invalid="ignore"):
        tc = (bj - aj) / ((ai - aj) - (bi - bj))
    tc = np.where(np.isfinite(tc), np.clip(tc, 0.0, 1.0), 0.0)
    cands = [np.zeros_like(tc), np.ones_like(tc), tc]
    vals = [np.maximum(aj + t * (ai - aj), bj + t * (bi - bj)) for t in cands]
    stack = np.stack(vals)
    k = np.argmin(stack, axis=0)
    tstack = np.stack(cands)
    return np.take_along_axis(stack, k[None], 0)[0], np.take_along_axis(tstack, k[None], 0)[0]


class CertificatePool:
    """Every certificate is valid at every r2, so the pool is shared across a sweep."""

    def __init__(self, problem: DecompositionProblem):
        self.problem = problem
        self.items: list[Decomposition] = []

    def add(self, d: Decomposition | None):
        if d is not None:
            self.items.append(d)

    def best_single(self, r2: float) -> Decomposition:
        vals = np.array([d.value(r2) for d in self.items])
        return self._tiebreak(self.items, vals)

    @staticmethod
    def _tiebreak(items, vals) -> Decomposition:
        best = vals.min()
        tied = [d for d, v in zip(items, vals) if v <= best + 1e-12]
        return min(tied, key=Decomposition.sort_key)

    def pareto(self) -> list[Decomposition]:
        items = sorted(self.items, key=lambda d: (d.i_xu, d.i_xyu, d.size))
        front = []
        for d in items:
            if any(f.i_xu <= d.i_xu + 1e-15 and f.i_xyu <= d.i_xyu + 1e-15 and f.size <= d.size for f in front):
                continue
            front.append(d)
        return front

    def best(self, r2: float, max_pairs: int = 64) -> Decomposition:
        """Best certificate at r2 over singles and admissible pairwise time-shares."""
        single = self.best_single(r2)
        front = self.pareto()
        if len(front) < 2:
            return single
        a = np.array([d.i_xu for d in front])
        b = np.array([d.i_xyu for d in front])
        vals, ts = mixture_values(a, b, r2)
        np.fill_diagonal(vals, np.inf)
        order = np.argsort(vals, axis=None, kind="stable")
        tried = 0
        for flat in order:
            i, j = np.unravel_index(flat, vals.shape)
            if vals[i, j] >= single.value(r2) - 1e-12 or tried >= max_pairs:
                break
            tried += 1
            d1, d2 = front[i], front[j]
            if d1.size + d2.size > self.problem.u_card and _merged_size(d1, d2) > self.problem.u_card:
                continue
            mix = self.problem.mixture(d1, d2, float(ts[i, j]))
            if mix is not None and mix.value(r2) < single.value(r2) - 1e-12:
                return mix
        return single
