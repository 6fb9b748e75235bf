"""Brute-force reference computations used to cross-check the package.

Everything here is plain Python (math, fractions, itertools) so that it
shares no code path with the numpy implementation it checks. The frozen
values at the bottom were produced by these functions once and are pinned so
that a regression in either side shows up.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction


def h(probs) -> float:
    return -sum(p * math.log2(p) for p in probs if p > 0)


def hb(a: float) -> float:
    return h([a, 1 - a])


def bec_joint(pe):
    """Uniform binary input through an erasure channel, outputs (0, e, 1)."""
    half = Fraction(1, 2) if isinstance(pe, Fraction) else 0.5
    return [[half * (1 - pe), half * pe, 0 * pe], [0 * pe, half * pe, half * (1 - pe)]]


def mi_from_table(table) -> float:
    """I(row;col) of a nested-list joint."""
    rows = [sum(r) for r in table]
    cols = [sum(c) for c in zip(*table)]
    return h(rows) + h(cols) - h([v for r in table for v in r])


def cascade_table(pe: float, p2: float):
    """p(x, y, u) of the erasure cascade as a dict keyed by (x, y, u); u in (0, 'e', 1)."""
    p1 = 1 - (1 - pe) / (1 - p2)
    out = {}
    for x in (0, 1):
        for u, pu_x in ((x, 1 - p1), ("e", p1)):
            for y, py_u in (((x, 1 - p2), ("e", p2)) if u != "e" else (("e", 1.0),)):
                key = (x, y, u)
                out[key] = out.get(key, 0.0) + 0.5 * pu_x * py_u
    return out


def cascade_informations(pe: float, p2: float) -> tuple[float, float]:
    """(I(X;U), I(X,Y;U)) by direct summation over the cascade joint."""
    t = cascade_table(pe, p2)

    def marg(keyf):
        m = {}
        for k, v in t.items():
            m[keyf(k)] = m.get(keyf(k), 0.0) + v
        return list(m.values())

    hx = h(marg(lambda k: k[0]))
    hu = h(marg(lambda k: k[2]))
    hxu = h(marg(lambda k: (k[0], k[2])))
    hxy = h(marg(lambda k: (k[0], k[1])))
    hxyu = h(list(t.values()))
    return hx + hu - hxu, hxy + hu - hxyu


def g_eps(eps: float, nx: int, ny: int) -> float:
    return 4 * eps * (math.log2(nx) + math.log2(ny) + math.log2(1 / eps))


def expected_tv_n1_identity() -> Fraction:
    """E over the 4 equiprobable 2-word codebooks of TV(Q, uniform), V = U uniform bit."""
    total = Fraction(0)
    for book in itertools.product((0, 1), repeat=2):
        q = [Fraction(book.count(v), 2) for v in (0, 1)]
        total += Fraction(1, 4) * sum(abs(qv - Fraction(1, 2)) for qv in q) / 2
    return total


def posterior_by_hand(words, pxgu, xseq):
    """Bayes over a list of codewords: weight of word m is prod_k p(x_k | u_k)."""
    w = [math.prod(pxgu[u][x] for u, x in zip(word, xseq)) for word in words]
    s = sum(w)
    return [v / s for v in w]


def single_codeword_epsilon(px, q, pxgu, pygu, u):
    """n = 1, one codeword u: y is drawn from p(y|u) whatever x is.

    The encoder has a single index, so the induced pair law is px(x) p(y|u);
    TV to px(x) q(y|x) is a sum over |X||Y| terms.
    """
    return 0.5 * sum(abs(px[x] * pygu[u][y] - px[x] * q[x][y]) for x in range(len(px)) for y in range(len(q[0])))


def dsbs_common_information(a0: float) -> float:
    """Closed form for a doubly symmetric binary pair with crossover a0 <= 1/2."""
    a1 = (1 - math.sqrt(1 - 2 * a0)) / 2
    return 1 + hb(a0) - 2 * hb(a1)


def matching_team_theta(p):
    """min_z P(x = y != z) for a 2x2 joint given as nested lists."""
    return min(sum(p[x][x] for x in (0, 1) if x != z) for z in (0, 1))


# Frozen outputs of the functions above.
FROZEN = {
    "h_075": 0.8112781244591328,
    "bec075_y_marginal": (0.125, 0.75, 0.125),
    "bec075_x_given_erasure": (0.5, 0.5),
    "cascade_075_05": (0.5, 0.8112781244591329),
    "cascade_075_0": (0.25, 1.061278124459133),
    "g_01_binary": 2.1287712379549446,
    "expected_tv_n1": 0.25,
    "dsbs_025": 0.6095260510734206,
}
