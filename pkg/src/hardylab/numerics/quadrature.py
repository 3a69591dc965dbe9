"""Gaussian quadrature (Golub-Welsch) and graded composite rules.

``gauss_rule`` returns rules on the reference interval (-1, 1).  The
composite builders return *plain* rules on a physical interval: weights are
meant for ``sum(w * F(x))`` approximating ``int F dx``.  When an endpoint is
marked singular with exponent p, the cell touching it uses a Gauss-Jacobi
rule for the weight (x - end)^p and its weights are divided by that power,
so integrands of the form |x - end|^p * smooth are handled accurately.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ..errors import DomainError
from .special import gamma_fn


@dataclass(frozen=True)
class QuadRule:
    """Quadrature nodes and positive weights with a descriptive kind."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))

    def mapped(self, lo: float, hi: float) -> "QuadRule":
        """Affine map from (-1, 1) to (lo, hi).

        For Jacobi rules the weight function is mapped too, i.e. the result
        integrates against (hi - x)^a (x - lo)^b.
        """
        half = 0.5 * (hi - lo)
        a = self.params.get("a", 0.0)
        b = self.params.get("b", 0.0)
        return QuadRule(
            lo + half * (self.nodes + 1.0),
            self.weights * half ** (1.0 + a + b),
            self.kind,
            dict(self.params, interval=(lo, hi)),
        )


@lru_cache(maxsize=512)
def _golub_welsch(n: int, a: float, b: float):
    k = np.arange(n, dtype=float)
    ab = a + b
    diag = np.empty(n)
    diag[0] = (b - a) / (ab + 2.0)
    if n > 1:
        kk = k[1:]
        diag[1:] = (b * b - a * a) / ((2 * kk + ab) * (2 * kk + ab + 2.0))
    off = np.empty(max(n - 1, 0))
    if n > 1:
        off[0] = 4.0 * (1 + a) * (1 + b) / ((2.0 + ab) ** 2 * (3.0 + ab))
        if n > 2:
            kk = k[2:]
            c = 2 * kk + ab
            off[1:] = 4.0 * kk * (kk + a) * (kk + b) * (kk + ab) / (c * c * (c + 1.0) * (c - 1.0))
        off = np.sqrt(off)
    mu0 = 2.0 ** (ab + 1.0) * gamma_fn(a + 1.0) * gamma_fn(b + 1.0) / gamma_fn(ab + 2.0)
    if n == 1:
        return np.array([diag[0]]), np.array([mu0])
    x, v = eigh_tridiagonal(diag, off)
    w = mu0 * v[0, :] ** 2
    order = np.argsort(x)
    return x[order], w[order]


def gauss_rule(kind: str, n: int, a: float = 0.0, b: float = 0.0) -> QuadRule:
    """Gauss rule with n points on (-1, 1).

    ``kind='legendre'`` uses weight 1; ``kind='jacobi'`` uses
    (1 - x)^a (1 + x)^b with a, b > -1.  Exact for polynomials of degree
    2n - 1 against the weight.
    """
    if n < 1:
        raise DomainError("a Gauss rule needs n >= 1")
    if kind == "legendre":
        a = b = 0.0
    elif kind != "jacobi":
        raise DomainError(f"unknown rule kind {kind!r}")
    if a <= -1.0 or b <= -1.0:
        raise DomainError(f"Jacobi parameters must exceed -1 (got a={a}, b={b})")
    x, w = _golub_welsch(int(n), float(a), float(b))
    return QuadRule(x.copy(), w.copy(), kind, {"a": float(a), "b": float(b), "n": int(n)})


def _end_cell(lo: float, hi: float, n: int, p: float | None, at_lo: bool):
    """Plain rule on [lo, hi] absorbing |x - end|^p at one end."""
    if p is None or p == 0.0:
        r = gauss_rule("legendre", n).mapped(lo, hi)
        return np.asarray(r.nodes), np.asarray(r.weights)
    if at_lo:
        r = gauss_rule("jacobi", n, 0.0, p).mapped(lo, hi)
        dist = np.asarray(r.nodes) - lo
    else:
        r = gauss_rule("jacobi", n, p, 0.0).mapped(lo, hi)
        dist = hi - np.asarray(r.nodes)
    return np.asarray(r.nodes), np.asarray(r.weights) / dist ** p


def composite_rule(
    lo: float,
    hi: float,
    n: int,
    *,
    p_lo: float | None = None,
    p_hi: float | None = None,
    levels_lo: int = 0,
    levels_hi: int = 0,
    ratio: float = 0.5,
    mid_cells: int = 1,
    zone: float = 0.25,
) -> QuadRule:
    """Composite Gauss rule on [lo, hi] with geometric grading at the ends.

    A graded end occupies the fraction ``zone`` of the interval and is cut
    into ``levels`` cells shrinking by ``ratio`` toward the endpoint, plus
    one end cell carrying the Jacobi weight for the endpoint exponent.  The
    remaining middle part is split into ``mid_cells`` equal cells.  Every
    cell uses n points.
    """
    if not hi > lo:
        raise DomainError("empty interval")
    length = hi - lo
    graded_lo = p_lo is not None or levels_lo > 0
    graded_hi = p_hi is not None or levels_hi > 0
    a = lo + zone * length if graded_lo else lo
    b = hi - zone * length if graded_hi else hi
    nodes: list[np.ndarray] = []
    weights: list[np.ndarray] = []
    leg = gauss_rule("legendre", n)

    def add_cell(c0, c1):
        r = leg.mapped(c0, c1)
        nodes.append(np.asarray(r.nodes))
        weights.append(np.asarray(r.weights))

    if graded_lo:
        z = a - lo
        cut = lo + z * ratio ** levels_lo
        x, w = _end_cell(lo, cut, n, p_lo, True)
        nodes.append(x)
        weights.append(w)
        for k in range(levels_lo, 0, -1):
            add_cell(lo + z * ratio ** k, lo + z * ratio ** (k - 1))
    if b - a > 1e-14 * length:
        edges = np.linspace(a, b, mid_cells + 1)
        for c0, c1 in zip(edges[:-1], edges[1:]):
            add_cell(c0, c1)
    if graded_hi:
        z = hi - b
        for k in range(0, levels_hi):
            add_cell(hi - z * ratio ** k, hi - z * ratio ** (k + 1))
        cut = hi - z * ratio ** levels_hi
        x, w = _end_cell(cut, hi, n, p_hi, False)
        nodes.append(x)
        weights.append(w)
    xs = np.concatenate(nodes)
    ws = np.concatenate(weights)
    params = {
        "interval": (lo, hi),
        "n": n,
        "p_lo": p_lo,
        "p_hi": p_hi,
        "levels_lo": levels_lo,
        "levels_hi": levels_hi,
        "ratio": ratio,
        "mid_cells": mid_cells,
    }
    return QuadRule(xs, ws, "composite-graded", params)


def graded_rule(lo: float, hi: float, p: float, levels: int = 12, n: int = 8,
                ratio: float = 0.5, at: str = "lo") -> QuadRule:
    """Rule on [lo, hi] graded toward one endpoint with singular power p.

    Intended for integrands behaving like |x - end|^p * smooth, p > -1.
    """
    if p <= -1.0:
        raise DomainError(f"endpoint exponent {p} is not integrable")
    if at == "lo":
        return composite_rule(lo, hi, n, p_lo=p, levels_lo=levels, ratio=ratio, zone=1.0)
    return composite_rule(lo, hi, n, p_hi=p, levels_hi=levels, ratio=ratio, zone=1.0)


def jacobi_interval_rule(lo: float, hi: float, n: int, p_lo: float = 0.0,
                         p_hi: float = 0.0) -> QuadRule:
    """Gauss-Jacobi rule for int_lo^hi (x-lo)^p_lo (hi-x)^p_hi f(x) dx."""
    return gauss_rule("jacobi", n, p_hi, p_lo).mapped(lo, hi)


def rule_degree(rule: QuadRule) -> int:
    """Polynomial degree guaranteed exact for a plain Gauss rule."""
    return 2 * rule.params.get("n", len(rule)) - 1


__all__ = [
    "QuadRule",
    "gauss_rule",
    "composite_rule",
    "graded_rule",
    "jacobi_interval_rule",
    "rule_degree",
]
