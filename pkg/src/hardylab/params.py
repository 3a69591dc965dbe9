"""Problem parameters shared by every module."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError
from .numerics.special import gamma_fn


def sphere_area(n: int) -> float:
    """Surface measure |S^{n-1}| of the unit sphere in R^n."""
    return 2.0 * math.pi ** (0.5 * n) / gamma_fn(0.5 * n)


def neumann_constant(s: float) -> float:
    """c_s = 2^{1-2s} Gamma(1-s) / Gamma(s), the extension's Neumann constant."""
    if not 0.0 < s < 1.0:
        raise DomainError("order s must lie in (0, 1)")
    return 2.0 ** (1.0 - 2.0 * s) * gamma_fn(1.0 - s) / gamma_fn(s)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension, Hardy data, fractional order and truncation sizes.

    ``alpha`` multiplies the inverse-square potential of the first ``k``
    coordinates and must stay below ((k-2)/2)^2.  The radial potential of
    the Galerkin problems is ``g_amp * |x|^(-2s+g_eps)``.
    """

    N: int = 3
    k: int | None = None
    s: float = 0.5
    alpha: float = 0.0
    g_amp: float = 1.0
    g_eps: float = 0.5
    r0: float = 0.5
    modes: int = 64

    def __post_init__(self):
        if self.k is None:
            object.__setattr__(self, "k", self.N)
        N, k = int(self.N), int(self.k)
        if N != self.N or k != self.k:
            raise DomainError("N and k must be integers")
        if N < 3:
            raise DomainError(f"dimension N={N} must be at least 3")
        if not 3 <= k <= N:
            raise DomainError(f"k={k} must lie in 3..N")
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"order s={self.s} must lie in (0, 1)")
        if not self.alpha < self.hardy_k:
            raise DomainError(
                f"alpha={self.alpha} must be below the Hardy constant ((k-2)/2)^2={self.hardy_k}"
            )
        if self.g_amp < 0.0:
            raise DomainError("g_amp must be nonnegative")
        if not 0.0 < self.g_eps < 1.0:
            raise DomainError(f"g_eps={self.g_eps} must lie in (0, 1)")
        if not 0.0 < self.r0 < 1.0:
            raise DomainError(f"r0={self.r0} must lie in (0, 1)")
        if self.modes < 1:
            raise DomainError("at least one mode is required")

    # derived quantities -------------------------------------------------
    @property
    def p(self) -> float:
        """(N-2)/2."""
        return 0.5 * (self.N - 2)

    @property
    def hardy_k(self) -> float:
        return (0.5 * (self.k - 2)) ** 2

    @property
    def half_gap(self) -> float:
        """(N-2s)/2, the lower barrier of the frequency."""
        return 0.5 * (self.N - 2.0 * self.s)

    @property
    def c_s(self) -> float:
        return neumann_constant(self.s)

    @property
    def area(self) -> float:
        return sphere_area(self.N)

    def with_(self, **changes) -> "ProblemParams":
        return replace(self, **changes)

    def coercivity_margin(self, c_g: float | None = None) -> float:
        """1 - alpha (2/(k-2))^2 - c_s C_g r0^eps, positive for admissible r0."""
        c_g = self.g_amp if c_g is None else c_g
        return 1.0 - self.alpha / self.hardy_k - self.c_s * c_g * self.r0 ** self.g_eps
