"""Distance-bound calculators for the experiment chain.

Each link of the chain gets a rate formula with unit constants (the
multinomial-to-Gaussian links carry an injectable constant), plus the
bin-count tuning rule m = n^{1/(2+gamma)} and the end-to-end total.
Absolute constants are not computable from theory, so consumers check
slopes and ratios, never magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .experiments import sqrt_cell_means, theta_of
from .measures import DensityModel

__all__ = [
    "RateParams",
    "ChainBound",
    "bound_density_reconstruction",
    "bound_carter_multinomial",
    "bound_carter_independent",
    "bound_gaussian_link",
    "choose_m",
    "total_bound",
    "total_bound_curve",
    "minimize_total",
    "target_rate",
]


@dataclass(frozen=True)
class RateParams:
    """Sample size, bin count, smoothness, and the multinomial constant."""

    n: int
    m: int
    gamma: float
    C_R: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.m < 2:
            raise DomainError(f"m must be >= 2, got {self.m}")
        if not 0.0 < self.gamma <= 1.0:
            raise DomainError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.C_R <= 0.0:
            raise DomainError(f"C_R must be positive, got {self.C_R}")


@dataclass(frozen=True)
class ChainBound:
    """Per-link distance bounds through the chain, plus their sum.

    The exact-sufficiency direction (i.i.d. density -> multinomial) costs
    nothing; the stated density<->multinomial link is the reconstruction
    cost of the reverse direction.
    """

    density_multinomial: float
    multinomial_gaussian: float
    coords_increments: float
    increments_white_noise: float

    def __post_init__(self):
        for name, v in self.links().items():
            if v < 0.0:
                raise DomainError(f"negative link bound {name}={v:g}")

    def links(self) -> dict[str, float]:
        return {
            "density_multinomial": self.density_multinomial,
            "multinomial_gaussian": self.multinomial_gaussian,
            "coords_increments": self.coords_increments,
            "increments_white_noise": self.increments_white_noise,
        }

    @property
    def total(self) -> float:
        return float(sum(self.links().values()))


def _rate_mn(n, m, gamma):
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    return np.sqrt(n) * (m**-1.5 + m ** -(1.0 + gamma))


def bound_density_reconstruction(p: RateParams) -> float:
    """sqrt(n) (m^{-3/2} + m^{-1-gamma}), the reconstruction-link rate."""
    return float(_rate_mn(p.n, p.m, p.gamma))


def bound_carter_multinomial(p: RateParams) -> float:
    """C_R m ln(m) / sqrt(n): multinomial vs. matched multivariate normal."""
    return p.C_R * p.m * math.log(p.m) / math.sqrt(p.n)


def bound_carter_independent(p: RateParams) -> float:
    """C_R m / sqrt(n): correlated normal vs. independent-coordinate normal."""
    return p.C_R * p.m / math.sqrt(p.n)


def bound_gaussian_link(p: RateParams, f: DensityModel) -> float:
    """Computable bound between the two independent-Gaussian experiments.

    sqrt(2 m n) * sqrt( sum_i ( int_{J_i} sqrt f  -  sqrt(theta_i / m) )^2 ),
    which vanishes identically for the uniform density.
    """
    theta = theta_of(f, p.m).theta
    g = sqrt_cell_means(f, p.m)
    gap = g - np.sqrt(theta / p.m)
    return float(math.sqrt(2.0 * p.m * p.n) * math.sqrt((gap**2).sum()))


def choose_m(n: int, gamma: float) -> int:
    """floor(n^{1/(2+gamma)}), clamped to at least 2."""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    # the tiny epsilon keeps exact powers (e.g. 1024^(1/3)) from flooring down
    return max(2, int(math.floor(n ** (1.0 / (2.0 + gamma)) + 1e-9)))


def total_bound(
    n: int, gamma: float, C_R: float = 1.0, m: int | None = None
) -> ChainBound:
    """All chain links evaluated at m (default: the tuning rule choose_m)."""
    m = choose_m(n, gamma) if m is None else m
    p = RateParams(n=n, m=m, gamma=gamma, C_R=C_R)
    reconstruction = bound_density_reconstruction(p)
    carter = bound_carter_multinomial(p) + bound_carter_independent(p)
    return ChainBound(
        density_multinomial=reconstruction,
        multinomial_gaussian=carter,
        coords_increments=reconstruction,
        increments_white_noise=reconstruction,
    )


def total_bound_curve(n: int, gamma: float, C_R: float, m_values) -> np.ndarray:
    """Vectorized chain totals over an array of bin counts."""
    m = np.asarray(m_values, dtype=float)
    if m.size and m.min() < 2:
        raise DomainError("bin counts must be >= 2")
    reconstruction = _rate_mn(n, m, gamma)
    carter = C_R * (m * np.log(m) + m) / math.sqrt(n)
    return 3.0 * reconstruction + carter


def minimize_total(n: int, gamma: float, C_R: float = 1.0) -> tuple[int, float]:
    """Grid-search minimizer of the chain total over every m in [2, n]."""
    m_grid = np.arange(2, max(n, 2) + 1)
    totals = total_bound_curve(n, gamma, C_R, m_grid)
    k = int(np.argmin(totals))
    return int(m_grid[k]), float(totals[k])


def target_rate(n: int, gamma: float) -> float:
    """The advertised end-to-end rate at the tuning rule's m.

    n^{-gamma/(2(gamma+2))} log n for gamma <= 1/2 and n^{-1/10} log n
    above; ratio checks divide measured totals by this.
    """
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    if gamma <= 0.5:
        return n ** (-gamma / (2.0 * (gamma + 2.0))) * math.log(n)
    return n ** (-0.1) * math.log(n)
