"""Markov kernels as executable randomizations.

A kernel carries a sampling form (input point, seed -> output point) and,
where a closed form exists, a pushforward form (input law -> output law).
Kernels never see the unknown density: their randomness depends only on
the observed input and the seed, which is what makes them valid
randomizations between experiments.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from .experiments import Trajectory
from .measures import DiscreteLaw
from .rng import substream, substream_seq

__all__ = [
    "Space",
    "TentBasis",
    "MarkovKernel",
    "bin_counts",
    "counts_to_midpoint_sample",
    "tent_basis",
    "identity_kernel",
    "binning_kernel",
    "midpoint_kernel",
    "reconstruction_kernel",
    "product_kernel",
    "compose",
    "transport_chain",
    "transport_batch",
    "brownian_bridge_paths",
    "synthesize_ystar",
]

# A sample space is (base descriptor, number of i.i.d. coordinates).
Space = tuple[str, int]

MIDPOINT_TOL = 1e-9


def unit_interval_space(n: int) -> Space:
    return ("unit-interval", n)

def counts_space(n: int, m: int) -> Space:
    return (f"counts[{m};n={n}]", 1)

def midpoint_space(n: int, m: int) -> Space:
    return (f"midpoint[{m}]", n)


@dataclass(frozen=True)
class TentBasis:
    """The piecewise-linear basis V_1..V_m on [0, 1].

    Each V_j is a probability density of height m peaking at the cell
    midpoint x_j* = (2j-1)/(2m); the two boundary functions are flat on
    [0, x_1*] and [x_m*, 1].  Pointwise the basis sums to m, and
    V_j(x_i*) = m when i = j and 0 otherwise.
    """

    m: int

    def __post_init__(self):
        if self.m < 2:
            raise UsageError(f"tent basis needs m >= 2, got {self.m}")

    @property
    def midpoints(self) -> np.ndarray:
        return (2.0 * np.arange(1, self.m + 1) - 1.0) / (2.0 * self.m)

    def value(self, j: int, x) -> np.ndarray:
        """V_j evaluated at x (j is 1-based)."""
        self._check_index(j)
        x = np.asarray(x, dtype=float)
        m, xs = float(self.m), self.midpoints
        if j == 1:
            xp, fp = [0.0, xs[0], xs[1]], [m, m, 0.0]
        elif j == self.m:
            xp, fp = [xs[-2], xs[-1], 1.0], [0.0, m, m]
        else:
            xp, fp = [xs[j - 2], xs[j - 1], xs[j]], [0.0, m, 0.0]
        return np.interp(x, xp, fp)

    def values(self, x) -> np.ndarray:
        """Matrix V_j(x_k) of shape (m, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.stack([self.value(j, x) for j in range(1, self.m + 1)])

    def cdf(self, j: int, t) -> np.ndarray:
        """Exact integral of V_j from 0 to t (piecewise quadratic)."""
        self._check_index(j)
        t = np.asarray(t, dtype=float)
        m, xs = float(self.m), self.midpoints
        if j == 1:
            a, b = xs[0], xs[1]
            rise = m * t
            fall = 1.0 - m**2 * (b - t) ** 2 / 2.0
            return np.where(t <= a, rise, np.where(t < b, fall, 1.0))
        if j == self.m:
            a, b = xs[-2], xs[-1]
            rise = m**2 * (t - a) ** 2 / 2.0
            flat = 0.5 + m * (t - b)
            return np.where(
                t <= a, 0.0, np.where(t < b, rise, np.minimum(flat, 1.0))
            )
        a, b, c = xs[j - 2], xs[j - 1], xs[j]
        rise = m**2 * (t - a) ** 2 / 2.0
        fall = 1.0 - m**2 * (c - t) ** 2 / 2.0
        return np.where(
            t <= a, 0.0, np.where(t <= b, rise, np.where(t < c, fall, 1.0))
        )

    def cdf_matrix(self, t) -> np.ndarray:
        """Matrix of integrals int_0^t V_j, shape (m, len(t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([self.cdf(j, t) for j in range(1, self.m + 1)])

    def ppf_indexed(self, j_idx, u) -> np.ndarray:
        """Inverse CDF of V_{j_idx+1} at u, vectorized over both arrays."""
        j0 = np.asarray(j_idx, dtype=int)
        u = np.asarray(u, dtype=float)
        if j0.size and (j0.min() < 0 or j0.max() >= self.m):
            raise UsageError("tent index out of range")
        m, xs = float(self.m), self.midpoints
        xs_prev = xs[np.clip(j0 - 1, 0, self.m - 1)]
        xs_self = xs[j0]
        xs_next = xs[np.clip(j0 + 1, 0, self.m - 1)]
        low = xs_prev + np.sqrt(2.0 * u) / m
        high = xs_next - np.sqrt(2.0 * (1.0 - u)) / m
        out = np.where(u <= 0.5, low, high)
        out = np.where((j0 == 0) & (u <= 0.5), u / m, out)
        out = np.where(
            (j0 == self.m - 1) & (u > 0.5), xs_self + (u - 0.5) / m, out
        )
        return out

    def ppf(self, j: int, u) -> np.ndarray:
        self._check_index(j)
        u = np.asarray(u, dtype=float)
        return self.ppf_indexed(np.full(u.shape, j - 1, dtype=int), u)

    def sample(self, j: int, rng: np.random.Generator, size: int) -> np.ndarray:
        """Exact draws from the density V_j by inverse CDF."""
        return self.ppf(j, rng.uniform(size=size))

    def snap(self, x) -> np.ndarray:
        """0-based midpoint indices for points that are midpoints."""
        x = np.asarray(x, dtype=float)
        j0 = np.clip(np.rint(x * self.m - 0.5).astype(int), 0, self.m - 1)
        if np.any(np.abs(x - (2.0 * (j0 + 1) - 1.0) / (2.0 * self.m)) > MIDPOINT_TOL):
            raise DomainError("input point is not a cell midpoint")
        return j0

    def _check_index(self, j: int) -> None:
        if not 1 <= j <= self.m:
            raise UsageError(f"tent index {j} outside 1..{self.m}")


def tent_basis(m: int) -> TentBasis:
    """The m-function tent basis; m must be at least 2."""
    return TentBasis(m=m)


@dataclass(frozen=True)
class MarkovKernel:
    """A randomization between two sample spaces.

    ``sample(x, seed)`` is deterministic given its seed.  ``vectorized``
    kernels accept an array of i.i.d. inputs in one call, which product
    kernels exploit.  ``pushforward_density`` maps an input law to the
    output law where that is available in closed form.  Composites carry
    their flattened ``stages`` so that composition associates exactly on
    sampled outputs, not just in law.
    """

    source: Space
    target: Space
    sample: Callable
    pushforward_density: Callable | None = None
    vectorized: bool = False
    label: str = ""
    stages: tuple = ()


def bin_counts(sample, m: int) -> np.ndarray:
    """Occupancy counts of the cells J_i = [(i-1)/m, i/m]."""
    if m < 1:
        raise UsageError(f"m must be >= 1, got {m}")
    xs = np.asarray(sample, dtype=float).ravel()
    if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
        raise DomainError("sample points must lie in [0, 1]")
    idx = np.minimum((xs * m).astype(int), m - 1)
    return np.bincount(idx, minlength=m)


def counts_to_midpoint_sample(counts, seed) -> np.ndarray:
    """Uniformly ordered multiset with counts[i] copies of each midpoint.

    This is the sufficiency inverse of binning: applied to multinomial
    counts it reproduces n i.i.d. draws of the midpoint-supported law.
    """
    counts = np.asarray(counts)
    if counts.ndim != 1 or counts.size < 1:
        raise UsageError("counts must be a 1-d vector")
    if np.any(counts < 0) or not np.issubdtype(counts.dtype, np.integer):
        raise UsageError("counts must be nonnegative integers")
    m = counts.size
    midpoints = (2.0 * np.arange(1, m + 1) - 1.0) / (2.0 * m)
    pts = np.repeat(midpoints, counts)
    return substream(seed, "perm").permutation(pts)


def identity_kernel(space: Space) -> MarkovKernel:
    return MarkovKernel(
        source=space,
        target=space,
        sample=lambda x, seed: x,
        pushforward_density=lambda law: law,
        vectorized=True,
        label="identity",
    )


def binning_kernel(n: int, m: int) -> MarkovKernel:
    """Deterministic kernel realizing the binning statistic."""

    def sample(xs, seed):
        xs = np.asarray(xs, dtype=float)
        if xs.size != n:
            raise UsageError(f"expected {n} points, got {xs.size}")
        return bin_counts(xs, m)

    return MarkovKernel(
        source=unit_interval_space(n),
        target=counts_space(n, m),
        sample=sample,
        label=f"bin[{m}]",
    )


def midpoint_kernel(n: int, m: int) -> MarkovKernel:
    """Sufficiency inverse: counts -> uniformly ordered midpoint sample."""

    def sample(counts, seed):
        counts = np.asarray(counts)
        if counts.sum() != n:
            raise UsageError(f"counts must sum to {n}, got {counts.sum()}")
        if counts.size != m:
            raise UsageError(f"expected {m} cells, got {counts.size}")
        return counts_to_midpoint_sample(counts, seed)

    return MarkovKernel(
        source=counts_space(n, m),
        target=midpoint_space(n, m),
        sample=sample,
        label=f"midpoints[{m}]",
    )


def reconstruction_kernel(m: int) -> MarkovKernel:
    """Kernel sending the midpoint x_j* to a draw from the density V_j.

    Its pushforward maps the midpoint law with masses theta to the
    piecewise-linear density sum_j theta_j V_j.
    """
    basis = tent_basis(m)

    def sample(x, seed):
        x = np.asarray(x, dtype=float)
        j0 = basis.snap(x)
        u = substream(seed, "tent").uniform(size=x.shape)
        return basis.ppf_indexed(j0, u)

    def pushforward(law: DiscreteLaw) -> Callable:
        j0 = basis.snap(law.points)
        weights = np.zeros(m)
        np.add.at(weights, j0, law.masses)

        def pdf(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            return weights @ basis.values(x)

        return pdf

    return MarkovKernel(
        source=midpoint_space(1, m),
        target=unit_interval_space(1),
        sample=sample,
        pushforward_density=pushforward,
        vectorized=True,
        label=f"tent[{m}]",
    )


def _merge_spaces(spaces: Sequence[Space]) -> Space:
    bases = {s[0] for s in spaces}
    if len(bases) == 1:
        return (spaces[0][0], sum(s[1] for s in spaces))
    return (" (x) ".join(s[0] for s in spaces), 1)


def product_kernel(kernels: Sequence[MarkovKernel]) -> MarkovKernel:
    """Coordinatewise action with independent randomness per coordinate.

    The pushforward of a product law is the product of the component
    pushforwards.  When every component is the same vectorized kernel the
    whole coordinate block is sampled in one call from a single derived
    stream; otherwise each coordinate gets its own named substream.
    """
    kernels = list(kernels)
    if not kernels:
        raise UsageError("product of zero kernels")
    if len(kernels) == 1:
        return kernels[0]
    identical = all(k is kernels[0] for k in kernels)
    arity = len(kernels)

    def sample(xs, seed):
        xs = np.asarray(xs)
        if xs.shape[0] != arity:
            raise UsageError(f"expected {arity} coordinates, got {xs.shape[0]}")
        if identical and kernels[0].vectorized:
            return kernels[0].sample(xs, substream_seq(seed, "coords"))
        return np.asarray(
            [k.sample(xs[i], substream_seq(seed, i)) for i, k in enumerate(kernels)]
        )

    pushforward = None
    if all(k.pushforward_density is not None for k in kernels):

        def pushforward(laws):
            if len(laws) != arity:
                raise UsageError(f"expected {arity} component laws")
            return [k.pushforward_density(law) for k, law in zip(kernels, laws)]

    return MarkovKernel(
        source=_merge_spaces([k.source for k in kernels]),
        target=_merge_spaces([k.target for k in kernels]),
        sample=sample,
        pushforward_density=pushforward,
        vectorized=False,
        label=f"product[{arity}]",
    )


def compose(k1: MarkovKernel, k2: MarkovKernel) -> MarkovKernel:
    """k2 after k1, with an independent seed per flattened stage."""
    if k1.target != k2.source:
        raise UsageError(
            f"cannot compose: target {k1.target} != source {k2.source}"
        )
    stages = (k1.stages or (k1,)) + (k2.stages or (k2,))

    def sample(x, seed):
        for i, stage in enumerate(stages):
            x = stage.sample(x, substream_seq(seed, "stage", i))
        return x

    pushforward = None
    if all(s.pushforward_density is not None for s in stages):

        def pushforward(law):
            for stage in stages:
                law = stage.pushforward_density(law)
            return law

    return MarkovKernel(
        source=k1.source,
        target=k2.target,
        sample=sample,
        pushforward_density=pushforward,
        label=";".join(s.label or "k" for s in stages),
        stages=stages,
    )


def transport_chain(n: int, m: int) -> MarkovKernel:
    """The full randomization i.i.d. f -> counts -> midpoints -> i.i.d. f_hat."""
    recon = reconstruction_kernel(m)
    return compose(
        binning_kernel(n, m),
        compose(midpoint_kernel(n, m), product_kernel([recon] * n)),
    )


def transport_batch(samples, m: int, seed) -> np.ndarray:
    """Law-equal fast path of ``transport_chain`` for replication sweeps.

    Snapping each point to its cell midpoint and drawing from the matching
    tent density produces i.i.d. output with the same law as the kernel
    chain (binning only forgets the within-cell positions, which the
    midpoint stage never looks at).  Accepts (n,) or (reps, n) arrays.
    """
    xs = np.asarray(samples, dtype=float)
    basis = tent_basis(m)
    idx = np.minimum((xs * m).astype(int), m - 1)
    u = substream(seed, "transport").uniform(size=xs.shape)
    return basis.ppf_indexed(idx, u)


def brownian_bridge_paths(u, rng: np.random.Generator, size: int) -> np.ndarray:
    """Exact standard-Brownian-bridge samples at nondecreasing times.

    ``u`` has shape (bridges, points) with entries in [0, 1], nondecreasing
    along each row.  Returns shape (size, bridges, points).  Sampling is
    sequential in the bridge filtration, so no path refinement error.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.size and (u.min() < -1e-12 or u.max() > 1.0 + 1e-12):
        raise DomainError("bridge times must lie in [0, 1]")
    if np.any(np.diff(u, axis=1) < -1e-12):
        raise UsageError("bridge times must be nondecreasing along rows")
    bridges, points = u.shape
    out = np.zeros((size, bridges, points))
    prev_u = np.zeros(bridges)
    prev_b = np.zeros((size, bridges))
    for k in range(points):
        uk = np.clip(u[:, k], 0.0, 1.0)
        rem = 1.0 - prev_u
        alive = rem > 1e-15
        ratio = np.where(alive, (1.0 - uk) / np.where(alive, rem, 1.0), 0.0)
        var = np.where(alive, (uk - prev_u) * ratio, 0.0)
        mean = prev_b * ratio
        draw = rng.standard_normal((size, bridges))
        b = mean + np.sqrt(np.clip(var, 0.0, None)) * draw
        out[:, :, k] = b
        prev_u, prev_b = uk, b
    return out


def synthesize_ystar(
    increments,
    n: int,
    seed,
    grid_resolution: int,
    *,
    shared_bridge: bool = False,
) -> Trajectory:
    """Reassemble a white-noise-style trajectory from interval increments.

    y*_t = sum_i Ybar_i int_0^t V_i + (2 sqrt(nm))^{-1} sum_i B_i(t) with
    B_i(t) = B^i(int_0^t V_i) run over independent standard Brownian
    bridges.  ``shared_bridge=True`` reuses one bridge for every
    coordinate; that variant is kept only for comparison and does not
    satisfy the t/(4n) variance identity.
    """
    ybar = np.asarray(increments, dtype=float).ravel()
    m = ybar.size
    if m < 2:
        raise UsageError(f"need at least 2 increments, got {m}")
    if grid_resolution < m:
        raise UsageError("grid_resolution must be >= m")
    if n < 1:
        raise UsageError("n must be >= 1")
    basis = tent_basis(m)
    t = np.arange(grid_resolution + 1, dtype=float) / grid_resolution
    U = basis.cdf_matrix(t)  # (m, T)
    mean_part = ybar @ U
    rng = substream(seed, "ystar")
    if shared_bridge:
        u_all = np.unique(U.ravel())
        path = brownian_bridge_paths(u_all[None, :], rng, 1)[0, 0]
        lookup = np.searchsorted(u_all, U)
        bridge_sum = path[lookup].sum(axis=0)
    else:
        paths = brownian_bridge_paths(U, rng, 1)[0]  # (m, T)
        bridge_sum = paths.sum(axis=0)
    values = mean_part + bridge_sum / (2.0 * math.sqrt(n * m))
    values = values - values[0]  # pin y*_0 = 0 exactly against float fuzz
    return Trajectory(times=t, values=values)
