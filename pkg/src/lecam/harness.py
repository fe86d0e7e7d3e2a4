"""Monte Carlo verification of the chain's statistical claims.

Every check is deterministic given the master seed: substreams are named
by (check, purpose), so the suite gives identical reports serially or in
parallel.  Statistical tests run at pre-registered levels (0.1% per test)
and moment checks use 4-standard-error bands; negative controls are
expected to fail and are reported as ordinary failing checks.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .approx import hellinger_bound, reconstruct
from .equivalence import RateParams, bound_density_reconstruction, choose_m
from .errors import DomainError, UsageError
from .experiments import sample_iid, sqrt_cell_means, theta_of
from .kernels import (
    bin_counts,
    brownian_bridge_paths,
    counts_to_midpoint_sample,
    tent_basis,
    transport_chain,
)
from .measures import DensityModel, hellinger_sq_product, tv_sandwich
from .rng import substream, substream_seq

__all__ = [
    "CheckReport",
    "RiskEstimate",
    "DecisionProblem",
    "SweepResult",
    "TEST_LEVEL",
    "sig12",
    "verify_sufficiency",
    "verify_transport",
    "verify_ystar_moments",
    "transfer_rule",
    "theta1_problem",
    "verify_risk_transfer",
    "rate_sweep",
    "run_suite",
]

TEST_LEVEL = 0.001  # pre-registered per-test significance level
MOMENT_BAND = 4.0   # standard-error band for moment checks


def sig12(x):
    """Round floats to 12 significant digits for stable serialized output."""
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: sig12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [sig12(v) for v in x]
    if isinstance(x, (np.floating,)):
        return float(f"{float(x):.12g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [sig12(v) for v in x.tolist()]
    return x


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one verification check."""

    name: str
    passed: bool
    statistic: float
    p_value: float | None = None
    details: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "statistic": sig12(float(self.statistic)),
            "p_value": None if self.p_value is None else sig12(float(self.p_value)),
            "details": sig12(self.details),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


@dataclass(frozen=True)
class RiskEstimate:
    """Monte Carlo risk with its standard error."""

    value: float
    std_error: float
    replications: int


@dataclass(frozen=True)
class DecisionProblem:
    """A bounded-loss decision problem about a functional of the density.

    ``loss(true_value, actions)`` must map into [0, 1]; ``target`` extracts
    the estimand from the density.
    """

    action_space: str
    loss: Callable
    target: Callable


def theta1_problem(m: int) -> DecisionProblem:
    """Estimate theta_1 = int_0^{1/m} f under squared loss clamped to [0, 1]."""

    def loss(true_value, actions):
        return np.clip((np.asarray(actions, dtype=float) - true_value) ** 2, 0.0, 1.0)

    def target(f: DensityModel) -> float:
        return float(theta_of(f, m).theta[0])

    return DecisionProblem(action_space="theta1-estimate", loss=loss, target=target)


def _merge_small_cells(table: np.ndarray, min_expected: float = 5.0):
    """Merge adjacent columns of a 2 x m table until all expected counts >= min."""
    cols = [table[:, j].astype(float) for j in range(table.shape[1])]
    merged = 0
    while len(cols) > 1:
        arr = np.column_stack(cols)
        expected = np.outer(arr.sum(axis=1), arr.sum(axis=0)) / arr.sum()
        if expected.min() >= min_expected:
            break
        j = int(np.argmin(expected.min(axis=0)))
        k = j + 1 if j + 1 < len(cols) else j - 1
        cols[min(j, k)] = cols[j] + cols[k]
        del cols[max(j, k)]
        merged += 1
    return np.column_stack(cols), merged


def verify_sufficiency(
    f: DensityModel,
    n: int,
    m: int,
    replications: int = 1,
    seed=0,
    theta_override=None,
    level: float = TEST_LEVEL,
) -> CheckReport:
    """Chi-square homogeneity of binned i.i.d. draws vs. multinomial draws.

    Pooling ``replications`` runs of size n on each route, the two count
    vectors should be samples of the same multinomial law; a mismatched
    ``theta_override`` serves as the negative control.
    """
    if m < 1:
        raise UsageError("m must be >= 1")
    total_n = n * replications
    if m == 1:
        return CheckReport(
            name=f"sufficiency[{f.name},m=1,n={total_n}]",
            passed=True,
            statistic=0.0,
            p_value=1.0,
            details={"note": "single cell: both routes are deterministic"},
        )
    theta = (
        theta_of(f, m).theta if theta_override is None else np.asarray(theta_override)
    )
    counts_binned = bin_counts(sample_iid(f, total_n, substream_seq(seed, "iid")), m)
    counts_direct = substream(seed, "multinomial").multinomial(total_n, theta)
    table = np.vstack([counts_binned, counts_direct])
    table, merged = _merge_small_cells(table)
    stat, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return CheckReport(
        name=f"sufficiency[{f.name},m={m},n={total_n}]",
        passed=bool(p >= level),
        statistic=float(stat),
        p_value=float(p),
        details={
            "dof": int(dof),
            "level": level,
            "merged_cells": int(merged),
            "negative_control": theta_override is not None,
        },
    )


def verify_transport(
    f: DensityModel,
    n: int,
    m: int,
    seed=0,
    skip_reconstruction: bool = False,
    level: float = TEST_LEVEL,
) -> CheckReport:
    """KS test of the kernel-chain output against the exact f_hat_m CDF.

    ``skip_reconstruction=True`` stops the chain at the midpoint sample,
    the negative control: for any density its atoms cannot match the
    continuous reconstruction law.
    """
    fhat = reconstruct(f, m)
    xs = sample_iid(f, n, substream_seq(seed, "draw"))
    if skip_reconstruction:
        ys = counts_to_midpoint_sample(bin_counts(xs, m), substream_seq(seed, "mid"))
    else:
        ys = transport_chain(n, m).sample(xs, substream_seq(seed, "chain"))
    res = stats.kstest(ys, fhat.cdf)
    return CheckReport(
        name=f"transport[{f.name},m={m},n={n}]"
        + (":skip-reconstruction" if skip_reconstruction else ""),
        passed=bool(res.pvalue >= level),
        statistic=float(res.statistic),
        p_value=float(res.pvalue),
        details={"level": level, "negative_control": skip_reconstruction},
    )


def verify_ystar_moments(
    f: DensityModel,
    n: int,
    m: int,
    replications: int = 10_000,
    seed=0,
    ts: Sequence[float] = (0.25, 0.5, 0.75, 1.0),
) -> CheckReport:
    """Moment checks of the reassembled trajectory against the target process.

    Verifies E[y*_t], Var[y*_t] = t / (4n), per-cell increment variances
    1 / (4 n m), and zero covariance between disjoint increments, all
    within 4 Monte Carlo standard errors.
    """
    R = int(replications)
    if R < 100:
        raise UsageError("need at least 100 replications for moment bands")
    basis = tent_basis(m)
    g = sqrt_cell_means(f, m)
    sd = 1.0 / (2.0 * math.sqrt(n * m))
    edges = np.arange(1, m + 1, dtype=float) / m
    times = np.union1d(np.asarray(ts, dtype=float), edges)
    U = basis.cdf_matrix(times)  # (m, T)

    ybar = substream(seed, "increments").normal(loc=g, scale=sd, size=(R, m))
    paths = brownian_bridge_paths(U, substream(seed, "bridges"), size=R)
    ystar = ybar @ U + paths.sum(axis=1) * sd  # (R, T)

    z_scores: dict[str, float] = {}
    t_idx = {t: int(np.searchsorted(times, t)) for t in ts}
    for t in ts:
        col = ystar[:, t_idx[t]]
        exp_mean = float(g @ U[:, t_idx[t]])
        exp_var = t / (4.0 * n)
        sample_sd = col.std(ddof=1)
        z_scores[f"mean@t={t:g}"] = (col.mean() - exp_mean) / (sample_sd / math.sqrt(R))
        z_scores[f"var@t={t:g}"] = (col.var(ddof=1) - exp_var) / (
            col.var(ddof=1) * math.sqrt(2.0 / (R - 1))
        )

    edge_idx = [int(np.searchsorted(times, e)) for e in edges]
    marks = np.column_stack([np.zeros(R)] + [ystar[:, k] for k in edge_idx])
    incs = np.diff(marks, axis=1)  # (R, m)
    u_edges = np.column_stack([np.zeros(m), basis.cdf_matrix(edges)])
    exp_incs = g @ np.diff(u_edges, axis=1)
    var_inc = 1.0 / (4.0 * n * m)
    for i in range(m):
        z_scores[f"inc-var@{i + 1}"] = (incs[:, i].var(ddof=1) - var_inc) / (
            incs[:, i].var(ddof=1) * math.sqrt(2.0 / (R - 1))
        )
        z_scores[f"inc-mean@{i + 1}"] = (incs[:, i].mean() - exp_incs[i]) / (
            incs[:, i].std(ddof=1) / math.sqrt(R)
        )
    cov = np.cov(incs.T)
    cov_se = var_inc / math.sqrt(R)
    for i in range(m):
        for j in range(i + 1, m):
            z_scores[f"inc-cov@{i + 1},{j + 1}"] = cov[i, j] / cov_se

    worst = max(abs(z) for z in z_scores.values())
    return CheckReport(
        name=f"ystar-moments[{f.name},n={n},m={m},reps={R}]",
        passed=bool(worst <= MOMENT_BAND),
        statistic=float(worst),
        details={
            "band": MOMENT_BAND,
            "worst_band": max(z_scores, key=lambda k: abs(z_scores[k])),
            "z_scores": {k: float(v) for k, v in z_scores.items()},
        },
    )


def transfer_rule(rule: Callable, kernel) -> Callable:
    """Pull a decision rule back through a kernel.

    Returns ``y, seed -> rule(kernel.sample(y, seed'))``, the sampled
    realization of composing the rule's law with the kernel.
    """

    def transferred(y, seed):
        return rule(kernel.sample(y, substream_seq(seed, "transfer")))

    return transferred


def verify_risk_transfer(
    problem: DecisionProblem,
    f: DensityModel,
    n: int,
    m: int,
    replications: int = 10_000,
    seed=0,
    rule: Callable | None = None,
) -> CheckReport:
    """Risk gap across the chain versus the Hellinger-derived TV budget.

    The original rule runs on i.i.d. f samples; the transferred rule runs
    on multinomial counts pushed through the midpoint + tent
    randomization.  Their risks must agree up to the TV bound between f^n
    and f_hat^n plus 4 combined SEs, uniformly over rules; the default
    rule is the empirical cell-1 frequency.  The TV budget is tv_sandwich
    applied to the exact product-rule H^2, which is the computable
    surrogate (<= sqrt(n) H(f, f_hat_m)) for the true TV.
    """
    R = int(replications)
    theta = theta_of(f, m).theta
    theta_true = problem.target(f)
    basis = tent_basis(m)
    cell_edge = 1.0 / m

    if rule is None:

        def rule(rows: np.ndarray) -> np.ndarray:
            return (rows <= cell_edge).mean(axis=1)

    xs = sample_iid(f, R * n, substream_seq(seed, "target")).reshape(R, n)
    loss_target = problem.loss(theta_true, rule(xs))

    counts = substream(seed, "source").multinomial(n, theta, size=R)
    mid_idx = np.repeat(np.tile(np.arange(m), R), counts.ravel()).reshape(R, n)
    us = substream(seed, "tent").uniform(size=(R, n))
    ys = basis.ppf_indexed(mid_idx, us)
    loss_source = problem.loss(theta_true, rule(ys))

    for arr in (loss_target, loss_source):
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise DomainError("loss values fell outside [0, 1]")

    risk_t = RiskEstimate(
        float(loss_target.mean()), float(loss_target.std(ddof=1) / math.sqrt(R)), R
    )
    risk_s = RiskEstimate(
        float(loss_source.mean()), float(loss_source.std(ddof=1) / math.sqrt(R)), R
    )

    h_sq = hellinger_bound(f, m).hellinger_sq
    tv_budget = tv_sandwich(hellinger_sq_product([h_sq] * n))[1]
    gap = abs(risk_s.value - risk_t.value)
    allowance = tv_budget + MOMENT_BAND * math.hypot(
        risk_t.std_error, risk_s.std_error
    )
    return CheckReport(
        name=f"risk-transfer[{f.name},n={n},m={m},reps={R}]",
        passed=bool(gap <= allowance),
        statistic=float(gap),
        details={
            "risk_target": risk_t.value,
            "risk_target_se": risk_t.std_error,
            "risk_source": risk_s.value,
            "risk_source_se": risk_s.std_error,
            "tv_budget": tv_budget,
            "allowance": allowance,
            "theta1": theta_true,
        },
    )


@dataclass(frozen=True)
class SweepResult:
    """Rate-sweep rows (n, m, measured, bound) with a fitted log-log slope."""

    rows: tuple
    slope: float | None
    slope_ci: tuple | None
    exact_zero: bool

    def to_records(self) -> list[dict]:
        out = []
        for n, m, measured, bound in self.rows:
            out.append(
                {
                    "n": int(n),
                    "m": int(m),
                    "measured": measured,
                    "bound": bound,
                    "ratio": measured / bound if bound > 0 else 0.0,
                }
            )
        return out


def rate_sweep(f: DensityModel, gamma: float, n_grid, seed=0) -> SweepResult:
    """sqrt(n) H(f, f_hat_m) along the tuning rule, next to the link bound.

    Deterministic (pure quadrature); the seed is accepted for interface
    uniformity with the other verifiers.
    """
    del seed
    ns = sorted(int(n) for n in n_grid)
    if len(ns) < 4:
        raise UsageError("rate sweeps need at least 4 grid points")
    rows = []
    cache: dict[int, float] = {}
    for n in ns:
        m = choose_m(n, gamma)
        if m not in cache:
            h_sq = hellinger_bound(f, m).hellinger_sq
            # below quadrature noise the reconstruction is exact (uniform case)
            cache[m] = h_sq if h_sq > 1e-20 else 0.0
        measured = math.sqrt(n) * math.sqrt(cache[m])
        bound = bound_density_reconstruction(RateParams(n=n, m=m, gamma=gamma))
        rows.append((n, m, measured, bound))
    measured_col = np.asarray([r[2] for r in rows])
    keep = measured_col > 1e-9
    if keep.sum() < 3:
        return SweepResult(
            rows=tuple(rows), slope=None, slope_ci=None, exact_zero=bool(not keep.any())
        )
    x = np.log(np.asarray([r[0] for r in rows], dtype=float)[keep])
    y = np.log(measured_col[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(len(x) - 2, 1)
    se = math.sqrt(float(resid @ resid) / dof / float(((x - x.mean()) ** 2).sum()))
    return SweepResult(
        rows=tuple(rows),
        slope=float(slope),
        slope_ci=(float(slope - 1.96 * se), float(slope + 1.96 * se)),
        exact_zero=False,
    )


def _perturbed_theta(theta: np.ndarray, delta: float = 0.15) -> np.ndarray:
    """A deliberately wrong cell law for negative controls."""
    signs = np.where(np.arange(theta.size) % 2 == 0, 1.0, -1.0)
    wrong = theta * (1.0 + delta * signs)
    return wrong / wrong.sum()


def run_suite(
    f: DensityModel,
    seed,
    replications: int = 10_000,
    negative_control: bool = False,
    parallel: int = 1,
) -> list[CheckReport]:
    """The default verification suite; deterministic given the master seed."""
    if parallel < 1:
        raise UsageError("parallel degree must be >= 1")
    f.validate()
    jobs: list[tuple[str, Callable[[], CheckReport]]] = []

    for m in (4, 8, 16):
        jobs.append(
            (
                f"sufficiency-m{m}",
                lambda m=m: verify_sufficiency(
                    f, n=10_000, m=m, seed=substream_seq(seed, "sufficiency", m)
                ),
            )
        )
    for m in (8, 16):
        jobs.append(
            (
                f"transport-m{m}",
                lambda m=m: verify_transport(
                    f, n=10_000, m=m, seed=substream_seq(seed, "transport", m)
                ),
            )
        )
    for n in (25, 100):
        jobs.append(
            (
                f"ystar-n{n}",
                lambda n=n: verify_ystar_moments(
                    f,
                    n=n,
                    m=8,
                    replications=replications,
                    seed=substream_seq(seed, "ystar", n),
                ),
            )
        )
    jobs.append(
        (
            "risk-transfer",
            lambda: verify_risk_transfer(
                theta1_problem(16),
                f,
                n=1000,
                m=16,
                replications=replications,
                seed=substream_seq(seed, "risk"),
            ),
        )
    )
    if negative_control:
        wrong = _perturbed_theta(theta_of(f, 8).theta)
        jobs.append(
            (
                "negative-sufficiency",
                lambda: verify_sufficiency(
                    f,
                    n=10_000,
                    m=8,
                    seed=substream_seq(seed, "neg-sufficiency"),
                    theta_override=wrong,
                ),
            )
        )
        jobs.append(
            (
                "negative-transport",
                lambda: verify_transport(
                    f,
                    n=10_000,
                    m=8,
                    seed=substream_seq(seed, "neg-transport"),
                    skip_reconstruction=True,
                ),
            )
        )

    if parallel == 1:
        return [job() for _, job in jobs]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        futures = [pool.submit(job) for _, job in jobs]
        return [fut.result() for fut in futures]
