import json

import numpy as np
import pytest

from lecam.densities import cosine, uniform
from lecam.equivalence import RateParams, bound_density_reconstruction
from lecam.errors import UsageError
from lecam.experiments import sample_iid, theta_of
from lecam.harness import (
    CheckReport,
    rate_sweep,
    run_suite,
    sig12,
    theta1_problem,
    transfer_rule,
    verify_risk_transfer,
    verify_sufficiency,
    verify_transport,
    verify_ystar_moments,
)
from lecam.kernels import bin_counts, binning_kernel, identity_kernel, unit_interval_space

COSINE = cosine([0.3])


class TestSufficiency:
    def test_matching_laws_pass(self):
        for m in (4, 8):
            report = verify_sufficiency(COSINE, n=10_000, m=m, seed=42)
            assert report.passed, report.to_json()

    def test_single_cell_trivial(self):
        report = verify_sufficiency(COSINE, n=100, m=1, seed=0)
        assert report.passed and report.p_value == 1.0

    def test_negative_control_has_power(self):
        wrong = theta_of(uniform(), 4).theta
        report = verify_sufficiency(
            COSINE, n=100_000, m=4, seed=3, theta_override=wrong
        )
        assert not report.passed
        assert report.p_value < 1e-6
        assert report.details["negative_control"]

    def test_pooled_replications(self):
        report = verify_sufficiency(COSINE, n=2_000, m=4, replications=5, seed=9)
        assert report.passed
        assert "n=10000" in report.name


class TestTransport:
    def test_uniform_exact_reconstruction(self):
        report = verify_transport(uniform(), n=10_000, m=8, seed=1)
        assert report.passed

    def test_cosine_matches_reconstruction_cdf(self):
        report = verify_transport(COSINE, n=10_000, m=8, seed=2)
        assert report.passed, report.to_json()

    def test_skipping_reconstruction_fails(self):
        report = verify_transport(COSINE, n=10_000, m=8, seed=2, skip_reconstruction=True)
        assert not report.passed
        assert report.p_value < 1e-6


class TestYstarMoments:
    def test_variance_identity_n100(self):
        report = verify_ystar_moments(COSINE, n=100, m=8, replications=10_000, seed=42)
        assert report.passed, report.to_json()
        # the t = 1 variance band is centred on 1 / (4 * 100)
        assert abs(report.details["z_scores"]["var@t=1"]) <= 4.0

    def test_uniform_terminal_mean(self):
        report = verify_ystar_moments(uniform(), n=50, m=4, replications=5_000, seed=7)
        assert report.passed
        # E[y*_1] = int_0^1 sqrt(1) = 1: covered by the mean@t=1 band
        assert abs(report.details["z_scores"]["mean@t=1"]) <= 4.0

    def test_minimal_m(self):
        report = verify_ystar_moments(COSINE, n=25, m=2, replications=5_000, seed=11)
        assert report.passed, report.to_json()

    def test_replication_floor(self):
        with pytest.raises(UsageError):
            verify_ystar_moments(COSINE, n=25, m=4, replications=10, seed=0)


class TestTransferRule:
    def test_identity_kernel_keeps_rule(self):
        ident = identity_kernel(unit_interval_space(4))
        rule = lambda xs: float(np.mean(xs))
        moved = transfer_rule(rule, ident)
        xs = np.array([0.1, 0.2, 0.3, 0.4])
        assert moved(xs, seed=5) == rule(xs)

    def test_deterministic_kernel_composes(self):
        # a deterministic statistic S makes the transferred rule rule(S(y))
        n, m = 50, 4
        kernel = binning_kernel(n, m)
        rule = lambda counts: counts[0] / n
        moved = transfer_rule(rule, kernel)
        xs = sample_iid(COSINE, n, 13)
        assert moved(xs, seed=0) == rule(bin_counts(xs, m))


class TestRiskTransfer:
    def test_uniform_risks_equal(self):
        # f = f_hat exactly: TV budget ~ 0 and both risks agree to MC error
        report = verify_risk_transfer(
            theta1_problem(8), uniform(), n=500, m=8, replications=4_000, seed=5
        )
        assert report.passed
        assert report.details["tv_budget"] <= 1e-6

    def test_cosine_within_budget(self):
        report = verify_risk_transfer(
            theta1_problem(16), COSINE, n=1_000, m=16, replications=4_000, seed=6
        )
        assert report.passed, report.to_json()
        assert report.statistic <= report.details["allowance"]

    def test_losses_are_bounded(self):
        report = verify_risk_transfer(
            theta1_problem(8), COSINE, n=200, m=8, replications=1_000, seed=8
        )
        assert 0.0 <= report.details["risk_target"] <= 1.0
        assert 0.0 <= report.details["risk_source"] <= 1.0

    def test_adversarial_constant_rule_still_within_budget(self):
        # a constant rule incurs the same loss on both experiments
        constant = lambda rows: np.full(rows.shape[0], 0.5)
        report = verify_risk_transfer(
            theta1_problem(8), COSINE, n=200, m=8,
            replications=1_000, seed=8, rule=constant,
        )
        assert report.passed
        assert report.statistic == pytest.approx(0.0, abs=1e-12)


class TestRateSweep:
    def test_uniform_exact_zero(self):
        sweep = rate_sweep(uniform(), 1.0, [2**k for k in range(10, 15)])
        assert sweep.exact_zero
        assert sweep.slope is None
        assert all(row[2] == 0.0 for row in sweep.rows)

    def test_cosine_monotone_and_sloped(self):
        grid = [2**k for k in range(10, 19)]
        sweep = rate_sweep(COSINE, 1.0, grid)
        measured = [row[2] for row in sweep.rows]
        assert all(a > b for a, b in zip(measured, measured[1:]))
        # theory for a smooth member at gamma = 1: 1/2 - (1+gamma)/(2+gamma) = -1/6
        assert sweep.slope == pytest.approx(-1.0 / 6.0, abs=0.2)
        lo, hi = sweep.slope_ci
        assert lo <= sweep.slope <= hi

    def test_bound_column_reproduces_formula(self):
        sweep = rate_sweep(COSINE, 1.0, [1024, 2048, 4096, 8192])
        for n, m, _, bound in sweep.rows:
            assert bound == bound_density_reconstruction(
                RateParams(n=n, m=m, gamma=1.0)
            )

    def test_grid_floor(self):
        with pytest.raises(UsageError):
            rate_sweep(COSINE, 1.0, [1024, 2048, 4096])


class TestSuite:
    def test_deterministic_across_parallelism(self):
        serial = run_suite(COSINE, seed=42, replications=1_000)
        threaded = run_suite(COSINE, seed=42, replications=1_000, parallel=8)
        assert [r.to_json() for r in serial] == [r.to_json() for r in threaded]
        assert all(r.passed for r in serial)

    def test_negative_controls_fail(self):
        reports = run_suite(COSINE, seed=42, replications=1_000, negative_control=True)
        names = [r.name for r in reports]
        assert any("skip-reconstruction" in n for n in names)
        failing = [r for r in reports if not r.passed]
        assert len(failing) == 2
        assert all(r.details.get("negative_control") for r in failing)

    def test_parallel_guard(self):
        with pytest.raises(UsageError):
            run_suite(COSINE, seed=1, parallel=0)


class TestReportSerialization:
    def test_sig12_rounding(self):
        assert sig12(0.12345678901234567) == 0.123456789012
        assert sig12({"a": np.float64(1.0) / 3.0})["a"] == 0.333333333333
        assert sig12([np.int64(3), "x"]) == [3, "x"]

    def test_report_json_is_stable(self):
        report = CheckReport(
            name="demo", passed=True, statistic=1.0 / 3.0, p_value=0.5,
            details={"z": np.float64(2.0) / 3.0},
        )
        record = json.loads(report.to_json())
        assert record["statistic"] == 0.333333333333
        assert record["details"]["z"] == 0.666666666667
        assert report.to_json() == report.to_json()
