import math

import numpy as np
import pytest
from scipy.stats import norm as scipy_norm

from seqprecision import (ExperimentState, StoppingRuleSpec, evaluate,
                          final_report, forecast_n, norm_quantile,
                          reference_sample_size, threshold,
                          two_sided_beta_correction, tune_rho)
from seqprecision import rules
from seqprecision.errors import ConfigError, UndefinedEstimateError


def four_point_state():
    st = ExperimentState()
    for w, y in [(0, 1.0), (0, 3.0), (1, 2.0), (1, 6.0)]:
        st.observe(w, y)
    return st


def state_from(pairs):
    st = ExperimentState()
    for w, y in pairs:
        st.observe(w, y)
    return st


class TestSpecValidation:
    def test_missing_required_field(self):
        with pytest.raises(ConfigError):
            StoppingRuleSpec(kind="fwcid_naive", alpha=0.1)  # no d
        with pytest.raises(ConfigError):
            StoppingRuleSpec(kind="fpd_naive", alpha=0.05, beta=0.2, tau_h0=0.0)

    def test_bad_ranges(self):
        with pytest.raises(ConfigError):
            StoppingRuleSpec(kind="fwcid_naive", d=-0.1, alpha=0.1)
        with pytest.raises(ConfigError):
            StoppingRuleSpec(kind="fwcid_naive", d=0.1, alpha=1.2)
        with pytest.raises(ConfigError):
            StoppingRuleSpec(kind="fwcid_naive", d=0.1, alpha=0.1, min_per_arm=1)

    def test_zero_effect_gap(self):
        with pytest.raises(ConfigError):
            StoppingRuleSpec(kind="fpd_naive", alpha=0.05, beta=0.2,
                             tau_h0=0.1, tau_h1=0.1)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            StoppingRuleSpec(kind="sprt", alpha=0.05)


class TestThreshold:
    def test_fwcid_example(self):
        # quantile oracle: .09 / ppf(.975)^2
        spec = StoppingRuleSpec(kind="fwcid_naive", d=0.3, alpha=0.05)
        expected = 0.09 / float(scipy_norm.ppf(0.975)) ** 2
        assert threshold(spec) == pytest.approx(expected, abs=1e-12)
        assert threshold(spec) == pytest.approx(0.0234285994, abs=1e-6)

    def test_fpd_example(self):
        spec = StoppingRuleSpec(kind="fpd_naive", alpha=0.05, beta=0.2,
                                tau_h0=0.0, tau_h1=0.2)
        expected = 0.04 / (float(scipy_norm.ppf(0.95)) + float(scipy_norm.ppf(0.8))) ** 2
        assert threshold(spec) == pytest.approx(expected, abs=1e-12)
        assert threshold(spec) == pytest.approx(0.0064698148, abs=1e-6)

    def test_doubling_d_quadruples(self):
        t1 = threshold(StoppingRuleSpec(kind="fwcid_naive", d=0.1, alpha=0.05))
        t2 = threshold(StoppingRuleSpec(kind="fwcid_naive", d=0.2, alpha=0.05))
        assert t2 == pytest.approx(4.0 * t1, rel=1e-12)

    def test_no_threshold_for_significance_kinds(self):
        spec = StoppingRuleSpec(kind="av_test", alpha=0.05, tau_h0=0.0,
                                tau_h1=0.2, rho=0.1)
        with pytest.raises(ConfigError):
            threshold(spec)


class TestEvaluate:
    def test_infinite_variance_continues(self):
        st = state_from([(0, 1.0), (0, 2.0), (1, 5.0)])
        for kind, extra in [("fwcid_naive", {}),
                            ("fpd_naive", dict(beta=0.2, tau_h0=0.0, tau_h1=0.2))]:
            spec = StoppingRuleSpec(kind=kind, d=0.3 if kind.startswith("fwcid") else None,
                                    alpha=0.05, **extra)
            assert evaluate(spec, st) is None

    def test_four_point_continue(self):
        spec = StoppingRuleSpec(kind="fwcid_naive", d=0.3, alpha=0.05)
        assert evaluate(spec, four_point_state()) is None  # 2.5 > .0234

    def test_scripted_first_crossing(self):
        # deterministic stream whose variance statistic first reaches the
        # threshold (.023428) exactly at n=6: values .04, .028889, .017778
        spec = StoppingRuleSpec(kind="fwcid_naive", d=0.3, alpha=0.05)
        pairs = [(0, 0.0), (1, 0.0), (0, 0.4), (1, 0.4), (0, 0.2), (1, 0.2)]
        st = ExperimentState()
        stops = []
        for w, y in pairs:
            st.observe(w, y)
            stops.append(evaluate(spec, st))
        assert stops == [None] * 5 + ["threshold_met"]

    def test_first_crossing_exact_semantics(self):
        # brute-force scan oracle over random scripted paths
        rng = np.random.default_rng(101)
        spec = StoppingRuleSpec(kind="fwcid_naive", d=0.5, alpha=0.1)
        thr = threshold(spec)
        for _ in range(50):
            pairs = [(int(rng.random() < 0.5), float(rng.standard_normal()))
                     for _ in range(60)]
            # oracle: two-pass variance scan
            oracle_n = None
            for n in range(1, len(pairs) + 1):
                sub = pairs[:n]
                y0 = [y for w, y in sub if w == 0]
                y1 = [y for w, y in sub if w == 1]
                if len(y0) < 2 or len(y1) < 2:
                    continue
                var = np.var(y0) / len(y0) + np.var(y1) / len(y1)
                if var <= thr:
                    oracle_n = n
                    break
            st = ExperimentState()
            got_n = None
            for i, (w, y) in enumerate(pairs, start=1):
                st.observe(w, y)
                if evaluate(spec, st) == "threshold_met":
                    got_n = i
                    break
            assert got_n == oracle_n

    def test_n_max_reached(self):
        spec = StoppingRuleSpec(kind="fwcid_naive", d=1e-6, alpha=0.05, n_max=6)
        st = ExperimentState()
        reasons = []
        rng = np.random.default_rng(5)
        for i in range(6):
            st.observe(i % 2, float(rng.standard_normal()))
            reasons.append(evaluate(spec, st))
        assert reasons[:5] == [None] * 5
        assert reasons[5] == "n_max_reached"

    def test_conservative_never_stops_before_naive(self):
        rng = np.random.default_rng(77)
        naive = StoppingRuleSpec(kind="fwcid_naive", d=0.8, alpha=0.1)
        cons = StoppingRuleSpec(kind="fwcid_conservative", d=0.8, alpha=0.1,
                                alpha_c=0.1, rho=0.5)
        for _ in range(20):
            pairs = [(int(rng.random() < 0.5), float(rng.standard_normal()))
                     for _ in range(200)]
            stop_naive = stop_cons = None
            st_n, st_c = ExperimentState(), ExperimentState()
            for i, (w, y) in enumerate(pairs, start=1):
                st_n.observe(w, y)
                st_c.observe(w, y)
                if stop_naive is None and evaluate(naive, st_n) == "threshold_met":
                    stop_naive = i
                if stop_cons is None and evaluate(cons, st_c) == "threshold_met":
                    stop_cons = i
            if stop_cons is not None:
                assert stop_naive is not None and stop_naive <= stop_cons

    def test_fwcid_stop_certifies_halfwidth(self):
        # at a threshold stop, z_{a/2} * sd is at most d for every fwcid kind
        rng = np.random.default_rng(404)
        z2 = norm_quantile(0.95)
        for kind, extra in [("fwcid_naive", {}),
                            ("fwcid_conservative", dict(alpha_c=0.1, rho=0.3)),
                            ("fwcid_always_valid", dict(rho=0.3))]:
            spec = StoppingRuleSpec(kind=kind, d=0.7, alpha=0.1, **extra)
            stops = 0
            for _ in range(10):
                st = ExperimentState()
                for _ in range(400):
                    st.observe(int(rng.random() < 0.5), float(rng.standard_normal()))
                    if evaluate(spec, st) == "threshold_met":
                        if kind != "fwcid_always_valid":
                            assert z2 * math.sqrt(st.estimator_variance()) <= spec.d
                        stops += 1
                        break
            assert stops > 0

    def test_location_invariance(self):
        # variance-based rules never consult the effect estimate
        rng = np.random.default_rng(55)
        pairs = [(int(rng.random() < 0.5), float(rng.standard_normal()))
                 for _ in range(300)]
        for kind, extra in [
            ("fwcid_naive", dict(d=0.5)),
            ("fwcid_conservative", dict(d=0.5, alpha_c=0.1, rho=0.5)),
            ("fpd_naive", dict(beta=0.2, tau_h0=0.0, tau_h1=0.5)),
        ]:
            spec = StoppingRuleSpec(kind=kind, alpha=0.1, **extra)

            def stop_at(shift):
                st = ExperimentState()
                for i, (w, y) in enumerate(pairs, start=1):
                    st.observe(w, y + shift)
                    if evaluate(spec, st) == "threshold_met":
                        return i
                return None

            assert stop_at(0.0) == stop_at(7.5)


class TestForecast:
    def test_four_point_example(self):
        spec = StoppingRuleSpec(kind="fwcid_naive", d=0.3, alpha=0.05)
        # 2.5 * ppf(.975)^2 / (.09 * .25)
        assert forecast_n(spec, four_point_state()) == pytest.approx(426.8288, abs=0.1)

    def test_at_threshold_forecast_equals_n(self):
        spec = StoppingRuleSpec(kind="fwcid_naive", d=0.3, alpha=0.05)
        thr = threshold(spec)
        # build a balanced state, then check the identity algebraically:
        # sigma2_tau = pooled/(n p (1-p)) so forecast = n * sigma2_tau / thr
        st = four_point_state()
        fc = forecast_n(spec, st)
        assert fc == pytest.approx(st.n * st.estimator_variance() / thr, rel=1e-12)

    def test_fpd_example(self):
        spec = StoppingRuleSpec(kind="fpd_naive", alpha=0.05, beta=0.2,
                                tau_h0=0.0, tau_h1=0.2)
        st = ExperimentState()
        # pooled variance 1, p_hat 1/2: forecast = (z_a+z_b)^2/(.04*.25)
        for w, y in [(0, -1.0), (0, 1.0), (1, -1.0), (1, 1.0)]:
            st.observe(w, y * math.sqrt(2.0) / 2.0)  # arm variances .5 -> pooled .5
        # rescale so pooled is exactly 1
        st2 = ExperimentState()
        for w, y in [(0, -1.0), (0, 1.0), (1, -1.0), (1, 1.0)]:
            st2.observe(w, y)
        assert st2.pooled_variance() == 1.0
        assert forecast_n(spec, st2) == pytest.approx(618.2557, abs=0.1)

    def test_undefined_below_minimum(self):
        spec = StoppingRuleSpec(kind="fwcid_naive", d=0.3, alpha=0.05)
        with pytest.raises(UndefinedEstimateError):
            forecast_n(spec, state_from([(0, 1.0), (1, 2.0)]))

    def test_always_valid_forecast_is_first_acceptable_n(self):
        rho = tune_rho(1000, 0.1, "two_sided")
        spec = StoppingRuleSpec(kind="fwcid_always_valid", d=0.25, alpha=0.1, rho=rho)
        rng = np.random.default_rng(12)
        st = ExperimentState()
        for _ in range(100):
            st.observe(int(rng.random() < 0.5), float(rng.standard_normal()))
        fc = forecast_n(spec, st)
        from seqprecision import halfwidth_scale, radius_two_sided
        vn = halfwidth_scale(st)
        assert vn * radius_two_sided(int(math.ceil(fc + 1)), rho, 0.1) <= spec.d
        assert vn * radius_two_sided(max(int(fc * 0.9), 1), rho, 0.1) > spec.d


class TestFinalReport:
    def test_fwcid_interval(self):
        spec = StoppingRuleSpec(kind="fwcid_naive", d=0.3, alpha=0.05)
        st = state_from([(0, -0.15), (0, 0.15), (1, 0.0), (1, 0.3)])
        rep = final_report(spec, st, "threshold_met")
        assert rep.tau_hat == pytest.approx(0.15, abs=1e-12)
        assert (rep.ci_lo, rep.ci_hi) == (pytest.approx(-0.15), pytest.approx(0.45))
        assert rep.ci_hi - rep.ci_lo == pytest.approx(2 * spec.d, abs=1e-12)
        assert rep.rejected is None

    def test_fpd_exact_boundary_not_rejected(self):
        spec = StoppingRuleSpec(kind="fpd_naive", alpha=0.05, beta=0.2,
                                tau_h0=0.0, tau_h1=0.2)
        za = norm_quantile(0.95)
        # two symmetric points per arm: tau_hat = diff, sd known
        st = ExperimentState()
        for w, y in [(0, -1.0), (0, 1.0), (1, -1.0), (1, 1.0)]:
            st.observe(w, y)
        sd = math.sqrt(st.estimator_variance())
        # shift arm1 so tau_hat == za * sd exactly
        st2 = ExperimentState()
        target = za * sd
        for w, y in [(0, -1.0), (0, 1.0), (1, -1.0 + target), (1, 1.0 + target)]:
            st2.observe(w, y)
        rep = final_report(spec, st2, "threshold_met")
        assert rep.tau_hat == pytest.approx(target, rel=1e-12)
        assert rep.rejected is False  # strict inequality at the boundary

    def test_av_test_nmax_not_rejected(self):
        spec = StoppingRuleSpec(kind="av_test", alpha=0.05, tau_h0=0.0,
                                tau_h1=0.2, rho=0.1, n_max=100)
        st = four_point_state()
        rep = final_report(spec, st, "n_max_reached")
        assert rep.rejected is False
        rep2 = final_report(spec, st, "threshold_met")
        assert rep2.rejected is True

    def test_fpd_conservative_nmax_never_rejects(self):
        spec = StoppingRuleSpec(kind="fpd_conservative", alpha=0.05, beta=0.2,
                                tau_h0=0.0, tau_h1=0.2, alpha_c=0.1, rho=0.1,
                                n_max=100)
        st = state_from([(0, -1.0), (0, 1.0), (1, 9.0), (1, 11.0)])
        rep = final_report(spec, st, "n_max_reached")
        assert rep.rejected is False

    def test_requires_stop_reason(self):
        spec = StoppingRuleSpec(kind="fwcid_naive", d=0.3, alpha=0.05)
        with pytest.raises(ValueError):
            final_report(spec, four_point_state(), "running")


class TestTwoSidedBetaCorrection:
    def test_standard_design(self):
        z = two_sided_beta_correction(0.05, 0.2)
        # bisection oracle on the displayed equation
        za2 = float(scipy_norm.ppf(0.975))
        lo, hi = -za2, float(scipy_norm.ppf(0.8))
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            val = scipy_norm.cdf(mid) + scipy_norm.cdf(-(2 * za2 + mid)) - 0.8
            if val < 0:
                lo = mid
            else:
                hi = mid
        assert z == pytest.approx(0.5 * (lo + hi), abs=1e-7)
        assert z == pytest.approx(0.8416178, abs=1e-4)
        z_beta = norm_quantile(0.8)
        assert z < z_beta
        assert z_beta - z < 1e-5

    def test_never_exceeds_z_beta(self):
        for alpha in (0.01, 0.05, 0.2, 0.4):
            for beta in (0.1, 0.2, 0.4):
                assert two_sided_beta_correction(alpha, beta) <= norm_quantile(1 - beta)

    def test_wide_alpha_strictly_smaller(self):
        z = two_sided_beta_correction(0.4, 0.2)
        assert norm_quantile(0.8) - z > 1e-4

    def test_domain(self):
        with pytest.raises(ValueError):
            two_sided_beta_correction(0.0, 0.2)
        with pytest.raises(ConfigError):
            two_sided_beta_correction(0.9, 0.2)  # alpha > 1 - beta


class TestReferenceSampleSize:
    def test_printed_sequence(self):
        assert reference_sample_size("fwcid", 0.01, 0.1) == 108222
        assert reference_sample_size("fwcid", 0.02, 0.1) == 27055
        assert reference_sample_size("fwcid", 0.49, 0.1) == 45
        assert reference_sample_size("fwcid", 0.50, 0.1) == 43

    def test_fpd_value(self):
        assert reference_sample_size("fpd", 0.2, 0.05, 0.2) == 618

    def test_doubling_quarters_before_rounding(self):
        z = norm_quantile(0.95)
        raw1 = z * z / (0.01 * 0.25)
        raw2 = z * z / (0.04 * 0.25)
        assert raw1 == pytest.approx(4.0 * raw2, rel=1e-12)

    def test_accepts_rule_kind_names(self):
        assert reference_sample_size("fwcid_naive", 0.5, 0.1) == \
            reference_sample_size("fwcid", 0.5, 0.1)
        assert reference_sample_size("fpd_conservative", 0.2, 0.05, 0.2) == 618
