import math

import numpy as np
import pytest

from seqprecision import (DgpSpec, DgpStream, DistSpec, analytic_moments,
                          custom_dgp, solve_effect_constant,
                          solve_normalization, standard_dgp)
from seqprecision.errors import ConfigError


class TestAnalyticMoments:
    def test_lognormal(self):
        m, v = analytic_moments(DistSpec("lognormal", 0.0, 1.0))
        assert m == pytest.approx(math.exp(0.5), abs=1e-4)
        assert m == pytest.approx(1.64872, abs=1e-4)
        assert v == pytest.approx((math.e - 1) * math.e, abs=1e-4)
        assert v == pytest.approx(4.67077, abs=1e-4)

    def test_scaled_normal(self):
        m, v = analytic_moments(DistSpec("normal", 0.0, 1.0, scale_a=0.5))
        assert m == 0.0
        assert v == pytest.approx(0.25, abs=1e-15)

    def test_gamma(self):
        m, v = analytic_moments(DistSpec("gamma", 1.0, 1.2102))
        assert m == pytest.approx(1.2102, abs=1e-4)
        assert v == pytest.approx(1.2102 ** 2, abs=1e-4)
        assert v == pytest.approx(1.46458, abs=1e-4)

    def test_shift_moves_mean_only(self):
        m0, v0 = analytic_moments(DistSpec("lognormal", 0.0, 1.0))
        m1, v1 = analytic_moments(DistSpec("lognormal", 0.0, 1.0, post_shift=0.2))
        assert m1 == pytest.approx(m0 + 0.2, rel=1e-12)
        assert v1 == v0

    def test_invalid_params(self):
        with pytest.raises(ConfigError):
            DistSpec("normal", 0.0, -1.0)
        with pytest.raises(ConfigError):
            DistSpec("gamma", -1.0, 1.0)
        with pytest.raises(ConfigError):
            DistSpec("weibull", 1.0, 1.0)


class TestNormalization:
    def test_unit_variance_arms(self):
        a = solve_normalization(DistSpec("normal", 0.0, 1.0),
                                DistSpec("normal", 0.0, 1.0), 0.5)
        assert a == pytest.approx(1.0, abs=1e-12)

    def test_lognormal_pair(self):
        a = solve_normalization(DistSpec("lognormal", 0.0, 1.0),
                                DistSpec("lognormal", 0.0, 1.0), 0.5)
        assert a == pytest.approx(0.46270, abs=1e-4)

    def test_equal_variances_p_independent(self):
        c = DistSpec("gamma", 2.0, 1.0)
        t = DistSpec("normal", 1.0, math.sqrt(2.0))
        vals = [solve_normalization(c, t, p) for p in (0.1, 0.3, 0.5, 0.9)]
        assert max(vals) - min(vals) < 1e-12


class TestEffectConstants:
    def test_paper_values(self):
        c0 = DistSpec("gamma", 1.0, 1.0)
        c2 = solve_effect_constant(c0, lambda v: DistSpec("lognormal", v, 0.75),
                                   0.5, 0.2, c_init=0.0)
        c3 = solve_effect_constant(c0, lambda v: DistSpec("gamma", 1.0, v),
                                   0.5, 0.2, c_init=1.5, c_lower=0.0)
        c4 = solve_effect_constant(c0, lambda v: DistSpec("gamma", v, 1.0),
                                   0.5, 0.2, c_init=1.5, c_lower=0.0)
        assert c2 == pytest.approx(-0.0949, abs=5e-4)
        assert c3 == pytest.approx(1.2235, abs=5e-4)
        assert c4 == pytest.approx(1.2102, abs=5e-4)

    def test_dgp8_quadratic_oracle(self):
        # a(c)^2 (c-1)^2 = .04 with a(c)^2 = 1/(.5(c+1)) gives
        # c^2 - 2.02c + .98 = 0, upper root (2.02 + sqrt(.1604))/2
        expected = (2.02 + math.sqrt(2.02 ** 2 - 4 * 0.98)) / 2
        c0 = DistSpec("gamma", 1.0, 1.0)
        c4 = solve_effect_constant(c0, lambda v: DistSpec("gamma", v, 1.0),
                                   0.5, 0.2, c_init=1.5, c_lower=0.0)
        assert c4 == pytest.approx(expected, abs=1e-9)


class TestStandardDgps:
    @pytest.mark.parametrize("dgp_id", range(1, 9))
    def test_normalization_invariant(self, dgp_id):
        dgp = standard_dgp(dgp_id)
        v0 = analytic_moments(dgp.control)[1]
        v1 = analytic_moments(dgp.treated)[1]
        assert (1 - dgp.p) * v1 + dgp.p * v0 == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("dgp_id,tau", [(1, 0.0), (2, 0.0), (3, 0.2), (4, 0.2),
                                            (5, 0.2), (6, 0.2), (7, 0.2), (8, 0.2)])
    def test_effect_invariant(self, dgp_id, tau):
        dgp = standard_dgp(dgp_id)
        assert dgp.tau == pytest.approx(tau, abs=1e-10)

    def test_dgp4_shift_applied_after_scaling(self):
        dgp = standard_dgp(4)
        assert dgp.treated.post_shift == 0.2
        assert dgp.treated.scale_a == dgp.control.scale_a
        assert dgp.tau == pytest.approx(0.2, abs=1e-12)

    def test_invalid_id(self):
        with pytest.raises(ConfigError):
            standard_dgp(9)

    def test_spec_validation_catches_bad_scale(self):
        with pytest.raises(ConfigError):
            DgpSpec(id=1, control=DistSpec("normal", 0.0, 1.0),
                    treated=DistSpec("normal", 0.0, 1.0, scale_a=2.0), p=0.5)


class TestSampling:
    def test_alternating_sequence(self):
        dgp = standard_dgp(1, assignment="alternating")
        stream = DgpStream(dgp, np.random.default_rng(0))
        ws = [stream.draw()[0] for _ in range(8)]
        assert ws == [1, 0, 1, 0, 1, 0, 1, 0]

    def test_alternating_across_batches(self):
        dgp = standard_dgp(1, assignment="alternating")
        stream = DgpStream(dgp, np.random.default_rng(0))
        ws1, _ = stream.draw_batch(5)
        ws2, _ = stream.draw_batch(5)
        assert list(ws1) + list(ws2) == [1, 0, 1, 0, 1, 0, 1, 0, 1, 0]

    def test_dgp1_moment_check(self):
        dgp = standard_dgp(1)
        stream = DgpStream(dgp, np.random.default_rng(77))
        ws, ys = stream.draw_batch(10 ** 6)
        for arm in (0, 1):
            sample = ys[ws == arm]
            dist = dgp.treated if arm else dgp.control
            m, v = analytic_moments(dist)
            assert sample.mean() == pytest.approx(
                m, abs=4 * math.sqrt(v / sample.size))
            assert sample.var() == pytest.approx(v, rel=0.01)

    def test_dgp5_effect_check(self):
        dgp = standard_dgp(5)
        stream = DgpStream(dgp, np.random.default_rng(123))
        ws, ys = stream.draw_batch(10 ** 6)
        diff = ys[ws == 1].mean() - ys[ws == 0].mean()
        se = math.sqrt(ys[ws == 1].var() / (ws == 1).sum()
                       + ys[ws == 0].var() / (ws == 0).sum())
        assert abs(diff - 0.2) < 4 * se

    @pytest.mark.parametrize("dist", [
        DistSpec("normal", 0.3, 1.7),
        DistSpec("lognormal", 0.0, 1.0),
        DistSpec("lognormal", -0.0949, 0.75),
        DistSpec("gamma", 1.0, 1.2235),
        DistSpec("gamma", 1.2102, 1.0),
        DistSpec("gamma", 0.4, 2.0),  # shape < 1 exercises the boost path
    ])
    def test_first_four_moments(self, dist):
        # batched standard errors: 100 batches of 1e4 draws
        from seqprecision.dgp import _draw
        rng = np.random.default_rng(2)
        draws = _draw(dist, 10 ** 6, rng).reshape(100, 10 ** 4)
        m, v = analytic_moments(dist)
        if dist.family == "normal":
            mu3, mu4 = 0.0, 3.0 * dist.param2 ** 4
        elif dist.family == "lognormal":
            s2 = dist.param2 ** 2
            e = math.exp(s2)
            mu3 = (e - 1) ** 2 * (e + 2) * math.exp(3 * dist.param1 + 1.5 * s2)
            mu4 = ((e - 1) ** 2 * (e ** 4 + 2 * e ** 3 + 3 * e ** 2 - 6)
                   * math.exp(4 * dist.param1 + 2 * s2))
        else:
            k, th = dist.param1, dist.param2
            mu3 = 2 * k * th ** 3
            mu4 = 3 * k * (k + 2) * th ** 4
        targets = [m, v, mu3 * dist.scale_a ** 3, mu4 * dist.scale_a ** 4]
        centered = draws - draws.mean(axis=1, keepdims=True)
        stats = [draws.mean(axis=1), (centered ** 2).mean(axis=1),
                 (centered ** 3).mean(axis=1), (centered ** 4).mean(axis=1)]
        for target, per_batch in zip(targets, stats):
            est = per_batch.mean()
            se = per_batch.std(ddof=1) / math.sqrt(len(per_batch))
            assert abs(est - target) <= 5 * se, (target, est, se)


class TestCustomDgp:
    def test_custom_pair_is_normalized(self):
        dgp = custom_dgp(DistSpec("gamma", 2.0, 1.0), DistSpec("normal", 3.0, 2.0),
                         p=0.4)
        v0 = analytic_moments(dgp.control)[1]
        v1 = analytic_moments(dgp.treated)[1]
        assert (1 - dgp.p) * v1 + dgp.p * v0 == pytest.approx(1.0, abs=1e-12)
