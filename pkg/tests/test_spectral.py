import math

import numpy as np
import pytest

from metasim import (
    ConfigurationError,
    ModelParams,
    NoRootError,
    NotLinearError,
)
from metasim.spectral import (
    characteristic_flow,
    fit_growth_rate,
    malthus_exponent,
)
from oracles import brute_lambda0, flow_dense


class TestCharacteristicFlow:
    def test_starts_at_birth_state(self):
        p = ModelParams(e=0.0)
        f0 = characteristic_flow(0.0, p)
        assert f0.V == pytest.approx(p.V0, rel=1e-12)
        assert f0.K == pytest.approx(p.K0, rel=1e-12)

    def test_settles_at_unit_fixed_point(self):
        p = ModelParams(e=0.0)
        f = characteristic_flow(60.0, p)
        assert f.V == pytest.approx(1.0, abs=1e-6)
        assert f.K == pytest.approx(1.0, abs=1e-6)

    def test_off_grid_matches_dense_oracle(self):
        p = ModelParams(e=0.0)
        tau = 2.3456
        dense = flow_dense(p.b, p.V0, p.K0, 4.0, 1e-4)
        oracle_V = dense[int(round(tau / 1e-4))]
        assert characteristic_flow(tau, p).V == pytest.approx(oracle_V, rel=1e-8)

    def test_negative_time_rejected(self):
        with pytest.raises(ConfigurationError):
            characteristic_flow(-1.0, ModelParams(e=0.0))


class TestMalthusExponent:
    def test_constant_emission_closed_form(self):
        # alpha = 0 with the threshold at the domain edge makes the
        # spectral integral m/lambda exactly, so the root is m itself
        for m in (1.0, 2.5):
            res = malthus_exponent(ModelParams(e=0.0, alpha=0.0, m=m))
            assert res.lambda0 == pytest.approx(m, rel=1e-9)

    def test_reference_parameters_frozen_value(self):
        res = malthus_exponent(ModelParams(e=0.0))
        assert res.lambda0 == pytest.approx(0.4292814661422716, rel=1e-9)
        assert abs(res.residual) < 1e-10
        assert res.quadrature_nodes > 1000

    def test_reference_parameters_vs_brute_force(self):
        p = ModelParams(e=0.0)
        res = malthus_exponent(p)
        oracle = brute_lambda0(p.b, p.m, p.alpha, p.V0, p.K0, p.Vm)
        assert res.lambda0 == pytest.approx(oracle, rel=1e-6)

    def test_slow_regime_extends_horizon(self):
        # a much deeper entry point needs a longer flow horizon; the
        # solver must grow it on its own
        p = ModelParams(e=0.0, V0=1e-4, K0=1e-3)
        res = malthus_exponent(p)
        assert res.tau_max > 50.0
        assert res.lambda0 == pytest.approx(0.15377797754549305, rel=1e-9)
        oracle = brute_lambda0(p.b, p.m, p.alpha, p.V0, p.K0, p.Vm)
        assert res.lambda0 == pytest.approx(oracle, rel=1e-6)

    def test_monotone_in_emission_strength(self):
        lam1 = malthus_exponent(ModelParams(e=0.0, m=1.0)).lambda0
        lam2 = malthus_exponent(ModelParams(e=0.0, m=2.0)).lambda0
        assert lam2 > lam1
        assert lam2 == pytest.approx(0.7028569585168192, rel=1e-9)

    def test_emission_threshold_shrinks_exponent(self):
        free = malthus_exponent(ModelParams(e=0.0)).lambda0
        gated = malthus_exponent(ModelParams(e=0.0, Vm=0.5)).lambda0
        assert gated < free

    def test_coupled_model_rejected(self):
        with pytest.raises(NotLinearError):
            malthus_exponent(ModelParams(e=1.0))

    def test_no_emission_no_root(self):
        with pytest.raises(NoRootError):
            malthus_exponent(ModelParams(e=0.0, m=0.0))

    def test_unreachable_threshold_no_root(self):
        # the flow saturates at V = 1, so a threshold above it never
        # switches emission on
        with pytest.raises(NoRootError):
            malthus_exponent(ModelParams(e=0.0, Vm=5.0))


class TestFitGrowthRate:
    def test_pure_exponential(self):
        t = np.linspace(0.0, 10.0, 101)
        assert fit_growth_rate(t, np.exp(3.0 * t), (0.0, 10.0)) == pytest.approx(
            3.0, rel=1e-12
        )

    def test_prefactor_ignored(self):
        t = np.linspace(0.0, 10.0, 201)
        M = 5.0 * np.exp(0.7 * t)
        assert fit_growth_rate(t, M, (2.0, 8.0)) == pytest.approx(0.7, rel=1e-12)

    def test_window_restricts_fit(self):
        t = np.linspace(0.0, 10.0, 501)
        M = np.where(t < 5.0, np.exp(t), math.e**5 * np.exp(2.0 * (t - 5.0)))
        assert fit_growth_rate(t, M, (6.0, 10.0)) == pytest.approx(2.0, rel=1e-6)

    def test_too_few_samples_rejected(self):
        t = np.linspace(0.0, 10.0, 101)
        with pytest.raises(ConfigurationError):
            fit_growth_rate(t, np.exp(t), (9.8, 10.0))

    def test_nonpositive_burden_rejected(self):
        t = np.linspace(0.0, 10.0, 101)
        M = np.exp(t)
        M[50] = 0.0
        with pytest.raises(ConfigurationError):
            fit_growth_rate(t, M, (0.0, 10.0))
