import numpy as np
import pytest

from fermiflux import chain, deviations, dynamics, fock, thermal
from fermiflux.errors import UnsupportedModelError

from conftest import make_models


class TestBlocks:
    def test_alpha_zero_reductions(self, chain2):
        b = deviations.deformed_blocks(chain2, [0.0, 0.0])
        assert np.max(np.abs(b.q)) < 1e-14
        assert np.max(np.abs(b.c)) < 1e-14
        assert np.max(np.abs(b.g - dynamics.drift(chain2).maj)) < 1e-12
        expected = sum(
            chain2.gibbs_system_covariance(chain2.baths[i].beta).maj
            @ chain2.dissipation_matrix(i)
            for i in range(2)
        )
        assert np.max(np.abs(b.b_plus - expected)) < 1e-12

    def test_identities(self, chain2):
        b = deviations.deformed_blocks(chain2, [0.3, 0.0])
        res = b.identity_residuals()
        assert res["a_equals_g_plus_b"] < 1e-12
        assert res["c_closure"] < 1e-10

    def test_identities_random_models(self):
        r = np.random.default_rng(8)
        for model in make_models(8, 4):
            a = r.uniform(-0.6, 0.6, model.n_baths)
            res = deviations.deformed_blocks(model, a).identity_residuals()
            assert max(res.values()) < 1e-10

    def test_uniform_tilt_commutant(self):
        # equal temperatures and alpha = lambda * (1, 1): every block is built
        # from functions of kappa_S times Theta Theta^*, all commuting with kappa_S
        model = chain.build(chain.ChainSpec(length=2, beta0=0.6, betaL=0.6))
        b = deviations.deformed_blocks(model, [0.4, 0.4])
        ks = model.kappa_s.maj
        for mat in (b.b_plus, b.b_minus, b.q, b.c):
            assert np.max(np.abs(mat @ ks - ks @ mat)) < 1e-12


class TestZMatrix:
    def test_spectral_symmetry(self, chain2):
        r = np.random.default_rng(2)
        for _ in range(5):
            a = r.uniform(-0.8, 0.8, 2)
            z = deviations.build_z(deviations.deformed_blocks(chain2, a))
            lam = np.linalg.eigvals(z)
            mirrored = -np.conj(lam)
            # multiset equality under lambda -> -conj(lambda)
            for x in lam:
                assert np.min(np.abs(mirrored - x)) < 1e-8

    def test_closed_system_block_diagonal(self, chain2):
        closed = thermal.ThermalQuasiFreeModel(
            t_s=chain2.t_s, kappa_s=chain2.kappa_s, baths=()
        )
        z = deviations.build_z(deviations.deformed_blocks(closed, np.zeros(0)))
        n = 2 * closed.n_modes
        assert np.max(np.abs(z[:n, n:])) < 1e-14
        assert np.max(np.abs(z[n:, :n])) < 1e-14
        lam = np.sort(np.linalg.eigvals(z).imag)
        ts = np.linalg.eigvalsh(closed.t_s.maj)
        expected = np.sort(np.concatenate([-ts, ts]))
        assert np.max(np.abs(lam - expected)) < 1e-10

    def test_chain_gap_from_axis(self, chain2):
        z = deviations.build_z(deviations.deformed_blocks(chain2, [0.3, 0.0]))
        lam = np.linalg.eigvals(z)
        assert np.min(np.abs(lam.real)) > 1e-8


class TestEAlpha:
    def test_zero(self, chain2):
        assert abs(deviations.e_alpha(chain2, [0.0, 0.0])) < 1e-9

    def test_gallavotti_cohen_at_zero(self, chain2):
        assert abs(deviations.e_alpha(chain2, -chain2.betas)) < 1e-9

    def test_matches_fock_oracle(self, chain2):
        lam, _, _ = fock.dominant_eigenvalue(fock.build_deformed(chain2, [0.3, 0.0]))
        assert abs(deviations.e_alpha(chain2, [0.3, 0.0]) - lam.real) < 1e-8

    def test_translation_invariance(self, chain2):
        r = np.random.default_rng(4)
        for _ in range(5):
            a = r.uniform(-0.7, 0.7, 2)
            lam = r.uniform(-2, 2)
            assert abs(
                deviations.e_alpha(chain2, a + lam) - deviations.e_alpha(chain2, a)
            ) < 1e-9

    def test_gallavotti_cohen_random(self):
        r = np.random.default_rng(5)
        for model in make_models(5, 3):
            for _ in range(4):
                a = r.uniform(-0.6, 0.6, model.n_baths)
                e1 = deviations.e_alpha(model, a - model.betas)
                e2 = deviations.e_alpha(model, -a)
                assert abs(e1 - e2) < 1e-9

    def test_gc_needs_time_reversal(self):
        # complex hopping phases with three baths break the symmetry, in the
        # full Fock dynamics and the spectral reduction alike
        r = np.random.default_rng(77)
        from fermiflux.randgen import random_thermal_model

        worst = 0.0
        for _ in range(5):
            model = random_thermal_model(r, n_modes=3, n_baths=3, kind="tr_broken")
            a = r.uniform(-0.5, 0.5, 3)
            e1 = deviations.e_alpha(model, a - model.betas)
            e2 = deviations.e_alpha(model, -a)
            lam1, _, _ = fock.dominant_eigenvalue(fock.build_deformed(model, a - model.betas))
            # the reduction still tracks the oracle exactly
            assert abs(e1 - lam1.real) < 1e-8
            worst = max(worst, abs(e1 - e2))
        assert worst > 1e-6

    def test_convex_along_segments(self, chain2):
        r = np.random.default_rng(6)
        for _ in range(5):
            a = r.uniform(-0.5, 0.5, 2)
            b = r.uniform(-0.5, 0.5, 2)
            mid = deviations.e_alpha(chain2, 0.5 * (a + b))
            ends = 0.5 * (deviations.e_alpha(chain2, a) + deviations.e_alpha(chain2, b))
            assert mid <= ends + 1e-9

    def test_degenerate_spectrum_refused(self):
        # uncoupled model: the doubled matrix has purely imaginary spectrum,
        # so the half-plane split is undefined and must fail loudly
        from fermiflux.errors import DegenerateSpectrumError

        model = chain.build(chain.ChainSpec(length=2, theta0=0.0, thetaL=0.0))
        with pytest.raises(DegenerateSpectrumError):
            deviations.e_alpha(model, [0.1, 0.0])

    def test_gradient_is_flux(self, chain2):
        # d e / d alpha at 0 equals +J: the adopted global sign convention
        j = thermal.fluxes(chain2, dynamics.stationary_covariance(chain2))
        eps = 1e-6
        for i in range(2):
            a = np.zeros(2)
            a[i] = eps
            de = (deviations.e_alpha(chain2, a) - deviations.e_alpha(chain2, -a)) / (2 * eps)
            assert abs(de - j[i]) < 1e-5


class TestRiccati:
    def test_alpha_zero_is_stationary_covariance(self, chain2):
        spec = deviations.riccati_max(chain2, [0.0, 0.0])
        m = dynamics.stationary_covariance(chain2)
        assert np.max(np.abs(spec.covariance.maj - m.maj)) < 1e-9
        assert abs(spec.e_value) < 1e-9

    def test_solution_properties(self, chain2):
        a = np.array([0.3, 0.0])
        spec = deviations.riccati_max(chain2, a)
        x = spec.x_max
        assert deviations.riccati_residual(chain2, a, x) < 1e-8
        assert np.linalg.eigvalsh(x).min() > 0
        # X^T = X^{-1} (xi-transpose = plain transposition here): exactly the
        # condition making (1 + X)^{-1} a covariance matrix
        assert np.max(np.abs(np.linalg.inv(x.T) - x)) < 1e-7

    def test_covariance_matches_fock_eigenvector(self, chain2):
        a = np.array([0.3, 0.0])
        spec = deviations.riccati_max(chain2, a)
        _, rho_a, _ = fock.dominant_eigenvalue(fock.build_deformed(chain2, a))
        assert np.max(np.abs(fock.covariance_of(rho_a).maj - spec.covariance.maj)) < 1e-7

    def test_trace_formula_consistency(self):
        r = np.random.default_rng(9)
        for model in make_models(9, 3):
            a = r.uniform(-0.5, 0.5, model.n_baths)
            spec = deviations.riccati_max(model, a)
            assert abs(spec.e_value - deviations.e_alpha(model, a)) < 1e-8


class TestTwoBathReduction:
    def test_zero(self, chain2):
        assert abs(deviations.e_two_bath(chain2, 0.0)) < 1e-9

    def test_difference_identity(self, chain2):
        r = np.random.default_rng(10)
        for _ in range(5):
            a1, a2 = r.uniform(-0.8, 0.8, 2)
            full = deviations.e_alpha(chain2, [a1, a2])
            reduced = deviations.e_two_bath(chain2, a1 - a2)
            assert abs(full - reduced) < 1e-9

    def test_zero_at_minus_beta_gap(self, chain2):
        gap = chain2.betas[0] - chain2.betas[1]
        assert abs(deviations.e_two_bath(chain2, -gap)) < 1e-9

    def test_reflection_symmetry(self, chain2):
        # combining the two symmetries: e~ is even about -(beta0-betaL)/2
        gap = chain2.betas[0] - chain2.betas[1]
        r = np.random.default_rng(11)
        for _ in range(5):
            u = r.uniform(-0.8, 0.8)
            left = deviations.e_two_bath(chain2, -gap / 2 + u)
            right = deviations.e_two_bath(chain2, -gap / 2 - u)
            assert abs(left - right) < 1e-9

    def test_needs_two_baths(self):
        model = make_models(12, 1, n_baths=3)[0]
        with pytest.raises(UnsupportedModelError):
            deviations.e_two_bath(model, 0.1)


class TestRateFunction:
    def test_zero_at_mean_flux(self, chain2):
        j = thermal.fluxes(chain2, dynamics.stationary_covariance(chain2))[0]
        curve = deviations.rate_function(chain2, [j])
        assert curve.points[0].rate < 1e-10
        assert abs(curve.points[0].alpha_star) < 1e-4

    def test_nonnegative_and_convex(self, chain2):
        zetas = np.linspace(-0.05, 0.2, 26)
        curve = deviations.rate_function(chain2, zetas)
        rates = curve.rates
        assert rates.min() >= -1e-12
        second = rates[:-2] - 2 * rates[1:-1] + rates[2:]
        assert second.min() >= -1e-6

    def test_asymmetry_matches_entropy_production(self, chain2):
        # I(zeta) - I(-zeta) = -(beta0 - betaL) zeta under grad e(0) = +J
        gap = chain2.betas[0] - chain2.betas[1]
        zetas = np.array([0.02, 0.05, 0.09])
        plus = deviations.rate_function(chain2, zetas).rates
        minus = deviations.rate_function(chain2, -zetas).rates
        assert np.max(np.abs((plus - minus) + gap * zetas)) < 1e-6

    def test_csv_round_formatting(self, chain2):
        curve = deviations.rate_function(chain2, [0.0, 0.05], metadata={"model": "chain2"})
        text = curve.to_csv()
        assert text.splitlines()[0].startswith("#")
        header = [l for l in text.splitlines() if not l.startswith("#")][0]
        assert header == "zeta,I,alpha_star,converged"

    def test_two_bath_required(self):
        model = make_models(13, 1, n_baths=3)[0]
        with pytest.raises(UnsupportedModelError):
            deviations.rate_function(model, [0.0])
