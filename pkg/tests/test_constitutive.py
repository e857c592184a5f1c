import numpy as np
import pytest

from crfluid.constitutive import (
    PowerLawIndex,
    StressModel,
    check_properties,
    eval_stress,
    strain_sq,
    stress,
    stress_jacobian_D,
    stress_jacobian_c,
)
from crfluid.spectral import make_grid, physical_field


def random_sym(rng, d):
    a = rng.standard_normal((d, d))
    return 0.5 * (a + a.T)


def random_rotation(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


class TestPowerLawIndex:
    def test_constant(self):
        p = PowerLawIndex(2.0, 2.0, form="constant")
        assert p(0.0) == 2.0
        assert p(1e6) == 2.0
        assert p.derivative(3.0) == 0.0

    def test_constant_requires_equal_bounds(self):
        with pytest.raises(ValueError):
            PowerLawIndex(2.0, 2.5, form="constant")

    def test_tanh_asymptotes(self):
        p = PowerLawIndex(2.0, 3.0, form="tanh_profile", center=0.0, width=0.5)
        assert p(-100.0) == pytest.approx(3.0)
        assert p(100.0) == pytest.approx(2.0)
        up = PowerLawIndex(2.0, 3.0, form="tanh_profile", center=0.0,
                           width=0.5, increasing=True)
        assert up(100.0) == pytest.approx(3.0)

    def test_affine_hand_value(self):
        p = PowerLawIndex(2.5, 3.0, form="affine_clamped", intercept=3.0, slope=-0.5)
        assert p(0.4) == pytest.approx(2.8)
        assert p(10.0) == 2.5
        assert p(-10.0) == 3.0

    def test_bounds_hold_everywhere(self, rng):
        for p in (
            PowerLawIndex(1.5, 2.7, form="tanh_profile", center=0.3, width=0.1),
            PowerLawIndex(1.5, 2.7, form="affine_clamped", intercept=2.0, slope=4.0),
        ):
            c = rng.uniform(-50, 50, 4096)
            vals = p(c)
            assert np.all(vals >= p.p_minus) and np.all(vals <= p.p_plus)

    @pytest.mark.parametrize("form,kw", [
        ("tanh_profile", dict(center=0.2, width=0.15)),
        ("affine_clamped", dict(intercept=2.5, slope=-1.5)),
    ])
    def test_lipschitz_bound_vs_finite_differences(self, form, kw):
        p = PowerLawIndex(1.8, 2.9, form=form, **kw)
        c = np.linspace(-3, 3, 20001)
        slopes = np.abs(np.diff(p(c)) / np.diff(c))
        assert slopes.max() <= p.lipschitz_bound + 1e-9

    def test_corner_mask(self):
        p = PowerLawIndex(2.0, 3.0, form="affine_clamped", intercept=3.0, slope=-1.0)
        assert p.corner_mask(np.array([0.0, 0.5, 1.0, 2.0])).tolist() == [
            True, False, True, False,
        ]
        assert p.derivative(0.5) == -1.0
        assert p.derivative(2.0) == 0.0


class TestStress:
    def test_zero_strain_gives_zero_stress(self, variable_model):
        D = np.zeros((2, 2))
        assert np.all(stress(variable_model, 0.7, D) == 0.0)

    def test_newtonian_reduction(self, newtonian_model, rng):
        D = random_sym(rng, 2)
        S = stress(newtonian_model, 0.3, D)
        assert np.allclose(S, 2 * newtonian_model.nu0 * D, rtol=1e-15)

    def test_hand_value(self):
        # nu0 = 1, p = 3, D = diag(1, -1): |D|^2 = 2, S = 2*sqrt(3)*D
        model = StressModel(nu0=1.0, index=PowerLawIndex(3.0, 3.0, form="constant"))
        D = np.diag([1.0, -1.0])
        S = stress(model, 0.0, D)
        assert np.allclose(S, 2.0 * np.sqrt(3.0) * D, rtol=1e-14)

    def test_field_wrapper_and_finite_guard(self, variable_model, rng):
        g = make_grid(2, 8)
        c = physical_field(g, "scalar", rng.standard_normal(g.phys_shape))
        Dvals = rng.standard_normal((2, 2) + g.phys_shape)
        Dvals = 0.5 * (Dvals + np.swapaxes(Dvals, 0, 1))
        D = physical_field(g, "tensor", Dvals)
        S = eval_stress(variable_model, c, D)
        assert S.values.shape == (2, 2) + g.phys_shape
        assert np.allclose(S.values, np.swapaxes(S.values, 0, 1))
        bad = D.values.copy()
        bad[0, 0, 0, 0] = np.inf
        with pytest.raises(ValueError):
            eval_stress(variable_model, c, physical_field(g, "tensor", bad))

    def test_frame_indifference(self, variable_model, rng):
        for d in (2, 3):
            for _ in range(50):
                D = random_sym(rng, d)
                Q = random_rotation(rng, d)
                c = rng.uniform(-1, 2)
                lhs = stress(variable_model, c, Q @ D @ Q.T)
                rhs = Q @ stress(variable_model, c, D) @ Q.T
                assert np.allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))

    def test_coercivity_sign(self, variable_model, rng):
        for _ in range(100):
            D = random_sym(rng, 2) * 10.0 ** rng.uniform(-3, 3)
            if not D.any():
                continue
            val = np.einsum("ij,ij->", stress(variable_model, 0.5, D), D)
            assert val > 0.0


def _fd_jacobian_action(model, c, D, B, h):
    plus = stress(model, c, D + h * B)
    minus = stress(model, c, D - h * B)
    return (plus - minus) / (2 * h)


class TestStressJacobianD:
    def test_newtonian_identity_action(self, newtonian_model, rng):
        D = random_sym(rng, 2)
        B = random_sym(rng, 2)
        J = stress_jacobian_D(newtonian_model, 0.1, D)
        action = np.einsum("ijkh,kh->ij", J, B)
        assert np.allclose(action, 2 * newtonian_model.nu0 * B, rtol=1e-14)

    def test_symmetry_ij_kh_exact(self, variable_model, rng):
        for d in (2, 3):
            D = random_sym(rng, d) * 3.0
            J = stress_jacobian_D(variable_model, 0.4, D)
            assert np.array_equal(J, np.transpose(J, (2, 3, 0, 1)))

    def test_matches_finite_differences(self, variable_model, rng):
        # central differences with a Richardson step-halving check
        for _ in range(25):
            d = rng.choice([2, 3])
            D = random_sym(rng, d) * 10.0 ** rng.uniform(-1, 1)
            B = random_sym(rng, d)
            B /= np.sqrt(strain_sq(B))
            c = rng.uniform(-1, 2)
            J = stress_jacobian_D(variable_model, c, D)
            action = np.einsum("ijkh,kh->ij", J, B)
            h = 1e-5
            e1 = _fd_jacobian_action(variable_model, c, D, B, h)
            e2 = _fd_jacobian_action(variable_model, c, D, B, h / 2)
            fd = (4.0 * e2 - e1) / 3.0
            scale = max(np.abs(action).max(), 1e-12)
            assert np.abs(action - fd).max() <= 1e-6 * scale

    def test_quadratic_form_lower_bound(self, rng):
        # min over random B of J:(B x B) / (weight |B|^2) >= min(1, p-1)*2*nu0
        model = StressModel(
            nu0=0.7, index=PowerLawIndex(1.5, 2.9, form="tanh_profile",
                                         center=0.0, width=0.4)
        )
        m = 10_000
        c = rng.uniform(-3, 3, m)
        D = rng.standard_normal((2, 2, m))
        D = 0.5 * (D + np.swapaxes(D, 0, 1))
        D *= 10.0 ** rng.uniform(-3, 3, m) / np.sqrt(strain_sq(D))
        B = rng.standard_normal((2, 2, m))
        B = 0.5 * (B + np.swapaxes(B, 0, 1))
        p = model.index(c)
        J = stress_jacobian_D(model, c, D)
        quad = np.einsum("ijkh...,ij...,kh...->...", J, B, B)
        weight = (1.0 + strain_sq(D)) ** (0.5 * (p - 2.0)) * strain_sq(B)
        floor = np.minimum(1.0, p - 1.0) * 2.0 * model.nu0
        assert np.all(quad / weight >= floor - 1e-9)


class TestStressJacobianC:
    def test_constant_p_gives_zero(self, newtonian_model, rng):
        D = random_sym(rng, 2)
        jac, corner = stress_jacobian_c(newtonian_model, 0.2, D)
        assert np.all(jac == 0.0)
        assert not corner.any()

    def test_zero_strain_gives_zero(self, variable_model):
        jac, _ = stress_jacobian_c(variable_model, 0.2, np.zeros((2, 2)))
        assert np.all(jac == 0.0)

    def test_matches_finite_differences(self, variable_model, rng):
        # sample the active tanh band, where dp/dc is O(1); outside it the
        # finite-difference signal drowns in cancellation noise
        idx = variable_model.index
        for _ in range(25):
            D = random_sym(rng, 2) * 10.0 ** rng.uniform(-1, 1)
            c = idx.center + idx.width * rng.uniform(-1.5, 1.5)
            jac, corner = stress_jacobian_c(variable_model, c, D)
            assert not corner.any()
            h = 1e-5
            f1 = (stress(variable_model, c + h, D) - stress(variable_model, c - h, D)) / (2 * h)
            f2 = (stress(variable_model, c + h / 2, D) - stress(variable_model, c - h / 2, D)) / h
            fd = (4.0 * f2 - f1) / 3.0
            fd_noise = 1e-10 * np.abs(stress(variable_model, c, D)).max() / h
            scale = max(np.abs(jac).max(), 1e-10)
            assert np.abs(jac - fd).max() <= 1e-6 * scale + fd_noise


class TestCheckProperties:
    def test_newtonian_constants(self):
        model = StressModel(nu0=0.4, index=PowerLawIndex(2.0, 2.0, form="constant"))
        rep = check_properties(model, n_samples=2000, rng_seed=5)
        assert rep.passed
        assert rep.k1_measured == pytest.approx(0.8, rel=1e-12)
        assert rep.k2_measured == pytest.approx(0.8, rel=1e-9)
        assert rep.k4_measured == pytest.approx(0.8, rel=1e-12)
        assert rep.k3_measured == 0.0

    @pytest.mark.parametrize("d", [2, 3])
    def test_variable_p_no_violations(self, variable_model, d):
        rep = check_properties(variable_model, n_samples=10_000, rng_seed=7, d=d)
        assert rep.violations == 0
        assert rep.witness is None
        assert rep.k1_measured > 0 and rep.k4_measured > 0

    def test_k4_stable_across_seeds(self, variable_model):
        vals = [
            check_properties(variable_model, n_samples=5000, rng_seed=s).k4_measured
            for s in (0, 1, 2)
        ]
        assert max(vals) - min(vals) <= 0.05 * max(vals)

    def test_identical_pair_degenerates(self, variable_model, rng):
        D = random_sym(rng, 2)
        diff = stress(variable_model, 0.5, D) - stress(variable_model, 0.5, D)
        assert np.einsum("ij,ij->", diff, D - D) == 0.0

    def test_rejects_empty_sample(self, variable_model):
        with pytest.raises(ValueError):
            check_properties(variable_model, n_samples=0)
