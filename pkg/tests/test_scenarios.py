import mpmath as mp
import numpy as np
import pytest
import sympy as sp

from crfluid.constitutive import PowerLawIndex, StressModel
from crfluid.spectral import divergence_residual, make_grid, to_spectral, PhysicalField
from crfluid import scenarios


def _mp_callables(case):
    args = (*case.xs, case.t_sym)
    return (
        [sp.lambdify(args, e, modules="mpmath") for e in case.v_expr],
        sp.lambdify(args, case.c_expr, modules="mpmath"),
        sp.lambdify(args, case.pi_expr, modules="mpmath"),
        [sp.lambdify(args, e, modules="mpmath") for e in case.f_expr],
        [sp.lambdify(args, e, modules="mpmath") for e in case.g_expr],
    )


def _mp_exponent(index):
    if index.form == "constant":
        return lambda c: mp.mpf(str(index.p_minus))
    half = (mp.mpf(str(index.p_plus)) - mp.mpf(str(index.p_minus))) / 2
    mid = (mp.mpf(str(index.p_plus)) + mp.mpf(str(index.p_minus))) / 2
    center = mp.mpf(str(index.center))
    width = mp.mpf(str(index.width))
    sign = 1 if index.increasing else -1
    return lambda c: mid + sign * half * mp.tanh((c - center) / width)


def residuals_at(case, model, point, t):
    """PDE residuals at one space-time point, evaluated with high-precision
    numerical differentiation of the closed-form fields.  Nothing here uses
    the symbolic derivatives that defined the forcings, so the check is an
    independent oracle for the manufactured construction."""
    d = case.d
    v_mp, c_mp, pi_mp, f_mp, g_mp = _mp_callables(case)
    p_of = _mp_exponent(model.index)
    nu0 = mp.mpf(str(model.nu0))

    def stress_entry(q, tt, i, j):
        D = [[None] * d for _ in range(d)]
        for a in range(d):
            for b in range(d):
                def va(xb, a=a, b=b):
                    w = list(q)
                    w[b] = xb
                    return v_mp[a](*w, tt)
                D[a][b] = mp.diff(va, q[b])
        Dsym = [[(D[a][b] + D[b][a]) / 2 for b in range(d)] for a in range(d)]
        s2 = sum(Dsym[a][b] ** 2 for a in range(d) for b in range(d))
        p = p_of(c_mp(*q, tt))
        return 2 * nu0 * (1 + s2) ** ((p - 2) / 2) * Dsym[i][j]

    momentum = 0.0
    for i in range(d):
        r = mp.diff(lambda tt: v_mp[i](*point, tt), t)
        for j in range(d):
            def conv(xj, j=j):
                q = list(point)
                q[j] = xj
                return v_mp[i](*q, t) * v_mp[j](*q, t)
            r += mp.diff(conv, point[j])

            def sij(xj, j=j):
                q = list(point)
                q[j] = xj
                return stress_entry(q, t, i, j)
            r -= mp.diff(sij, point[j])

        def pii(xi):
            q = list(point)
            q[i] = xi
            return pi_mp(*q, t)
        r += mp.diff(pii, point[i])
        r -= f_mp[i](*point, t)
        momentum = max(momentum, abs(r))

    rc = mp.diff(lambda tt: c_mp(*point, tt), t)
    for j in range(d):
        def cvj(xj, j=j):
            q = list(point)
            q[j] = xj
            return c_mp(*q, t) * v_mp[j](*q, t)
        rc += mp.diff(cvj, point[j])

        def cj(xj, j=j):
            q = list(point)
            q[j] = xj
            return c_mp(*q, t)
        rc -= mp.diff(cj, point[j], 2)

        def gj(xj, j=j):
            q = list(point)
            q[j] = xj
            return g_mp[j](*q, t)
        rc += mp.diff(gj, point[j])
    return float(momentum), float(abs(rc))


class TestManufactured:
    def test_unknown_case_rejected(self, variable_model):
        with pytest.raises(ValueError):
            scenarios.make_manufactured("bogus", variable_model)

    def test_affine_profile_rejected(self):
        model = StressModel(
            nu0=0.1,
            index=PowerLawIndex(2.0, 2.9, form="affine_clamped", intercept=2.9,
                                slope=-0.5),
        )
        with pytest.raises(ValueError, match="smooth"):
            scenarios.make_manufactured("decaying_mode_2d", model)

    def test_velocity_is_solenoidal_on_grid(self, mms_2d):
        grid = make_grid(2, 32)
        v = to_spectral(PhysicalField(grid, "vector", mms_2d.eval_velocity(grid, 0.2)))
        assert divergence_residual(v) <= 1e-12

    def test_residual_oracle_20_points(self, mms_2d, variable_model):
        rng = np.random.default_rng(42)
        with mp.workdps(40):
            worst_m = worst_c = 0.0
            for _ in range(20):
                point = [mp.mpf(str(x)) for x in rng.uniform(0, 1, mms_2d.d)]
                t = mp.mpf(str(rng.uniform(0, 0.3)))
                m_res, c_res = residuals_at(mms_2d, variable_model, point, t)
                worst_m = max(worst_m, m_res)
                worst_c = max(worst_c, c_res)
        assert worst_m <= 1e-10
        assert worst_c <= 1e-10

    def test_residual_oracle_3d(self, variable_model):
        case = scenarios.make_manufactured("decaying_mode_3d", variable_model)
        rng = np.random.default_rng(7)
        with mp.workdps(40):
            for _ in range(3):
                point = [mp.mpf(str(x)) for x in rng.uniform(0, 1, 3)]
                t = mp.mpf(str(rng.uniform(0, 0.2)))
                m_res, c_res = residuals_at(case, variable_model, point, t)
                assert m_res <= 1e-10 and c_res <= 1e-10

    def test_steady_shear_is_time_independent(self, variable_model):
        case = scenarios.make_manufactured("steady_shear_2d", variable_model)
        for e in (*case.f_expr, *case.g_expr):
            assert case.t_sym not in e.free_symbols
        grid = make_grid(2, 16)
        f0 = case.eval_momentum_forcing(grid, 0.0)
        f1 = case.eval_momentum_forcing(grid, 5.0)
        assert np.array_equal(f0, f1)

    def test_newtonian_constant_concentration_degeneracy(self):
        # p = 2 and flat concentration: g* vanishes and f* reduces to the
        # classical incompressible forcing dv/dt + div(v x v) - nu Lap v + grad pi
        model = StressModel(nu0=0.2, index=PowerLawIndex(2.0, 2.0, form="constant"))
        case = scenarios.make_manufactured(
            "decaying_mode_2d", model, conc_amplitude=0.0, conc_modes=1
        )
        for e in case.g_expr:
            assert sp.simplify(e) == 0
        x, y = case.xs
        t = case.t_sym
        v = case.v_expr
        for i, (vi, fi) in enumerate(zip(v, case.f_expr)):
            classical = sp.diff(vi, t)
            for j, xj in enumerate((x, y)):
                classical += sp.diff(vi * v[j], xj)
            classical -= model.nu0 * (sp.diff(vi, x, 2) + sp.diff(vi, y, 2))
            classical += sp.diff(case.pi_expr, (x, y)[i])
            assert sp.simplify(fi - classical) == 0

    def test_zero_amplitude_errors_vanish(self):
        model = StressModel(nu0=0.1, index=PowerLawIndex(2.0, 2.0, form="constant"))
        case = scenarios.make_manufactured(
            "decaying_mode_2d", model, amplitude=0.0, conc_amplitude=0.0,
            conc_modes=1, pressure_amplitude=0.0,
        )
        from crfluid.solver import SolverConfig
        cfg = SolverConfig(d=2, n=16, dt=1e-3, t_end=5e-3, nu0=0.1,
                           index=model.index, cadence=10**9)
        ev, ec = scenarios.manufactured_errors(case, cfg, 5e-3)
        assert ev <= 1e-13 and ec <= 1e-13


class TestTwinRuns:
    def test_swap_symmetry(self):
        config, v0, c0 = scenarios.linear_twin_setup(n=16, dt=1e-3, t_end=0.02)
        grid = config.grid
        dv, dc = scenarios.perturbation_fields(grid)
        eps = 1e-5
        r1 = scenarios.uniqueness_experiment(config, v0, c0, epsilon=eps)
        # start from the perturbed pair and perturb back by -eps: the same
        # two trajectories with roles swapped
        r2 = scenarios.uniqueness_experiment(
            config, v0 + eps * dv, c0 + eps * dc, epsilon=-eps
        )
        assert np.allclose(r1.y, r2.y, rtol=1e-12, atol=0)

    def test_out_of_regime_warning(self):
        config, v0, c0 = scenarios.linear_twin_setup(n=16, t_end=0.01)
        config.index = PowerLawIndex(1.5, 1.5, form="constant")
        rep = scenarios.uniqueness_experiment(config, v0, c0, epsilon=1e-6)
        assert rep.regime_warning

    def test_report_series_nonnegative(self):
        config, v0, c0 = scenarios.linear_twin_setup(n=16, t_end=0.02)
        rep = scenarios.uniqueness_experiment(config, v0, c0, epsilon=1e-6)
        for series in (rep.y, rep.v_diff_sq, rep.gradc_diff_sq,
                       rep.strain_diff_diss, rep.lap_diff_diss):
            assert np.all(series >= 0.0)

    def test_linear_twins_decay_per_mode_exactly(self):
        # the velocity perturbation is the (1,1)-type vortex mode, so on the
        # fully linear configuration its energy difference contracts by
        # exactly (1 + nu dt |k|^2)^(-2) per step
        config, v0, c0 = scenarios.linear_twin_setup(n=16, dt=1e-3, t_end=0.05,
                                                     cadence=1)
        rep = scenarios.uniqueness_experiment(config, v0, c0, epsilon=1e-6)
        assert bool(np.all(np.diff(rep.y) < 0.0))
        lam = 8 * np.pi**2
        factor = (1.0 + config.nu0 * config.dt * lam) ** -2
        ratios = rep.v_diff_sq[1:] / rep.v_diff_sq[:-1]
        assert np.allclose(ratios, factor, rtol=1e-12)


class TestDemoSetups:
    def test_synovial_regime_flags(self):
        config, *_ = scenarios.synovial_demo_setup(n=16, t_end=0.01)
        assert config.regime.strong_regime
        assert config.regime.unique_regime

    def test_demo_short_run_completes(self):
        config, result = scenarios.synovial_demo(n=16, dt=1e-3, t_end=0.02)
        assert result.termination == "completed"
        assert result.mean_drift <= 1e-10

    def test_gradc_certificate_passes_on_demo(self):
        config, v0, c0, f, g = scenarios.synovial_demo_setup(
            n=32, dt=1e-3, t_end=0.1, cadence=10
        )
        cert = scenarios.gradc_gronwall_report(config, v0, c0, f=f, g=g)
        assert cert.passed
        assert cert.margin >= -1e-12
        assert np.all(cert.y >= 0.0)

    def test_gn_ratio_bounded_over_run(self):
        from crfluid.diagnostics import gn_interpolation_ratio
        config, result = scenarios.synovial_demo(n=16, dt=1e-3, t_end=0.05)
        ratios = [
            gn_interpolation_ratio(r.eta_l2, r.eta_high, r.grad_eta_l2)
            for r in result.records
        ]
        assert all(np.isfinite(r) for r in ratios)
        assert max(ratios) < 10.0

    def test_mr_ratio_stable_over_demo_run(self):
        # the maximal-regularity quotient must not trend to infinity
        config, result = scenarios.synovial_demo(n=16, dt=1e-3, t_end=0.1)
        mr = np.asarray(result.mr_ratios)
        assert np.all(np.isfinite(mr))
        tail = mr[len(mr) // 2:]
        assert tail.max() <= max(mr.max(), 1.0)
        assert mr.max() < 100.0
