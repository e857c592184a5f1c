"""Manufactured solutions, twin-run contraction experiments, convergence
ladders, and the shipped synovial-fluid demonstration.

Manufactured cases fix closed-form fields (v*, c*, pi*) and derive the
forcings symbolically: f* from the momentum balance and g* as a pure
gradient g* = grad G with -Lap G equal to the concentration-equation
residual (solvable because that residual has zero mean; a nonzero mean is a
construction bug and raises).  The symbolic route keeps the forcings exact
pointwise functions with no discretization in their definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import sympy as sp

from .constitutive import PowerLawIndex, StressModel
from .diagnostics import (
    calibrate_gronwall_constant,
    gradc_certificate_sample,
    gronwall_certificate,
)
from .solver import RegimeFlags, SolverConfig, State, run, step, \
    prepare_initial_state
from .spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    VECTOR,
    gradient,
    l2_norm,
    laplacian,
    lp_norm,
    sym_gradient,
    to_physical,
)

CASE_IDS = ("decaying_mode_2d", "decaying_mode_3d", "steady_shear_2d")


# ---------------------------------------------------------------------------
# symbolic machinery
# ---------------------------------------------------------------------------

def _symbols(d: int):
    xs = sp.symbols(f"x1:{d + 1}", real=True)
    t = sp.Symbol("t", real=True, nonnegative=True)
    return xs, t


def _index_expr(index: PowerLawIndex, c):
    """Symbolic exponent profile; only smooth forms are manufacturable."""
    if index.form == "constant":
        return sp.Float(index.p_minus)
    if index.form == "tanh_profile":
        half = sp.Rational(1, 2) * (index.p_plus - index.p_minus)
        mid = sp.Rational(1, 2) * (index.p_plus + index.p_minus)
        sign = 1 if index.increasing else -1
        return mid + sign * half * sp.tanh((c - index.center) / index.width)
    raise ValueError(
        f"exponent form {index.form!r} is not smooth; manufactured cases "
        "support 'constant' and 'tanh_profile'"
    )


def _stress_expr(model: StressModel, c, v, xs):
    d = len(xs)
    D = [
        [
            (sp.diff(v[i], xs[j]) + sp.diff(v[j], xs[i])) / 2
            for j in range(d)
        ]
        for i in range(d)
    ]
    s2 = sum(D[i][j] ** 2 for i in range(d) for j in range(d))
    p = _index_expr(model.index, c)
    w = 2 * model.nu0 * (1 + s2) ** ((p - 2) / 2)
    return [[w * D[i][j] for j in range(d)] for i in range(d)]


def _numeric_scale(expr, syms, samples=8, seed=0):
    fn = sp.lambdify(syms, expr, modules="numpy")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.05, 0.95, (samples, len(syms)))
    vals = np.asarray([complex(fn(*p)) for p in pts])
    return float(np.abs(vals).max())


def _poisson_invert_trig(expr, xs):
    """Solve -Lap G = expr for a trigonometric polynomial expr.

    Rewrites into complex exponentials, divides each mode by |k|^2, and
    demands that the zero mode cancel (it must, for a divergence-form right
    side); raises ValueError otherwise.  Float coefficients leave roundoff
    dust behind the exponential rewriting, so the zero-mode and realness
    checks are numeric at machine-precision tolerance; the exactness of the
    returned potential is then certified by the residual oracle downstream.
    """
    e = sp.expand(expr.rewrite(sp.exp))
    t_syms = sorted(e.free_symbols - set(xs), key=str)
    scale = max(_numeric_scale(e, (*xs, *t_syms)), 1e-300)
    zero_mode = sp.S.Zero
    g = sp.S.Zero
    for term in e.as_ordered_terms():
        merged = sp.powsimp(term, deep=True, force=True)
        if merged == 0:
            continue
        indep, dep = merged.as_independent(*xs)
        if dep == 1:
            zero_mode += merged
            continue
        if not isinstance(dep, sp.exp):
            dep = sp.powsimp(dep, deep=True, force=True)
        if not isinstance(dep, sp.exp):
            raise ValueError(f"cannot reduce term to a single mode: {term}")
        arg = dep.args[0]
        k2 = sp.S.Zero
        for x in xs:
            ki = sp.diff(arg, x)
            if ki.has(x):
                raise ValueError(f"mode exponent is not linear in {x}: {arg}")
            k2 += -(ki**2)
        k2 = sp.nsimplify(sp.expand(k2))
        if k2 == 0:
            zero_mode += merged
            continue
        g += merged / k2
    zero_mode = sp.expand(zero_mode)
    if zero_mode != 0:
        if _numeric_scale(zero_mode, t_syms or (sp.Symbol("_t"),)) > 1e-12 * scale:
            raise ValueError(
                "concentration-equation residual has a nonzero mean; the "
                "manufactured construction is inconsistent"
            )
    g = sp.expand_complex(sp.expand(g))
    real, imag = sp.expand(sp.re(g)), sp.expand(sp.im(g))
    if imag != 0:
        if _numeric_scale(imag, (*xs, *t_syms)) > 1e-12 * scale:
            raise ValueError("Poisson inversion produced a complex potential")
    return real


@dataclass
class ManufacturedCase:
    """Closed-form fields with symbolically induced forcings.

    ``v_expr``/``f_expr``/``g_expr`` are tuples of sympy expressions in
    (x1..xd, t); the ``eval_*`` methods evaluate them on a grid at a given
    time with vectorized numpy callables.
    """

    case_id: str
    d: int
    model: StressModel
    xs: tuple
    t_sym: sp.Symbol
    v_expr: tuple
    c_expr: sp.Expr
    pi_expr: sp.Expr
    f_expr: tuple
    g_expr: tuple
    potential_expr: sp.Expr

    def __post_init__(self):
        args = (*self.xs, self.t_sym)
        self._v_fn = [sp.lambdify(args, e, modules="numpy") for e in self.v_expr]
        self._c_fn = sp.lambdify(args, self.c_expr, modules="numpy")
        self._pi_fn = sp.lambdify(args, self.pi_expr, modules="numpy")
        self._f_fn = [sp.lambdify(args, e, modules="numpy") for e in self.f_expr]
        self._g_fn = [sp.lambdify(args, e, modules="numpy") for e in self.g_expr]

    def _eval_many(self, fns, grid: Grid, t: float) -> np.ndarray:
        mesh = grid.meshgrid()
        out = np.empty((len(fns),) + grid.phys_shape)
        for i, fn in enumerate(fns):
            vals = fn(*mesh, t)
            out[i] = np.broadcast_to(vals, grid.phys_shape)
        return out

    def eval_velocity(self, grid: Grid, t: float) -> np.ndarray:
        return self._eval_many(self._v_fn, grid, t)

    def eval_concentration(self, grid: Grid, t: float) -> np.ndarray:
        mesh = grid.meshgrid()
        return np.broadcast_to(self._c_fn(*mesh, t), grid.phys_shape).copy()

    def eval_pressure(self, grid: Grid, t: float) -> np.ndarray:
        mesh = grid.meshgrid()
        return np.broadcast_to(self._pi_fn(*mesh, t), grid.phys_shape).copy()

    def eval_momentum_forcing(self, grid: Grid, t: float) -> np.ndarray:
        return self._eval_many(self._f_fn, grid, t)

    def eval_concentration_forcing(self, grid: Grid, t: float) -> np.ndarray:
        return self._eval_many(self._g_fn, grid, t)

    def forcings(self, grid: Grid):
        """(f, g) callables of t for the solver."""
        f = lambda t: PhysicalField(grid, VECTOR, self.eval_momentum_forcing(grid, t))
        g = lambda t: PhysicalField(grid, VECTOR, self.eval_concentration_forcing(grid, t))
        return f, g


def make_manufactured(case_id: str, model: StressModel,
                      amplitude: float = 0.6, conc_amplitude: float = 0.4,
                      conc_mean: float = 1.0, decay_v: float = 1.0,
                      decay_c: float = 0.8, conc_modes: int = 12,
                      conc_mode_decay: float = 0.35,
                      pressure_amplitude: float = 0.25) -> ManufacturedCase:
    """Build one of the shipped manufactured cases.

    The velocity is built from a stream function (2D) or a curl-type mode
    (3D), so div v* = 0 identically; the forcings follow by substitution.
    In 2D the concentration carries a geometric ladder of ``conc_modes``
    diagonal modes so that every grid doubling in the convergence study
    resolves real spatial content rather than bottoming out on the
    time-step error floor.
    """
    if case_id not in CASE_IDS:
        raise ValueError(f"unknown manufactured case {case_id!r}")
    d = 3 if case_id == "decaying_mode_3d" else 2
    xs, t = _symbols(d)
    two_pi = 2 * sp.pi
    A = sp.Float(amplitude)
    B = sp.Float(conc_amplitude)
    P = sp.Float(pressure_amplitude)

    if case_id == "decaying_mode_2d":
        x, y = xs
        envelope = sp.exp(-sp.Float(decay_v) * t)
        cenv = sp.exp(-sp.Float(decay_c) * t)
        v = (
            A * envelope * sp.sin(two_pi * x) * sp.cos(two_pi * y),
            -A * envelope * sp.cos(two_pi * x) * sp.sin(two_pi * y),
        )
        tail = sum(
            sp.Float(conc_mode_decay) ** (k - 1)
            * sp.cos(k * two_pi * x) * sp.cos(k * two_pi * y)
            for k in range(1, max(conc_modes, 1) + 1)
        )
        c = conc_mean + B * cenv * tail
        pi = P * envelope**2 * (sp.cos(2 * two_pi * x) + sp.cos(2 * two_pi * y))
    elif case_id == "steady_shear_2d":
        x, y = xs
        v = (A * sp.sin(two_pi * y), sp.S.Zero)
        c = conc_mean + B * sp.cos(two_pi * x)
        pi = P * sp.sin(two_pi * x) * sp.sin(two_pi * y)
    else:
        x, y, z = xs
        envelope = sp.exp(-sp.Float(decay_v) * t)
        cenv = sp.exp(-sp.Float(decay_c) * t)
        v = (
            A * envelope * sp.sin(two_pi * x) * sp.cos(two_pi * y) * sp.cos(two_pi * z),
            -A * envelope * sp.cos(two_pi * x) * sp.sin(two_pi * y) * sp.cos(two_pi * z),
            sp.S.Zero,
        )
        c = conc_mean + B * cenv * sp.cos(two_pi * x) * sp.cos(two_pi * y) * sp.cos(two_pi * z)
        pi = P * envelope**2 * (sp.cos(2 * two_pi * x) + sp.cos(2 * two_pi * y))

    div_v = sum(sp.diff(v[i], xs[i]) for i in range(d))
    if sp.simplify(div_v) != 0:
        raise ValueError("manufactured velocity is not divergence-free")

    S = _stress_expr(model, c, v, xs)
    f = []
    for i in range(d):
        expr = sp.diff(v[i], t)
        for j in range(d):
            expr += sp.diff(v[i] * v[j], xs[j])
            expr -= sp.diff(S[i][j], xs[j])
        expr += sp.diff(pi, xs[i])
        f.append(expr)

    conc_residual = sp.diff(c, t) - sum(sp.diff(c, x, 2) for x in xs)
    for j in range(d):
        conc_residual += sp.diff(c * v[j], xs[j])
    potential = _poisson_invert_trig(sp.expand(conc_residual), xs)
    g = tuple(sp.diff(potential, x) for x in xs)

    return ManufacturedCase(
        case_id=case_id, d=d, model=model, xs=xs, t_sym=t,
        v_expr=tuple(v), c_expr=c, pi_expr=pi, f_expr=tuple(f), g_expr=g,
        potential_expr=potential,
    )


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceTable:
    dts: list
    temporal_errors_v: list
    temporal_errors_c: list
    temporal_slope_v: float
    temporal_slope_c: float
    ns: list
    spatial_errors_v: list
    spatial_errors_c: list
    spatial_ratios_v: list
    spatial_ratios_c: list


def manufactured_errors(case: ManufacturedCase, config: SolverConfig,
                        t_end: float):
    grid = config.grid
    f, g = case.forcings(grid)
    v0 = case.eval_velocity(grid, 0.0)
    c0 = case.eval_concentration(grid, 0.0)
    result = run(config, v0, c0, f=f, g=g)
    if result.termination != "completed":
        raise RuntimeError(f"manufactured run aborted: {result.message}")
    state = result.final_state
    v_exact = case.eval_velocity(grid, state.t)
    c_exact = case.eval_concentration(grid, state.t)
    dv = to_physical(state.v).values - v_exact
    dc = to_physical(state.c).values - c_exact
    err_v = l2_norm(PhysicalField(grid, VECTOR, dv))
    err_c = l2_norm(PhysicalField(grid, "scalar", dc))
    return err_v, err_c


def _fit_slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def convergence_study(case: ManufacturedCase, n_ladder, dt_ladder,
                      t_end_temporal: float, n_for_dt: int,
                      dt_for_n: float, t_end_spatial: float,
                      **config_overrides) -> ConvergenceTable:
    """Final-time L2 errors against the exact fields.

    Temporal ladder at fixed n; spatial ladder at a tiny fixed dt, where the
    smooth-case error should beat second order (ratio >= 4 per doubling).
    """
    if len(n_ladder) < 3 or len(dt_ladder) < 3:
        raise ValueError("ladders need at least 3 points")
    model = case.model
    base = dict(
        d=case.d, nu0=model.nu0, index=model.index,
        cadence=10**9,
    )
    base.update(config_overrides)

    dts, tev, tec = [], [], []
    for dt in dt_ladder:
        cfg = SolverConfig(n=n_for_dt, dt=dt, t_end=t_end_temporal, **base)
        ev, ec = manufactured_errors(case, cfg, t_end_temporal)
        dts.append(dt)
        tev.append(ev)
        tec.append(ec)

    ns, sev, sec = [], [], []
    for n in n_ladder:
        cfg = SolverConfig(n=n, dt=dt_for_n, t_end=t_end_spatial, **base)
        ev, ec = manufactured_errors(case, cfg, t_end_spatial)
        ns.append(n)
        sev.append(ev)
        sec.append(ec)

    ratios_v = [sev[i] / sev[i + 1] for i in range(len(sev) - 1)]
    ratios_c = [sec[i] / sec[i + 1] for i in range(len(sec) - 1)]
    return ConvergenceTable(
        dts=dts, temporal_errors_v=tev, temporal_errors_c=tec,
        temporal_slope_v=_fit_slope(dts, tev), temporal_slope_c=_fit_slope(dts, tec),
        ns=ns, spatial_errors_v=sev, spatial_errors_c=sec,
        spatial_ratios_v=ratios_v, spatial_ratios_c=ratios_c,
    )


@dataclass
class GradCCertificate:
    times: np.ndarray
    y: np.ndarray
    constant: float
    margin: float
    passed: bool


def gradc_gronwall_report(config: SolverConfig, v0, c0, f=None, g=None,
                          cadence: Optional[int] = None) -> GradCCertificate:
    """Run the configuration and check the high-order concentration-gradient
    growth certificate: y(t) <= exp(C int phi_raw)(y(0) + C int psi_raw) with
    C calibrated on the first sample and then frozen."""
    from .solver import ingest_forcing

    cfg_cadence = cadence if cadence is not None else config.cadence
    state = prepare_initial_state(config, v0, c0)
    q = config.q_monitor
    p_minus = config.index.p_minus

    times, ys, phis, psis = [], [], [], []

    def sample(s):
        g_hat = ingest_forcing(config, g, s.t, "vector", zero_mean=False)
        yy, ph, ps = gradc_certificate_sample(s.v, s.c, q, p_minus, g_hat)
        times.append(s.t)
        ys.append(yy)
        phis.append(ph)
        psis.append(ps)

    sample(state)
    n_steps = int(round(config.t_end / config.dt))
    for m in range(1, n_steps + 1):
        state, _ = step(state, config, f=f, g=g)
        if m % cfg_cadence == 0 or m == n_steps:
            sample(state)

    times = np.asarray(times)
    ys = np.asarray(ys)
    phis = np.asarray(phis)
    psis = np.asarray(psis)
    C = calibrate_gronwall_constant(times, ys, phis, psis)
    if math.isinf(C):
        return GradCCertificate(times, ys, C, -math.inf, False)
    passed, margin = gronwall_certificate(times, ys, C * phis, C * psis)
    return GradCCertificate(times, ys, C, margin, passed)


# ---------------------------------------------------------------------------
# twin-run uniqueness experiment
# ---------------------------------------------------------------------------

def perturbation_fields(grid: Grid):
    """Fixed smooth unit-norm perturbation directions (reproducible)."""
    mesh = grid.meshgrid()
    two_pi = 2.0 * np.pi
    if grid.d == 2:
        x, y = mesh
        dv = np.stack([
            np.sin(two_pi * x) * np.cos(two_pi * y),
            -np.cos(two_pi * x) * np.sin(two_pi * y),
        ])
        dc = np.cos(two_pi * x) * np.cos(two_pi * y)
    else:
        x, y, z = mesh
        dv = np.stack([
            np.sin(two_pi * x) * np.cos(two_pi * y) * np.cos(two_pi * z),
            -np.cos(two_pi * x) * np.sin(two_pi * y) * np.cos(two_pi * z),
            np.zeros_like(x),
        ])
        dc = np.cos(two_pi * x) * np.cos(two_pi * y) * np.cos(two_pi * z)
    dv_field = PhysicalField(grid, VECTOR, dv)
    dc_field = PhysicalField(grid, "scalar", dc)
    dv /= l2_norm(dv_field)
    dc /= l2_norm(dc_field)
    return dv, dc


def _contraction_weight(v2: SpectralField, c1: SpectralField,
                        v1: SpectralField, model: StressModel, d: int) -> float:
    """Raw integrand of the contraction envelope: |v2|_inf^2 + |grad c1|_inf^2
    + |grad v1|_3^2 + F, with F the weighted strain integral from the
    concentration-coupling estimate."""
    from .constitutive import strain_sq

    v2_inf = lp_norm(to_physical(v2), np.inf)
    gradc_inf = lp_norm(to_physical(gradient(c1)), np.inf)
    gradv_3 = lp_norm(to_physical(gradient(v1)), 3.0)
    dphys = to_physical(sym_gradient(v2))
    s = strain_sq(dphys.values)
    p_plus = model.index.p_plus
    p_minus = model.index.p_minus
    alpha = 0.05
    if d == 2:
        delta1 = 0.5
        expo = (2.0 + delta1) * (p_plus / 2.0 - p_minus / 4.0 + alpha)
        F = float(((1.0 + s) ** expo).mean() ** (2.0 / (2.0 + delta1)))
    else:
        expo = 3.0 * (p_plus / 2.0 - p_minus / 4.0 + alpha)
        F = float(((1.0 + s) ** expo).mean() ** (2.0 / 3.0))
    return v2_inf**2 + gradc_inf**2 + gradv_3**2 + F


@dataclass
class TwinRunReport:
    """Difference functionals of two nearby trajectories plus the calibrated
    Gronwall envelope (a self-consistency check, not a proof)."""

    times: np.ndarray
    y: np.ndarray                 # |v1-v2|_2^2 + |grad(c1-c2)|_2^2
    v_diff_sq: np.ndarray
    gradc_diff_sq: np.ndarray
    strain_diff_diss: np.ndarray  # integral |D(v1-v2)|^2
    lap_diff_diss: np.ndarray     # integral |Lap(c1-c2)|^2
    envelope: np.ndarray
    gronwall_constant: float
    margin: float
    passed: bool
    regime: RegimeFlags
    regime_warning: bool


def uniqueness_experiment(config: SolverConfig, v0, c0, f=None, g=None,
                          epsilon: float = 1e-6, cadence: Optional[int] = None,
                          perturb=None) -> TwinRunReport:
    """Integrate two trajectories from initial data epsilon apart (fixed
    smooth perturbation directions) under identical forcings and track the
    uniqueness-proof difference functional with its Gronwall envelope."""
    grid = config.grid
    cadence = cadence if cadence is not None else config.cadence
    if perturb is None:
        perturb = perturbation_fields(grid)
    dv, dc = perturb

    state1 = prepare_initial_state(config, v0, c0)
    v0_arr = np.asarray(v0, dtype=float) if isinstance(v0, np.ndarray) else to_physical(state1.v).values
    c0_arr = np.asarray(c0, dtype=float) if isinstance(c0, np.ndarray) else to_physical(state1.c).values
    state2 = prepare_initial_state(config, v0_arr + epsilon * dv, c0_arr + epsilon * dc)

    n_steps = int(round(config.t_end / config.dt))
    times, ys, vds, gcs, dds, lds, phis = [], [], [], [], [], [], []

    def sample(s1: State, s2: State):
        diff_v = SpectralField(grid, VECTOR, s1.v.coeffs - s2.v.coeffs)
        diff_c = SpectralField(grid, "scalar", s1.c.coeffs - s2.c.coeffs)
        vd = l2_norm(diff_v) ** 2
        gc = l2_norm(gradient(diff_c)) ** 2
        times.append(s1.t)
        ys.append(vd + gc)
        vds.append(vd)
        gcs.append(gc)
        dds.append(l2_norm(sym_gradient(diff_v)) ** 2)
        lds.append(l2_norm(laplacian(diff_c)) ** 2)
        phis.append(_contraction_weight(s2.v, s1.c, s1.v, config.model, grid.d))

    sample(state1, state2)
    for m in range(1, n_steps + 1):
        state1, _ = step(state1, config, f=f, g=g)
        state2, _ = step(state2, config, f=f, g=g)
        if m % cadence == 0 or m == n_steps:
            sample(state1, state2)

    times = np.asarray(times)
    ys = np.asarray(ys)
    phis = np.asarray(phis)
    zeros = np.zeros_like(phis)

    C = calibrate_gronwall_constant(times, ys, phis, zeros)
    if math.isinf(C):
        envelope = np.full_like(ys, np.inf)
        passed, margin = False, -math.inf
    else:
        dt_s = np.diff(times)
        phi_sum = np.concatenate([[0.0], np.cumsum(C * phis[:-1] * dt_s)])
        envelope = np.exp(phi_sum) * ys[0]
        passed, margin = gronwall_certificate(times, ys, C * phis, zeros)

    return TwinRunReport(
        times=times, y=ys,
        v_diff_sq=np.asarray(vds), gradc_diff_sq=np.asarray(gcs),
        strain_diff_diss=np.asarray(dds), lap_diff_diss=np.asarray(lds),
        envelope=envelope, gronwall_constant=C, margin=margin, passed=passed,
        regime=config.regime,
        regime_warning=not config.regime.unique_regime,
    )


# ---------------------------------------------------------------------------
# shipped demo configurations
# ---------------------------------------------------------------------------

def synovial_index() -> PowerLawIndex:
    """Shear-thinning strengthens with hyaluronan concentration: p falls
    from 2.9 toward 2 as c rises through the blob values."""
    return PowerLawIndex(
        p_minus=2.0, p_plus=2.9, form="tanh_profile", center=1.15, width=0.2
    )


def synovial_demo_setup(n: int = 64, dt: float = 5e-4, t_end: float = 1.0,
                        **overrides):
    """(config, v0, c0, f, g) for the flagship 2D demonstration: a localized
    concentration blob stirred by steady single-mode shear forcing."""
    params = dict(
        d=2, n=n, dt=dt, t_end=t_end, nu0=0.1, index=synovial_index(),
        cadence=20,
    )
    params.update(overrides)
    config = SolverConfig(**params)
    grid = config.grid
    x, y = grid.meshgrid()
    two_pi = 2.0 * np.pi
    blob = np.exp(3.0 * (np.cos(two_pi * (x - 0.5)) + np.cos(two_pi * (y - 0.5)) - 2.0))
    c0 = 1.0 + 0.5 * blob
    v0 = np.zeros((2,) + grid.phys_shape)
    amp = 0.4
    f_arr = amp * np.stack([np.sin(two_pi * y), np.zeros_like(y)])
    f = PhysicalField(grid, VECTOR, f_arr)
    return config, v0, c0, f, None


def synovial_demo(n: int = 64, dt: float = 5e-4, t_end: float = 1.0,
                  **overrides):
    """Run the shipped demo; returns (config, RunResult)."""
    config, v0, c0, f, g = synovial_demo_setup(n=n, dt=dt, t_end=t_end, **overrides)
    result = run(config, v0, c0, f=f, g=g)
    return config, result


def taylor_green_setup(n: int = 64, dt: float = 1e-3, t_end: float = 0.5,
                       nu0: float = 0.01, amplitude: float = 1.0,
                       perturbation: float = 1e-3, **overrides):
    """Newtonian (p = 2) decaying-vortex initial data with a small
    higher-mode perturbation so convection is not identically zero."""
    params = dict(
        d=2, n=n, dt=dt, t_end=t_end, nu0=nu0,
        index=PowerLawIndex(p_minus=2.0, p_plus=2.0, form="constant"),
        cadence=50,
    )
    params.update(overrides)
    config = SolverConfig(**params)
    grid = config.grid
    x, y = grid.meshgrid()
    two_pi = 2.0 * np.pi
    v0 = amplitude * np.stack([
        np.sin(two_pi * x) * np.cos(two_pi * y),
        -np.cos(two_pi * x) * np.sin(two_pi * y),
    ])
    v0 += perturbation * np.stack([
        np.sin(2 * two_pi * y),
        np.sin(2 * two_pi * x),
    ])
    c0 = np.ones(grid.phys_shape)
    return config, v0, c0


def linear_twin_setup(n: int = 32, dt: float = 1e-3, t_end: float = 0.2,
                      nu0: float = 0.05, **overrides):
    """Fully linear diagnostic configuration: Newtonian stress and all
    convection disabled, so twin differences decay mode by mode."""
    params = dict(
        d=2, n=n, dt=dt, t_end=t_end, nu0=nu0,
        index=PowerLawIndex(p_minus=2.0, p_plus=2.0, form="constant"),
        convection="none", cadence=20,
    )
    params.update(overrides)
    config = SolverConfig(**params)
    grid = config.grid
    x, y = grid.meshgrid()
    two_pi = 2.0 * np.pi
    v0 = 0.3 * np.stack([
        np.sin(two_pi * x) * np.cos(two_pi * y),
        -np.cos(two_pi * x) * np.sin(two_pi * y),
    ])
    c0 = 1.0 + 0.3 * np.cos(two_pi * x)
    return config, v0, c0
