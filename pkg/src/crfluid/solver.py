"""IMEX Fourier-Galerkin time stepping for the coupled flow/concentration system.

One step advances the concentration first (implicit Euler diffusion, explicit
convection and source, both exact per mode), then the velocity with the
stiff linear viscous part nu_split * Lap v treated implicitly and the
remainder div(S(c, Dv) - 2*nu_split*Dv) resolved by Picard iteration inside
the step.  All nonlinear products are formed in physical space and dealiased;
the velocity is kept divergence-free and zero-mean by Leray projection of
every right-hand side.  A run is a single thread of control over an owned
state; independent runs share nothing mutable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import diagnostics
from .constitutive import PowerLawIndex, StressModel, strain_sq, stress
from .spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    TENSOR,
    VECTOR,
    dealias,
    divergence,
    divergence_residual,
    gradient,
    l2_norm,
    leray_project,
    make_grid,
    mean_value,
    remove_mean,
    sym_gradient,
    to_physical,
    to_spectral,
)

CONVECTION_FORMS = ("divergence", "skew", "none")


class BlowUpError(RuntimeError):
    """Raised when the state leaves the finite/bounded envelope."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class PicardDivergenceError(RuntimeError):
    """Raised when the in-step fixed-point iteration grows three times in a row."""

    def __init__(self, message, iterations=0, history=None):
        super().__init__(message)
        self.iterations = iterations
        self.history = list(history or [])


@dataclass(frozen=True)
class RegimeFlags:
    """Strong-solution and uniqueness regime, as functions of (d, p-, p+)."""

    strong_regime: bool
    unique_regime: bool


def compute_regime(d: int, p_minus: float, p_plus: float) -> RegimeFlags:
    """Threshold checks: strong needs p- >= (d+2)/2; uniqueness additionally
    needs p+ < (3/2) p- in 2D and p+ < (7/6) p- in 3D."""
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    if not p_minus > 1.0:
        raise ValueError("p_minus must exceed 1")
    if p_plus < p_minus:
        raise ValueError("p_plus must be >= p_minus")
    strong = p_minus >= (d + 2) / 2.0
    factor = 1.5 if d == 2 else 7.0 / 6.0
    unique = strong and (p_plus < factor * p_minus)
    return RegimeFlags(strong_regime=strong, unique_regime=unique)


@dataclass
class SolverConfig:
    """Complete description of one run.

    ``nu_split`` selects the implicit viscosity: "constant" uses
    ``nu_split_value`` (default nu0); "adaptive" recomputes
    nu0 * (1 + max|Dv|^2)^((p_plus-2)/2) each step, capped at
    ``nu_split_cap`` * nu0, so the explicit stress remainder keeps a
    dissipative-deficit sign that stabilises the Picard iteration.
    """

    d: int
    n: int
    dt: float
    t_end: float
    nu0: float
    index: PowerLawIndex
    picard_tol: float = 1e-10
    picard_max: int = 50
    nu_split: str = "adaptive"
    nu_split_value: Optional[float] = None
    nu_split_cap: float = 1e3
    convection: str = "divergence"
    dealias_rule: str = "two_thirds"
    q_monitor: Optional[float] = None
    delta_monitor: Optional[float] = None
    cadence: int = 10
    blowup_threshold: float = 1e12

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")
        if self.picard_tol <= 0.0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max < 1:
            raise ValueError("picard_max must be >= 1")
        if self.convection not in CONVECTION_FORMS:
            raise ValueError(f"unknown convection form {self.convection!r}")
        if self.nu_split not in ("adaptive", "constant"):
            raise ValueError("nu_split must be 'adaptive' or 'constant'")
        if self.q_monitor is None:
            self.q_monitor = float(2 * self.d + 2)
        if not self.q_monitor > 2 * self.d:
            raise ValueError(
                f"q_monitor must exceed 2d = {2 * self.d}, got {self.q_monitor}"
            )
        if self.delta_monitor is None:
            self.delta_monitor = 4.5 if self.d == 2 else 3.25
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")

    @cached_property
    def grid(self) -> Grid:
        return make_grid(self.d, self.n)

    @cached_property
    def model(self) -> StressModel:
        return StressModel(nu0=self.nu0, index=self.index)

    @property
    def regime(self) -> RegimeFlags:
        return compute_regime(self.d, self.index.p_minus, self.index.p_plus)


@dataclass
class State:
    """Time level of the coupled system: divergence-free zero-mean velocity
    and the concentration (whose mean rides along in the zero mode)."""

    t: float
    v: SpectralField
    c: SpectralField

    @property
    def c_mean(self) -> float:
        return float(mean_value(self.c))


@dataclass
class StepInfo:
    picard_iters: int
    picard_converged: bool
    picard_contraction: float    # worst consecutive-update ratio; < 1 contracts
    div_residual: float
    nu_split_used: float


def _check_finite(coeffs: np.ndarray, what: str, t: float, threshold: float):
    if not np.all(np.isfinite(coeffs)):
        raise BlowUpError(f"non-finite {what} at t = {t:.6g}", t=t)
    peak = np.abs(coeffs).max()
    if peak > threshold:
        raise BlowUpError(
            f"{what} magnitude {peak:.3e} exceeds blow-up threshold at t = {t:.6g}",
            t=t,
        )


def ingest_forcing(config: SolverConfig, value, t: float, rank: str,
                   zero_mean: bool) -> Optional[SpectralField]:
    """Normalise a forcing (None, field, array, or callable of t) to a
    dealiased spectral field; momentum forcing is stripped of its mean."""
    if value is None:
        return None
    if callable(value) and not isinstance(value, (PhysicalField, SpectralField)):
        value = value(t)
    if value is None:
        return None
    if isinstance(value, np.ndarray):
        value = PhysicalField(config.grid, rank, value)
    if isinstance(value, PhysicalField):
        value = to_spectral(value)
    out = dealias(value, config.dealias_rule)
    if zero_mean:
        out = remove_mean(out)
    return out


def step_concentration(state: State, config: SolverConfig,
                       g: Optional[SpectralField] = None) -> SpectralField:
    """Advance c by one implicit-Euler diffusion step with explicit
    divergence-form convection and source:

        (c+ - c)/dt = Lap c+ - div(c v) - div g,

    solved exactly per mode by the symbol (1 + dt |k|^2)^(-1).  The right
    side is a pure divergence, so the mean of c is conserved exactly.
    """
    grid = config.grid
    dt = config.dt
    rhs = state.c.coeffs.copy()
    if config.convection != "none":
        cphys = to_physical(state.c)
        vphys = to_physical(state.v)
        flux = PhysicalField(grid, VECTOR, cphys.values * vphys.values)
        div_cv = dealias(divergence(to_spectral(flux)), config.dealias_rule)
        rhs -= dt * div_cv.coeffs
    if g is not None:
        rhs -= dt * divergence(g).coeffs
    cnew = rhs / (1.0 + dt * grid.k2)
    _check_finite(cnew, "concentration", state.t + dt, config.blowup_threshold)
    return SpectralField(grid, "scalar", cnew)


def _convection_term(state: State, config: SolverConfig) -> Optional[SpectralField]:
    if config.convection == "none":
        return None
    grid = config.grid
    vphys = to_physical(state.v)
    tensor = PhysicalField(
        grid, TENSOR, vphys.values[:, None] * vphys.values[None, :]
    )
    div_form = dealias(divergence(to_spectral(tensor)), config.dealias_rule)
    if config.convection == "divergence":
        return div_form
    gphys = to_physical(gradient(state.v))  # [a, i] = d_a v_i
    adv = np.einsum("j...,ji...->i...", vphys.values, gphys.values)
    adv_hat = dealias(
        to_spectral(PhysicalField(grid, VECTOR, adv)), config.dealias_rule
    )
    half = 0.5 * (div_form.coeffs + adv_hat.coeffs)
    return SpectralField(grid, VECTOR, half, zero_mean=True)


def _nu_split(config: SolverConfig, v: SpectralField) -> float:
    if config.nu_split == "constant":
        return config.nu_split_value if config.nu_split_value is not None else config.nu0
    dmax_sq = float(strain_sq(to_physical(sym_gradient(v)).values).max())
    factor = (1.0 + dmax_sq) ** (0.5 * (config.index.p_plus - 2.0))
    return config.nu0 * min(max(factor, 1.0), config.nu_split_cap)

def step_velocity(state: State, config: SolverConfig, c_new: SpectralField,
                  f: Optional[SpectralField] = None):
    """Advance v by one IMEX step with Picard iteration on the stress.

    Per iterate v*:

        v+ (1 + nu_split dt |k|^2) =
            v - dt P[div(v (x) v)] + dt P[div(S(c+, Dv*) - 2 nu_split Dv*)]
            + dt P[f],

    iterated until the relative L2 update drops below picard_tol or
    picard_max is hit (flagged non-converged).  Three consecutive growing
    updates raise PicardDivergenceError.  Returns (v_new, iters, converged,
    nu_split_used, contraction) where contraction is the worst ratio of
    consecutive update norms (monotonicity of the stress makes it < 1 for
    reasonable steps).
    """
    grid = config.grid
    dt = config.dt
    model = config.model
    nu_s = _nu_split(config, state.v)

    base = state.v.coeffs.copy()
    conv = _convection_term(state, config)
    if conv is not None:
        base -= dt * leray_project(conv).coeffs
    if f is not None:
        base += dt * leray_project(f).coeffs

    symbol = 1.0 + nu_s * dt * grid.k2
    cphys = to_physical(c_new)

    vstar = state.v
    prev_update = math.inf
    growth = 0
    history = []
    contraction = 0.0
    converged = False
    iters = 0
    for m in range(1, config.picard_max + 1):
        dphys = to_physical(sym_gradient(vstar))
        explicit = stress(model, cphys.values, dphys.values) - 2.0 * nu_s * dphys.values
        div_s = dealias(
            divergence(to_spectral(PhysicalField(grid, TENSOR, explicit))),
            config.dealias_rule,
        )
        numer = base + dt * leray_project(div_s).coeffs
        vnew = SpectralField(grid, VECTOR, numer / symbol,
                             zero_mean=True, div_free=True)
        _check_finite(vnew.coeffs, "velocity", state.t + dt, config.blowup_threshold)

        diff = l2_norm(SpectralField(grid, VECTOR, vnew.coeffs - vstar.coeffs))
        scale = max(l2_norm(vnew), 1e-300)
        update = diff / scale
        history.append(update)
        if m > 1 and prev_update > 0.0:
            contraction = max(contraction, update / prev_update)
        iters = m
        vstar = vnew
        if update <= config.picard_tol:
            converged = True
            break
        if update > prev_update:
            growth += 1
            if growth >= 3:
                raise PicardDivergenceError(
                    f"Picard update grew 3 consecutive iterations at t = "
                    f"{state.t + dt:.6g}", iterations=m, history=history,
                )
        else:
            growth = 0
        prev_update = update

    return vstar, iters, converged, nu_s, contraction


def step(state: State, config: SolverConfig, f=None, g=None):
    """One full step: concentration first (with the current velocity), then
    velocity (with the new concentration).  Forcings are evaluated at the
    new time level.  Returns (new_state, StepInfo)."""
    if not (np.all(np.isfinite(state.v.coeffs)) and np.all(np.isfinite(state.c.coeffs))):
        raise BlowUpError(f"non-finite state at t = {state.t:.6g}", t=state.t)
    t_new = state.t + config.dt
    g_hat = ingest_forcing(config, g, t_new, VECTOR, zero_mean=False)
    f_hat = ingest_forcing(config, f, t_new, VECTOR, zero_mean=True)
    c_new = step_concentration(state, config, g_hat)
    v_new, iters, converged, nu_s, contraction = step_velocity(
        state, config, c_new, f_hat
    )
    new_state = State(t=t_new, v=v_new, c=c_new)
    info = StepInfo(
        picard_iters=iters,
        picard_converged=converged,
        picard_contraction=contraction,
        div_residual=divergence_residual(v_new),
        nu_split_used=nu_s,
    )
    return new_state, info


def prepare_initial_state(config: SolverConfig, v0, c0) -> State:
    """Spectralise, dealias and project the initial data.

    A v0 that is not already divergence-free gets Leray-projected, with a
    warning because the data changes.
    """
    grid = config.grid
    if isinstance(v0, np.ndarray):
        v0 = PhysicalField(grid, VECTOR, v0)
    if isinstance(v0, PhysicalField):
        v0 = to_spectral(v0)
    if isinstance(c0, np.ndarray):
        c0 = PhysicalField(grid, "scalar", c0)
    if isinstance(c0, PhysicalField):
        c0 = to_spectral(c0)
    if not (np.all(np.isfinite(v0.coeffs)) and np.all(np.isfinite(c0.coeffs))):
        raise ValueError("initial data must be finite")
    v0 = remove_mean(dealias(v0, config.dealias_rule))
    residual = divergence_residual(v0)
    if residual > 1e-12:
        warnings.warn(
            f"initial velocity has divergence residual {residual:.2e}; "
            "projecting onto divergence-free fields",
            stacklevel=2,
        )
    v0 = leray_project(v0)
    c0 = dealias(c0, config.dealias_rule)
    return State(t=0.0, v=v0, c=c0)


@dataclass
class RunResult:
    """Trajectory handle: diagnostics series plus the terminal state."""

    records: list
    final_state: Optional[State]
    termination: str                 # completed | blowup | picard_failure
    message: str
    max_div_residual: float
    mean_drift: float
    steps_taken: int
    picard_max_iters: int
    mr_ratios: list


def run(config: SolverConfig, v0, c0, f=None, g=None,
        on_record: Optional[Callable] = None) -> RunResult:
    """March to t_end, emitting one DiagnosticsRecord every ``cadence`` steps
    (plus t = 0 and the final time).  Aborts cleanly on blow-up or Picard
    divergence with the last valid state preserved in the result."""
    state = prepare_initial_state(config, v0, c0)
    model = config.model
    q = config.q_monitor
    delta = config.delta_monitor

    mean0 = state.c_mean
    c0_lap = diagnostics.lap_ldelta_norm(state.c, delta)

    records = [
        diagnostics.compute_record(
            state.t, state.v, state.c, model, q, delta
        )
    ]
    if on_record is not None:
        on_record(state, records[-1])

    n_steps = int(round(config.t_end / config.dt))
    max_div = 0.0
    max_drift = 0.0
    picard_peak = 0
    steps_taken = 0
    mr_ratios = []
    last_record_state = state
    termination = "completed"
    message = "reached t_end"

    for m in range(1, n_steps + 1):
        try:
            new_state, info = step(state, config, f=f, g=g)
        except BlowUpError as err:
            termination = "blowup"
            message = str(err)
            break
        except PicardDivergenceError as err:
            termination = "picard_failure"
            message = str(err)
            break

        steps_taken = m
        max_div = max(max_div, info.div_residual)
        max_drift = max(max_drift, abs(new_state.c_mean - mean0))
        picard_peak = max(picard_peak, info.picard_iters)

        if m % config.cadence == 0 or m == n_steps:
            g_hat = ingest_forcing(config, g, new_state.t, VECTOR, zero_mean=False)
            f_hat = ingest_forcing(config, f, new_state.t, VECTOR, zero_mean=True)
            residual = diagnostics.energy_budget_velocity(
                state.v, new_state.v, new_state.c, model, f_hat, config.dt
            )
            window = new_state.t - last_record_state.t
            rec = diagnostics.compute_record(
                new_state.t, new_state.v, new_state.c, model, q, delta,
                prev=(last_record_state.v, last_record_state.c, window),
                picard_iters=info.picard_iters,
                energy_residual=residual,
            )
            records.append(rec)
            mr_ratios.append(
                diagnostics.maximal_regularity_ratio(
                    new_state.v, new_state.c, last_record_state.c, window,
                    delta, g_hat, c0_lap,
                )
            )
            last_record_state = new_state
            if on_record is not None:
                on_record(new_state, rec)
        state = new_state

    return RunResult(
        records=records,
        final_state=state,
        termination=termination,
        message=message,
        max_div_residual=max_div,
        mean_drift=max_drift,
        steps_taken=steps_taken,
        picard_max_iters=picard_peak,
        mr_ratios=mr_ratios,
    )


def recover_pressure(state: State, config: SolverConfig,
                     f: Optional[SpectralField] = None) -> SpectralField:
    """Spectral pressure: solve -Lap pi = div(div(v (x) v) - div S - f) per
    mode (k != 0) with mean zero, so that the momentum residual after adding
    grad pi has no irrotational part."""
    grid = config.grid
    rhs = np.zeros(grid.comp_shape(VECTOR) + grid.spec_shape, dtype=complex)

    vphys = to_physical(state.v)
    tensor = PhysicalField(grid, TENSOR, vphys.values[:, None] * vphys.values[None, :])
    rhs += dealias(divergence(to_spectral(tensor)), config.dealias_rule).coeffs

    cphys = to_physical(state.c)
    dphys = to_physical(sym_gradient(state.v))
    s_vals = stress(config.model, cphys.values, dphys.values)
    rhs -= dealias(
        divergence(to_spectral(PhysicalField(grid, TENSOR, s_vals))),
        config.dealias_rule,
    ).coeffs
    if f is not None:
        rhs -= f.coeffs

    div_rhs = np.zeros(grid.spec_shape, dtype=complex)
    for i in range(grid.d):
        div_rhs += 1j * grid.kd[i] * rhs[i]
    inv = np.where(grid.kd2 > 0.0, 1.0 / np.where(grid.kd2 > 0.0, grid.kd2, 1.0), 0.0)
    pi = div_rhs * inv
    return SpectralField(grid, "scalar", pi, zero_mean=True)
