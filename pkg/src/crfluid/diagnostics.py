"""Per-sample functionals of the flow/concentration state.

Every quantity the strong-solution estimates bound is computed here from one
(or a window of two) states: the kinetic energy and viscous dissipation, the
variable-exponent modulars of grad v and S, the high-order concentration
gradient norm and its dissipation, the weighted strain amplitude
eta = (1 + |Dv|^2)^(p(c)/4) with its L2/L3/L4 and gradient norms, the
weighted second-derivative integral, time-derivative norms, the stress
potential, and discrete Gronwall-style certificates.

Nonlinear powered fields (|grad c|^(q/2), eta) are non-polynomial, so they
are formed pointwise without dealiasing; the resulting quadrature error is
controlled in tests against refined-grid oracles rather than eliminated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constitutive import StressModel, strain_sq
from .spectral import (
    PhysicalField,
    SpectralField,
    divergence,
    gradient,
    inner,
    l2_norm,
    laplacian,
    lp_norm,
    pointwise_magnitude,
    sym_gradient,
    to_physical,
    to_spectral,
)

COLUMNS = (
    "t", "kinetic", "visc_diss", "modular_gradv", "stress_dual",
    "conc_l2", "conc_diss", "gradc_q", "gradc_q_diss",
    "eta_l2", "eta_high", "grad_eta_l2",
    "w22_weighted", "laplacian_v_l2",
    "dt_v_l2", "dt_c_l2", "dt_c_ldelta",
    "potential", "picard_iters", "energy_residual",
)


@dataclass
class DiagnosticsRecord:
    """One time sample of every monitored functional (CSV row order)."""

    t: float
    kinetic: float
    visc_diss: float
    modular_gradv: float
    stress_dual: float
    conc_l2: float
    conc_diss: float
    gradc_q: float
    gradc_q_diss: float
    eta_l2: float
    eta_high: float
    grad_eta_l2: float
    w22_weighted: float
    laplacian_v_l2: float
    dt_v_l2: float
    dt_c_l2: float
    dt_c_ldelta: float
    potential: float
    picard_iters: float
    energy_residual: float

    def as_row(self) -> tuple:
        return tuple(getattr(self, name) for name in COLUMNS)

    @property
    def finite(self) -> bool:
        return all(math.isfinite(x) for x in self.as_row())


# ---------------------------------------------------------------------------
# variable-exponent quantities
# ---------------------------------------------------------------------------

def modular(f: PhysicalField, exponent) -> float:
    """The modular integral |u(x)|^p(x) dx by collocation quadrature."""
    p = exponent.values if isinstance(exponent, PhysicalField) else np.asarray(exponent)
    if not np.all(np.isfinite(p)) or np.any(p <= 1.0):
        raise ValueError("exponent field must be finite and > 1")
    mag = pointwise_magnitude(f)
    return float((mag**p).mean())


def luxembourg_norm(f: PhysicalField, exponent, tol: float = 1e-8) -> float:
    """Luxembourg norm: the smallest lam with modular(u/lam) <= 1 (bisection)."""
    p = exponent.values if isinstance(exponent, PhysicalField) else np.asarray(exponent)
    if not np.all(np.isfinite(p)) or np.any(p <= 1.0):
        raise ValueError("exponent field must be finite and > 1")
    mag = pointwise_magnitude(f)
    if not mag.any():
        return 0.0

    def rho(lam):
        return float(((mag / lam) ** p).mean())

    hi = 1.0
    while rho(hi) > 1.0:
        hi *= 2.0
        if hi > 1e300:
            raise OverflowError("Luxembourg bracketing failed")
    lo = hi / 2.0 if hi > 1.0 else 1.0
    while lo > 1e-300 and rho(lo) < 1.0:
        lo /= 2.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if rho(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# energy budgets
# ---------------------------------------------------------------------------

def energy_budget_velocity(v_before: SpectralField, v_after: SpectralField,
                           c_after: SpectralField, model: StressModel,
                           f: Optional[SpectralField], dt: float) -> float:
    """Signed residual of the kinetic-energy identity over one step:

        (|v+|^2 - |v|^2) / (2 dt) + S(c+, Dv+):Dv+ - f . v+  (integrals).
    """
    kin_rate = 0.5 * (l2_norm(v_after) ** 2 - l2_norm(v_before) ** 2) / dt
    diss = visc_dissipation(v_after, c_after, model)
    work = 0.0
    if f is not None:
        work = inner(to_physical(f), to_physical(v_after))
    return kin_rate + diss - work


def energy_budget_concentration(c_before: SpectralField, c_after: SpectralField,
                                g: Optional[SpectralField], dt: float) -> float:
    """Signed residual of (|c|^2/2)' + |grad c|^2 = g . grad c over one step."""
    rate = 0.5 * (l2_norm(c_after) ** 2 - l2_norm(c_before) ** 2) / dt
    diss = l2_norm(gradient(c_after)) ** 2
    work = 0.0
    if g is not None:
        work = inner(to_physical(g), to_physical(gradient(c_after)))
    return rate + diss - work


def visc_dissipation(v: SpectralField, c: SpectralField,
                     model: StressModel) -> float:
    """S(c, Dv):Dv integral, computed pointwise (nonnegative by coercivity)."""
    dphys = to_physical(sym_gradient(v))
    s = strain_sq(dphys.values)
    p = model.index(to_physical(c).values)
    return float((2.0 * model.nu0 * (1.0 + s) ** (0.5 * (p - 2.0)) * s).mean())


# ---------------------------------------------------------------------------
# higher-order monitors
# ---------------------------------------------------------------------------

def gradc_q_monitor(c: SpectralField, q: float):
    """(|grad c|_q, integral |grad(|grad c|^(q/2))|^2).

    The power is taken pointwise; its gradient is spectral on the powered
    field, accepting the aliasing of the non-polynomial power.
    """
    grad_c = to_physical(gradient(c))
    mag = pointwise_magnitude(grad_c)
    norm = float((mag**q).mean() ** (1.0 / q))
    powered = PhysicalField(c.grid, "scalar", mag ** (q / 2.0))
    diss = l2_norm(gradient(to_spectral(powered))) ** 2
    return norm, diss


def eta_field(v: SpectralField, c: SpectralField, model: StressModel) -> PhysicalField:
    """Weighted strain amplitude eta = (1 + |Dv|^2)^(p(c)/4)."""
    dphys = to_physical(sym_gradient(v))
    s = strain_sq(dphys.values)
    p = model.index(to_physical(c).values)
    return PhysicalField(v.grid, "scalar", (1.0 + s) ** (0.25 * p))


def eta_norms(v: SpectralField, c: SpectralField, model: StressModel):
    """(|eta|_2, |eta|_4 in 2D / |eta|_3 in 3D, |grad eta|_2)."""
    eta = eta_field(v, c, model)
    high_p = 4.0 if v.grid.d == 2 else 3.0
    grad_eta = l2_norm(gradient(to_spectral(eta)))
    return lp_norm(eta, 2.0), lp_norm(eta, high_p), grad_eta


def gn_interpolation_ratio(eta_l2: float, eta_high: float,
                           grad_eta_l2: float) -> float:
    """Measured constant in |eta|_high <= C (|eta|_2^(1/2) |grad eta|_2^(1/2)
    + |eta|_2); recorded, never asserted against a theoretical value."""
    denom = math.sqrt(eta_l2) * math.sqrt(grad_eta_l2) + eta_l2
    if denom == 0.0:
        return 0.0
    return eta_high / denom


def w22_monitor(v: SpectralField, c: SpectralField, model: StressModel):
    """(weighted second-derivative integral, |Lap v|_2^2, |grad v|_2^2).

    Also enforces the pointwise-derived dominations |Lap v|^2 <= 9 |grad Dv|^2
    (always) and |grad Dv|^2 <= weighted integral (when p_minus >= 2); a
    violation beyond roundoff indicates a broken derivative chain.
    """
    grad_dv = to_physical(gradient(sym_gradient(v)))
    comp_axes = tuple(range(grad_dv.values.ndim - v.grid.d))
    grad_dv_sq = (grad_dv.values**2).sum(axis=comp_axes)
    dphys = to_physical(sym_gradient(v))
    s = strain_sq(dphys.values)
    p = model.index(to_physical(c).values)
    weighted = float(((1.0 + s) ** (0.5 * (p - 2.0)) * grad_dv_sq).mean())
    plain = float(grad_dv_sq.mean())
    lap_sq = l2_norm(laplacian(v)) ** 2
    gradv_sq = l2_norm(gradient(v)) ** 2

    slack = 1e-9 * max(plain, lap_sq, 1e-300)
    if lap_sq > 9.0 * plain + slack:
        raise ValueError("second-derivative domination |Lap v|^2 <= 9|grad Dv|^2 failed")
    if model.index.p_minus >= 2.0 and plain > weighted + slack:
        raise ValueError("weighted integral fails to dominate |grad Dv|^2 at p- >= 2")
    return weighted, lap_sq, gradv_sq


def stress_potential(v: SpectralField, c: SpectralField,
                     model: StressModel) -> float:
    """Integral of (1 + |Dv|^2)^(p(c)/2) / p(c)."""
    dphys = to_physical(sym_gradient(v))
    s = strain_sq(dphys.values)
    p = model.index(to_physical(c).values)
    return float(((1.0 + s) ** (0.5 * p) / p).mean())


def lap_ldelta_norm(c: SpectralField, delta: float) -> float:
    return lp_norm(to_physical(laplacian(c)), delta)


def maximal_regularity_ratio(v: SpectralField, c: SpectralField,
                             c_prev: SpectralField, window: float,
                             delta: float, g: Optional[SpectralField],
                             c0_lap_ldelta: float) -> float:
    """Monitored constant (|dc/dt|_delta + |Lap c|_delta) /
    (|v . grad c + div g|_delta + |Lap c0|_delta), finite-difference in time."""
    if window <= 0.0:
        return 0.0
    grid = c.grid
    dtc = PhysicalField(
        grid, "scalar",
        (to_physical(c).values - to_physical(c_prev).values) / window,
    )
    numer = lp_norm(dtc, delta) + lap_ldelta_norm(c, delta)
    vals = to_physical(v).values
    gradc = to_physical(gradient(c)).values
    h = np.einsum("i...,i...->...", vals, gradc)
    if g is not None:
        h = h + to_physical(divergence(g)).values
    denom = lp_norm(PhysicalField(grid, "scalar", h), delta) + c0_lap_ldelta
    if denom == 0.0:
        return 0.0 if numer == 0.0 else math.inf
    return numer / denom


@dataclass
class TimeDerivatives:
    dt_v_l2: float
    dt_c_l2: float
    dt_c_ldelta: float
    potential: float


def time_derivative_monitor(v_prev: SpectralField, c_prev: SpectralField,
                            v: SpectralField, c: SpectralField,
                            window: float, model: StressModel,
                            delta: float) -> TimeDerivatives:
    """Backward-difference time derivatives over one output window."""
    if window <= 0.0:
        raise ValueError("window must be positive")
    grid = v.grid
    dv = PhysicalField(
        grid, "vector", (to_physical(v).values - to_physical(v_prev).values) / window
    )
    dc = PhysicalField(
        grid, "scalar", (to_physical(c).values - to_physical(c_prev).values) / window
    )
    return TimeDerivatives(
        dt_v_l2=lp_norm(dv, 2.0),
        dt_c_l2=lp_norm(dc, 2.0),
        dt_c_ldelta=lp_norm(dc, delta),
        potential=stress_potential(v, c, model),
    )


# ---------------------------------------------------------------------------
# Gronwall certificates
# ---------------------------------------------------------------------------

def gronwall_certificate(times, y, phi, psi):
    """Discrete check of y(t_m) <= exp(sum phi dt) (y(0) + sum psi dt).

    phi and psi are sampled on the same time axis (left endpoints are used
    for the partial sums).  Returns (passed, margin) where margin is the
    minimum over samples of the relative gap (envelope - y)/envelope;
    negative margin means the certificate fails.
    """
    times = np.asarray(times, dtype=float)
    y = np.asarray(y, dtype=float)
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if not (times.shape == y.shape == phi.shape == psi.shape):
        raise ValueError("misaligned certificate series")
    if np.any(phi < 0.0) or np.any(psi < 0.0):
        raise ValueError("phi and psi must be nonnegative")
    dt = np.diff(times)
    phi_sum = np.concatenate([[0.0], np.cumsum(phi[:-1] * dt)])
    psi_sum = np.concatenate([[0.0], np.cumsum(psi[:-1] * dt)])
    envelope = np.exp(phi_sum) * (y[0] + psi_sum)
    gap = envelope - y
    scale = np.maximum(envelope, 1e-300)
    margin = float((gap / scale).min())
    return margin >= -1e-12, margin


def gradc_certificate_sample(v: SpectralField, c: SpectralField, q: float,
                             p_minus: float, g: Optional[SpectralField] = None):
    """One sample (y, phi_raw, psi_raw) of the |grad c|_q growth certificate.

    y = |grad c|_q^q, phi_raw = 1 + |grad v|_{p-}^(1/theta) with the
    interpolation exponent theta = (d - d p' + 2 p')/(2 p') for p' the
    conjugate of p-, and psi_raw = (the W^{1,q} modular of g).  The
    certificate constant multiplies both phi_raw and psi_raw.
    """
    d = v.grid.d
    pprime = p_minus / (p_minus - 1.0)
    theta = (d - d * pprime + 2.0 * pprime) / (2.0 * pprime)
    if theta <= 0.0:
        raise ValueError(f"interpolation exponent collapsed: theta = {theta}")
    gradc = to_physical(gradient(c))
    y = lp_norm(gradc, q) ** q
    phi_raw = 1.0 + lp_norm(to_physical(gradient(v)), p_minus) ** (1.0 / theta)
    psi_raw = 0.0
    if g is not None:
        gphys = to_physical(g)
        gq = pointwise_magnitude(gphys) ** q
        ggrad = pointwise_magnitude(to_physical(gradient(g))) ** q
        psi_raw = float(gq.mean() + ggrad.mean())
    return y, phi_raw, psi_raw


def calibrate_gronwall_constant(times, y, phi_raw, psi_raw) -> float:
    """Smallest C >= 0 making the first nontrivial sample satisfy
    y(t_1) <= exp(C * int phi_raw) (y(0) + C * int psi_raw); the constant is
    then held fixed for the rest of the series (self-consistency check)."""
    times = np.asarray(times, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(times) < 2:
        return 0.0
    a = float(phi_raw[0] * (times[1] - times[0]))
    b = float(psi_raw[0] * (times[1] - times[0]))
    if y[1] <= y[0]:
        return 0.0
    if a == 0.0 and b == 0.0:
        return math.inf

    def ok(cc):
        return y[1] <= math.exp(cc * a) * (y[0] + cc * b)

    hi = 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e30:
            return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# discrete lemma checks
# ---------------------------------------------------------------------------

def second_derivative_multiplier_ratio(u: SpectralField) -> float:
    """max over (j, k) of |d_j d_k u|_2 / |Lap u|_2; the Fourier multiplier
    bound gives exactly 1 at q = 2 on the torus."""
    g = u.grid
    lap = l2_norm(laplacian(u))
    if lap == 0.0:
        return 0.0
    worst = 0.0
    for j in range(g.d):
        for k in range(g.d):
            coeffs = -(g.kd[j] * g.kd[k]) * u.coeffs
            worst = max(worst, l2_norm(SpectralField(g, u.rank, coeffs)) / lap)
    return worst


# ---------------------------------------------------------------------------
# record assembly
# ---------------------------------------------------------------------------

def compute_record(t: float, v: SpectralField, c: SpectralField,
                   model: StressModel, q: float, delta: float,
                   prev=None, picard_iters: int = 0,
                   energy_residual: float = 0.0) -> DiagnosticsRecord:
    """Assemble one diagnostics row.  ``prev`` is (v_prev, c_prev, window)
    for the backward-difference entries; omitted at t = 0."""
    grid = v.grid
    cphys = to_physical(c)
    p = model.index(cphys.values)
    dphys = to_physical(sym_gradient(v))
    s = strain_sq(dphys.values)

    kinetic = 0.5 * l2_norm(v) ** 2
    visc = float((2.0 * model.nu0 * (1.0 + s) ** (0.5 * (p - 2.0)) * s).mean())

    gradv = to_physical(gradient(v))
    gradv_mag = pointwise_magnitude(gradv)
    modular_gradv = float((gradv_mag**p).mean())

    stress_mag = 2.0 * model.nu0 * (1.0 + s) ** (0.5 * (p - 2.0)) * np.sqrt(s)
    dual_p = p / (p - 1.0)
    stress_dual = float((stress_mag**dual_p).mean())

    conc_l2 = l2_norm(c) ** 2
    conc_diss = l2_norm(gradient(c)) ** 2
    gradc_q, gradc_q_diss = gradc_q_monitor(c, q)
    eta_l2, eta_high, grad_eta_l2 = eta_norms(v, c, model)
    w22_weighted, lap_sq, _ = w22_monitor(v, c, model)

    if prev is not None:
        v_prev, c_prev, window = prev
        deriv = time_derivative_monitor(v_prev, c_prev, v, c, window, model, delta)
        dt_v_l2, dt_c_l2 = deriv.dt_v_l2, deriv.dt_c_l2
        dt_c_ldelta, potential = deriv.dt_c_ldelta, deriv.potential
    else:
        dt_v_l2 = dt_c_l2 = dt_c_ldelta = 0.0
        potential = stress_potential(v, c, model)

    return DiagnosticsRecord(
        t=t,
        kinetic=kinetic,
        visc_diss=visc,
        modular_gradv=modular_gradv,
        stress_dual=stress_dual,
        conc_l2=conc_l2,
        conc_diss=conc_diss,
        gradc_q=gradc_q,
        gradc_q_diss=gradc_q_diss,
        eta_l2=eta_l2,
        eta_high=eta_high,
        grad_eta_l2=grad_eta_l2,
        w22_weighted=w22_weighted,
        laplacian_v_l2=math.sqrt(lap_sq),
        dt_v_l2=dt_v_l2,
        dt_c_l2=dt_c_l2,
        dt_c_ldelta=dt_c_ldelta,
        potential=potential,
        picard_iters=float(picard_iters),
        energy_residual=energy_residual,
    )
