"""Concentration-dependent power-law stress and its structural properties.

The stress is S(c, D) = 2*nu0*(1 + |D|^2)^((p(c)-2)/2) * D where p is a
Lipschitz exponent profile confined to [p_minus, p_plus] with p_minus > 1,
and |D|^2 is the full Frobenius square of the symmetric strain-rate tensor.
The module evaluates S, its exact Jacobians with respect to D and c, and
verifies by randomized search the quadratic-form lower bound, operator-norm
upper bound, concentration-derivative bound, and the monotonicity inequality
that the well-posedness theory rests on.  The extremal constants are
measured and reported, never asserted against externally given values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import PhysicalField, TENSOR

FORMS = ("constant", "affine_clamped", "tanh_profile")


@dataclass(frozen=True)
class PowerLawIndex:
    """Lipschitz exponent profile p(c) with 1 < p_minus <= p <= p_plus.

    Forms:

    - ``constant``: p(c) = p_minus = p_plus.
    - ``affine_clamped``: clip(intercept + slope*c, p_minus, p_plus).  At the
      clamp corners the derivative is one-sided (taken as 0, the clamped
      side); `corner_mask` flags such points.
    - ``tanh_profile``: smooth transition between the bounds, centred at
      ``center`` with scale ``width``.  By default p decreases with c
      (shear-thinning strengthening as concentration grows); set
      ``increasing=True`` for the opposite orientation.
    """

    p_minus: float
    p_plus: float
    form: str = "constant"
    intercept: Optional[float] = None
    slope: float = 0.0
    center: float = 0.5
    width: float = 0.25
    increasing: bool = False

    def __post_init__(self):
        if not self.p_minus > 1.0:
            raise ValueError(f"p_minus must exceed 1, got {self.p_minus}")
        if self.p_plus < self.p_minus:
            raise ValueError("p_plus must be >= p_minus")
        if self.form not in FORMS:
            raise ValueError(f"unknown exponent form {self.form!r}")
        if self.form == "constant" and self.p_plus != self.p_minus:
            raise ValueError("constant form requires p_minus == p_plus")
        if self.form == "affine_clamped" and self.intercept is None:
            object.__setattr__(self, "intercept", self.p_plus)
        if self.form == "tanh_profile" and self.width == 0.0:
            raise ValueError("tanh_profile needs a nonzero width")

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        if self.form == "constant":
            return np.full_like(c, self.p_minus)
        if self.form == "affine_clamped":
            return np.clip(self.intercept + self.slope * c, self.p_minus, self.p_plus)
        half = 0.5 * (self.p_plus - self.p_minus)
        mid = 0.5 * (self.p_plus + self.p_minus)
        sign = 1.0 if self.increasing else -1.0
        return mid + sign * half * np.tanh((c - self.center) / self.width)

    def derivative(self, c):
        """dp/dc; zero on clamped regions (one-sided value at corners)."""
        c = np.asarray(c, dtype=float)
        if self.form == "constant":
            return np.zeros_like(c)
        if self.form == "affine_clamped":
            raw = self.intercept + self.slope * c
            inside = (raw > self.p_minus) & (raw < self.p_plus)
            return np.where(inside, self.slope, 0.0)
        half = 0.5 * (self.p_plus - self.p_minus)
        sign = 1.0 if self.increasing else -1.0
        return sign * half / self.width / np.cosh((c - self.center) / self.width) ** 2

    def corner_mask(self, c):
        """Points where the affine profile sits exactly on a clamp corner."""
        c = np.asarray(c, dtype=float)
        if self.form != "affine_clamped":
            return np.zeros_like(c, dtype=bool)
        raw = self.intercept + self.slope * c
        tol = 1e-12 * max(1.0, abs(self.p_minus), abs(self.p_plus))
        return (np.abs(raw - self.p_minus) <= tol) | (np.abs(raw - self.p_plus) <= tol)

    @property
    def lipschitz_bound(self) -> float:
        if self.form == "constant":
            return 0.0
        if self.form == "affine_clamped":
            return abs(self.slope)
        return 0.5 * (self.p_plus - self.p_minus) / abs(self.width)


@dataclass(frozen=True)
class StressModel:
    """Viscosity scale nu0 > 0 together with an exponent profile."""

    nu0: float
    index: PowerLawIndex

    def __post_init__(self):
        if not self.nu0 > 0.0:
            raise ValueError(f"nu0 must be positive, got {self.nu0}")


def eval_p(index: PowerLawIndex, c):
    """Exponent profile evaluated at concentration c (array or scalar)."""
    return index(c)


def strain_sq(D: np.ndarray) -> np.ndarray:
    """|D|^2 = sum_ij D_ij^2, contracting the two leading component axes."""
    return np.einsum("ij...,ij...->...", D, D)


def stress(model: StressModel, c, D: np.ndarray) -> np.ndarray:
    """S(c, D) with component axes first; broadcasts over trailing axes."""
    c = np.asarray(c, dtype=float)
    D = np.asarray(D, dtype=float)
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(D))):
        raise ValueError("stress requires finite inputs")
    p = model.index(c)
    w = (1.0 + strain_sq(D)) ** (0.5 * (p - 2.0))
    return 2.0 * model.nu0 * w * D


def eval_stress(model: StressModel, c: PhysicalField, D: PhysicalField) -> PhysicalField:
    """Field-level wrapper around `stress`."""
    if c.grid is not D.grid and c.grid != D.grid:
        raise ValueError("c and D must share a grid")
    return PhysicalField(D.grid, TENSOR, stress(model, c.values, D.values))


def _sym_identity(d: int) -> np.ndarray:
    eye = np.eye(d)
    return 0.5 * (
        np.einsum("ik,jh->ijkh", eye, eye) + np.einsum("ih,jk->ijkh", eye, eye)
    )


def stress_jacobian_D(model: StressModel, c, D: np.ndarray) -> np.ndarray:
    """Exact derivative of S with respect to the symmetric strain tensor.

    Returns the rank-4 array (restricted to symmetric directions)

        J_ijkh = 2*nu0*(1+|D|^2)^((p-2)/2) *
                 [ sym(i,j,k,h) + (p-2) (1+|D|^2)^(-1) D_ij D_kh ],

    symmetric under (ij) <-> (kh) exactly.  Trailing sample axes broadcast.
    """
    c = np.asarray(c, dtype=float)
    D = np.asarray(D, dtype=float)
    d = D.shape[0]
    p = model.index(c)
    s = strain_sq(D)
    w = (1.0 + s) ** (0.5 * (p - 2.0))
    ident = _sym_identity(d).reshape((d, d, d, d) + (1,) * (D.ndim - 2))
    outer = np.einsum("ij...,kh...->ijkh...", D, D)
    return 2.0 * model.nu0 * w * (ident + (p - 2.0) / (1.0 + s) * outer)


def stress_jacobian_c(model: StressModel, c, D: np.ndarray):
    """Derivative of S with respect to concentration, plus a corner flag.

    dS/dc = 2*nu0*p'(c) * (1/2)*log(1+|D|^2) * (1+|D|^2)^((p-2)/2) * D.
    The second return value marks points where the exponent profile sits on
    a clamp corner and the derivative is one-sided.
    """
    c = np.asarray(c, dtype=float)
    D = np.asarray(D, dtype=float)
    p = model.index(c)
    dp = model.index.derivative(c)
    s = strain_sq(D)
    w = (1.0 + s) ** (0.5 * (p - 2.0))
    jac = 2.0 * model.nu0 * dp * 0.5 * np.log1p(s) * w * D
    return jac, model.index.corner_mask(c)


@dataclass
class PropertyReport:
    """Outcome of the randomized structural-inequality search."""

    samples: int
    d: int
    seed: int
    k1_measured: float
    k2_measured: float
    k3_measured: float
    k4_measured: float
    violations: int
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _random_unit_sym(rng: np.random.Generator, d: int, m: int) -> np.ndarray:
    a = rng.standard_normal((d, d, m))
    sym = 0.5 * (a + np.swapaxes(a, 0, 1))
    norm = np.sqrt(strain_sq(sym))
    return sym / norm


def check_properties(
    model: StressModel,
    n_samples: int = 10_000,
    rng_seed: int = 0,
    d: int = 2,
    c_range: tuple = (-2.0, 3.0),
) -> PropertyReport:
    """Randomized verification of the four structural inequalities.

    Draws (c, D1, D2, B) with |D| log-uniform in [1e-3, 1e3] and checks

    1. J:(B (x) B) >= k1 * (1+|D1|^2)^((p-2)/2) |B|^2 with k1 > 0,
    2. opnorm(J) <= k2 * (1+|D1|^2)^((p-2)/2),
    3. |dS/dc|  <= k3 * (1+|D1|^2)^((p-1)/2) log(2+|D1|),
    4. (S(c,D1)-S(c,D2)):(D1-D2) >= k4 * (1+|D1|^2+|D2|^2)^((p-2)/2) |D1-D2|^2
       with k4 > 0,

    reporting the extremal measured ratios.  Any sign violation yields a
    failing report containing the first witness sample.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    m = n_samples
    c = rng.uniform(c_range[0], c_range[1], m)
    mag1 = 10.0 ** rng.uniform(-3, 3, m)
    mag2 = 10.0 ** rng.uniform(-3, 3, m)
    D1 = _random_unit_sym(rng, d, m) * mag1
    D2 = _random_unit_sym(rng, d, m) * mag2
    B = _random_unit_sym(rng, d, m)

    p = model.index(c)
    s1 = strain_sq(D1)
    w1 = (1.0 + s1) ** (0.5 * (p - 2.0))

    J = stress_jacobian_D(model, c, D1)
    quad = np.einsum("ijkh...,ij...,kh...->...", J, B, B)
    bsq = strain_sq(B)
    ratio1 = quad / (w1 * bsq)

    Jmat = np.moveaxis(J.reshape(d * d, d * d, m), -1, 0)
    eigs = np.linalg.eigvalsh(Jmat)
    opnorm = np.abs(eigs).max(axis=1)
    ratio2 = opnorm / w1

    dSdc, _ = stress_jacobian_c(model, c, D1)
    bound3 = (1.0 + s1) ** (0.5 * (p - 1.0)) * np.log(2.0 + np.sqrt(s1))
    ratio3 = np.sqrt(strain_sq(dSdc)) / bound3

    diff = D1 - D2
    mono = np.einsum(
        "ij...,ij...->...", stress(model, c, D1) - stress(model, c, D2), diff
    )
    wpair = (1.0 + s1 + strain_sq(D2)) ** (0.5 * (p - 2.0))
    ratio4 = mono / (wpair * strain_sq(diff))

    bad = ~np.isfinite(ratio1) | ~np.isfinite(ratio4) | (ratio1 <= 0) | (ratio4 <= 0)
    violations = int(bad.sum())
    witness = None
    if violations:
        i = int(np.argmax(bad))
        witness = {
            "c": float(c[i]),
            "D1": D1[..., i].tolist(),
            "D2": D2[..., i].tolist(),
            "B": B[..., i].tolist(),
            "quad_ratio": float(ratio1[i]),
            "monotonicity_ratio": float(ratio4[i]),
        }

    return PropertyReport(
        samples=m,
        d=d,
        seed=rng_seed,
        k1_measured=float(ratio1.min()),
        k2_measured=float(ratio2.max()),
        k3_measured=float(ratio3.max()),
        k4_measured=float(ratio4.min()),
        violations=violations,
        witness=witness,
    )
