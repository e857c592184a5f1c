"""Fourier representation of real periodic fields on the unit torus.

Fields live on [0,1]^d with d = 2 or 3, sampled at n^d uniformly spaced
collocation points or stored as real-to-complex FFT coefficients
(``numpy.fft.rfftn`` layout, ``norm="forward"`` so that the zero mode is the
mean).  Wavenumbers are angular, 2*pi*m for integer frequency m, because the
domain has unit period.  All differentiation is exact multiplication by i*k,
with the Nyquist frequency zeroed in the derivative tables to avoid the
spurious asymmetric derivative of the unmatched mode.

Component axes come first: a vector field has shape (d, n, ..., n), a rank-2
tensor (d, d, n, ..., n).  Operations are pure; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

SCALAR = "scalar"
VECTOR = "vector"
TENSOR = "tensor"     # rank-2; symmetry is a property of the values
TENSOR3 = "tensor3"   # rank-3, e.g. the gradient of a rank-2 tensor

_RANK_NDIM = {SCALAR: 0, VECTOR: 1, TENSOR: 2, TENSOR3: 3}
_NDIM_RANK = {v: k for k, v in _RANK_NDIM.items()}


def _axis_shape(d: int, axis: int, m: int) -> tuple:
    shape = [1] * d
    shape[axis] = m
    return tuple(shape)


@dataclass(frozen=True)
class Grid:
    """Wavenumber and collocation bookkeeping for one resolution.

    Immutable after construction; safe for concurrent reads.  Derived arrays:

    - ``x``: d broadcastable coordinate arrays, spacing 1/n.
    - ``k``: angular wavenumbers 2*pi*m per axis (m the signed integer
      frequency; last axis in rfft half-spectrum layout).
    - ``kd``: same but with the Nyquist entry zeroed; used by every
      derivative operator.
    - ``k2``, ``kd2``: |k|^2 tables (full / derivative variant).
    - ``dealias_keep``: boolean mask of modes kept by the 2/3 rule.
    """

    d: int
    n: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"spatial dimension must be 2 or 3, got {self.d}")
        if self.n % 2 != 0:
            raise ValueError(f"modes per dimension must be even, got {self.n}")
        if not 8 <= self.n <= 1024:
            raise ValueError(f"modes per dimension must lie in [8, 1024], got {self.n}")

        d, n = self.d, self.n
        freqs = []
        for a in range(d):
            if a == d - 1:
                f = np.fft.rfftfreq(n, 1.0 / n)
            else:
                f = np.fft.fftfreq(n, 1.0 / n)
            freqs.append(f.reshape(_axis_shape(d, a, f.size)))

        k = tuple(2.0 * np.pi * f for f in freqs)
        kd = []
        for f in freqs:
            kk = 2.0 * np.pi * f.copy()
            kk[np.abs(f) == n // 2] = 0.0
            kd.append(kk)
        kd = tuple(kd)

        k2 = sum(kk**2 for kk in k)
        kd2 = sum(kk**2 for kk in kd)

        keep = np.ones(self.spec_shape, dtype=bool)
        for f in freqs:
            keep &= np.abs(f) <= n / 3.0

        # Parseval weight: interior rfft modes represent a conjugate pair.
        wlast = np.full(n // 2 + 1, 2.0)
        wlast[0] = 1.0
        wlast[n // 2] = 1.0
        weight = wlast.reshape(_axis_shape(d, d - 1, n // 2 + 1))

        x = tuple(
            (np.arange(n) / n).reshape(_axis_shape(d, a, n)) for a in range(d)
        )

        object.__setattr__(self, "x", x)
        object.__setattr__(self, "freq", tuple(freqs))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "kd", kd)
        object.__setattr__(self, "k2", k2)
        object.__setattr__(self, "kd2", kd2)
        object.__setattr__(self, "dealias_keep", keep)
        object.__setattr__(self, "spec_weight", weight)

    @property
    def phys_shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def spec_shape(self) -> tuple:
        return (self.n,) * (self.d - 1) + (self.n // 2 + 1,)

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    def comp_shape(self, rank: str) -> tuple:
        return (self.d,) * _RANK_NDIM[rank]

    def meshgrid(self):
        """Dense coordinate arrays (d arrays of shape n^d)."""
        return tuple(np.broadcast_to(xi, self.phys_shape).copy() for xi in self.x)


def make_grid(d: int, n: int) -> Grid:
    """Build a torus grid with n modes per dimension (even, 8 <= n <= 1024)."""
    return Grid(d=d, n=n)


@dataclass
class PhysicalField:
    """Real samples of a field at the collocation points."""

    grid: Grid
    rank: str
    values: np.ndarray

    def __post_init__(self):
        expected = self.grid.comp_shape(self.rank) + self.grid.phys_shape
        if self.values.shape != expected:
            raise ValueError(
                f"physical {self.rank} field must have shape {expected}, "
                f"got {self.values.shape}"
            )

    def copy(self) -> "PhysicalField":
        return PhysicalField(self.grid, self.rank, self.values.copy())


@dataclass
class SpectralField:
    """Complex rfft coefficients of a real field.

    Hermitian symmetry is implied by the half-spectrum storage.  The
    ``zero_mean`` and ``div_free`` flags record structural claims that the
    constructing operation guarantees.
    """

    grid: Grid
    rank: str
    coeffs: np.ndarray
    zero_mean: bool = False
    div_free: bool = False

    def __post_init__(self):
        expected = self.grid.comp_shape(self.rank) + self.grid.spec_shape
        if self.coeffs.shape != expected:
            raise ValueError(
                f"spectral {self.rank} field must have shape {expected}, "
                f"got {self.coeffs.shape}"
            )

    def copy(self) -> "SpectralField":
        return replace(self, coeffs=self.coeffs.copy())


def physical_field(grid: Grid, rank: str, values=None) -> PhysicalField:
    if values is None:
        values = np.zeros(grid.comp_shape(rank) + grid.phys_shape)
    return PhysicalField(grid, rank, np.asarray(values, dtype=float))


def spectral_field(grid: Grid, rank: str, coeffs=None, **flags) -> SpectralField:
    if coeffs is None:
        coeffs = np.zeros(grid.comp_shape(rank) + grid.spec_shape, dtype=complex)
    return SpectralField(grid, rank, np.asarray(coeffs, dtype=complex), **flags)


def _fft_axes(grid: Grid) -> tuple:
    return tuple(range(-grid.d, 0))


def to_spectral(f: PhysicalField) -> SpectralField:
    """Forward transform; the zero mode equals the mean of the field."""
    if not np.all(np.isfinite(f.values)):
        raise ValueError("cannot transform a field with non-finite values")
    coeffs = np.fft.rfftn(f.values, axes=_fft_axes(f.grid), norm="forward")
    return SpectralField(f.grid, f.rank, coeffs)


def to_physical(f: SpectralField) -> PhysicalField:
    if not np.all(np.isfinite(f.coeffs)):
        raise ValueError("cannot transform a field with non-finite coefficients")
    values = np.fft.irfftn(
        f.coeffs, s=f.grid.phys_shape, axes=_fft_axes(f.grid), norm="forward"
    )
    return PhysicalField(f.grid, f.rank, values)


def _rank_after(rank: str, delta: int) -> str:
    return _NDIM_RANK[_RANK_NDIM[rank] + delta]


def gradient(f: SpectralField) -> SpectralField:
    """Exact spectral gradient; the new derivative axis comes first.

    grad(u)[a, ...] = d u[...] / d x_a, with the Nyquist derivative zeroed.
    """
    g = f.grid
    out = np.empty((g.d,) + f.coeffs.shape, dtype=complex)
    for a in range(g.d):
        out[a] = 1j * g.kd[a] * f.coeffs
    return SpectralField(g, _rank_after(f.rank, +1), out, zero_mean=True)


def divergence(f: SpectralField) -> SpectralField:
    """Contract the derivative with the last component axis.

    For a vector u this is sum_i d_i u_i; for a rank-2 tensor T it is
    (div T)_i = sum_j d_j T_{ij}, matching div(v (x) v) and div S in the
    momentum balance.
    """
    g = f.grid
    if _RANK_NDIM[f.rank] < 1:
        raise ValueError("divergence needs at least a vector field")
    nd = _RANK_NDIM[f.rank]
    comp_axis = nd - 1
    out = np.zeros(f.coeffs.shape[:comp_axis] + f.coeffs.shape[nd:], dtype=complex)
    for j in range(g.d):
        out += 1j * g.kd[j] * np.take(f.coeffs, j, axis=comp_axis)
    return SpectralField(g, _rank_after(f.rank, -1), out, zero_mean=True)


def laplacian(f: SpectralField) -> SpectralField:
    return replace(f, coeffs=-f.grid.kd2 * f.coeffs)


def sym_gradient(f: SpectralField) -> SpectralField:
    """Symmetric part of the velocity gradient, (grad v + grad v^T)/2."""
    if f.rank != VECTOR:
        raise ValueError("sym_gradient expects a vector field")
    grad = gradient(f).coeffs  # [a, i] = d_a v_i
    sym = 0.5 * (grad + np.swapaxes(grad, 0, 1))
    return SpectralField(f.grid, TENSOR, sym, zero_mean=True)


def spectral_derivative(f: SpectralField, kind: str) -> SpectralField:
    """Dispatch on {gradient, divergence, laplacian, sym_gradient}."""
    ops = {
        "gradient": gradient,
        "divergence": divergence,
        "laplacian": laplacian,
        "sym_gradient": sym_gradient,
    }
    if kind not in ops:
        raise ValueError(f"unknown derivative kind {kind!r}")
    return ops[kind](f)


def leray_project(f: SpectralField) -> SpectralField:
    """Project a vector field onto divergence-free fields, per mode.

    Uses the derivative wavenumbers, so the projected field has exactly zero
    spectral divergence under `divergence`.  The zero mode (and pure-Nyquist
    modes, where every derivative wavenumber vanishes) are left untouched.
    The projection is idempotent mode by mode.
    """
    if f.rank != VECTOR:
        raise ValueError("leray_project expects a vector field")
    g = f.grid
    kd = g.kd
    kdotu = np.zeros(g.spec_shape, dtype=complex)
    for i in range(g.d):
        kdotu += kd[i] * f.coeffs[i]
    inv = np.where(g.kd2 > 0.0, 1.0 / np.where(g.kd2 > 0.0, g.kd2, 1.0), 0.0)
    out = f.coeffs.copy()
    for i in range(g.d):
        out[i] -= kd[i] * kdotu * inv
    return SpectralField(g, VECTOR, out, zero_mean=f.zero_mean, div_free=True)


def dealias(f: SpectralField, rule: str = "two_thirds") -> SpectralField:
    """Zero modes with any |frequency index| > n/3 (rule "none" is identity)."""
    if rule == "none":
        return f.copy()
    if rule != "two_thirds":
        raise ValueError(f"unknown dealias rule {rule!r}")
    return replace(f, coeffs=f.coeffs * f.grid.dealias_keep)


def remove_mean(f: SpectralField) -> SpectralField:
    out = f.coeffs.copy()
    out[(Ellipsis,) + (0,) * f.grid.d] = 0.0
    return replace(f, coeffs=out, zero_mean=True)


def dealias_and_zero_mean(
    f: SpectralField, rule: str = "two_thirds", zero_mean: bool = False
) -> SpectralField:
    out = dealias(f, rule)
    if zero_mean:
        out = remove_mean(out)
    return out


def mean_value(f) -> float:
    """Mean over the torus; components averaged individually if present."""
    if isinstance(f, SpectralField):
        return np.real(f.coeffs[(Ellipsis,) + (0,) * f.grid.d])
    return f.values.mean(axis=tuple(range(-f.grid.d, 0)))


# ---------------------------------------------------------------------------
# quadrature and norms
# ---------------------------------------------------------------------------

def integral(f: PhysicalField):
    """Collocation quadrature of f over the unit-volume torus."""
    return f.values.mean(axis=tuple(range(-f.grid.d, 0)))


def inner(a: PhysicalField, b: PhysicalField) -> float:
    """L2 pairing: integral of the full component contraction a : b."""
    prod = (a.values * b.values).sum(axis=tuple(range(a.values.ndim - a.grid.d)))
    return float(prod.mean())


def pointwise_magnitude(f: PhysicalField) -> np.ndarray:
    """Euclidean magnitude over component axes at each point."""
    nspace = f.grid.d
    comp_axes = tuple(range(f.values.ndim - nspace))
    if not comp_axes:
        return np.abs(f.values)
    return np.sqrt((f.values**2).sum(axis=comp_axes))


def l2_norm(f) -> float:
    """L2(Omega) norm; spectral and physical evaluations agree (Parseval)."""
    if isinstance(f, PhysicalField):
        sq = (f.values**2).sum(axis=tuple(range(f.values.ndim - f.grid.d)))
        return float(np.sqrt(sq.mean()))
    g = f.grid
    w = g.spec_weight
    sq = (w * np.abs(f.coeffs) ** 2).sum()
    return float(np.sqrt(sq))


def lp_norm(f: PhysicalField, p: float) -> float:
    """L^p norm of the pointwise magnitude (p may be inf)."""
    mag = pointwise_magnitude(f)
    if np.isinf(p):
        return float(mag.max())
    return float((mag**p).mean() ** (1.0 / p))


def divergence_residual(f: SpectralField) -> float:
    """|div v|_2 relative to |grad v|_2, both in spectral form."""
    g = f.grid
    div_sq = 0.0
    grad_sq = 0.0
    w = g.spec_weight
    dv = np.zeros(g.spec_shape, dtype=complex)
    for i in range(g.d):
        dv += 1j * g.kd[i] * f.coeffs[i]
        grad_sq += (w * (g.kd2 * np.abs(f.coeffs[i]) ** 2)).sum()
    div_sq = (w * np.abs(dv) ** 2).sum()
    if grad_sq == 0.0:
        return 0.0
    return float(np.sqrt(div_sq / grad_sq))


def korn_ratio(f: SpectralField) -> float:
    """|grad v|_2 / |D v|_2; equals sqrt(2) for solenoidal zero-mean fields."""
    gnorm = l2_norm(gradient(f))
    dnorm = l2_norm(sym_gradient(f))
    if dnorm == 0.0:
        return 0.0
    return gnorm / dnorm


def random_field(grid: Grid, rank: str, rng: np.random.Generator,
                 scale: float = 1.0, decay: float | None = None) -> PhysicalField:
    """Random real field for tests; optional spectral decay exp(-decay*|m|)."""
    values = rng.standard_normal(grid.comp_shape(rank) + grid.phys_shape) * scale
    f = PhysicalField(grid, rank, values)
    if decay is not None:
        spec = to_spectral(f)
        mag = np.sqrt(sum((kk / (2 * np.pi)) ** 2 for kk in grid.k))
        spec = replace(spec, coeffs=spec.coeffs * np.exp(-decay * mag))
        f = to_physical(spec)
    return f


def stokes_eigenvalues(grid: Grid, count: int):
    """Leading eigenvalues of the Stokes operator on the torus.

    On the torus the eigenvectors are the divergence-free Fourier modes and
    -Lap w = |k|^2 w, so the eigenvalue attached to integer frequency m is
    (2*pi)^2 |m|^2.  Equal eigenvalues are ordered lexicographically by
    (|m|^2, m); each m carries d-1 independent solenoidal directions.
    Returns ``count`` pairs (eigenvalue, m).
    """
    n, d = grid.n, grid.d
    half = n // 2
    modes = []
    rng = range(-half, half)
    if d == 2:
        candidates = [(a, b) for a in rng for b in rng]
    else:
        candidates = [(a, b, c) for a in rng for b in rng for c in rng]
    for m in candidates:
        m2 = sum(mm * mm for mm in m)
        if m2 == 0:
            continue
        modes.append((m2, m))
    modes.sort()
    out = []
    for m2, m in modes:
        lam = (2.0 * np.pi) ** 2 * m2
        for _ in range(d - 1):
            out.append((lam, m))
            if len(out) == count:
                return out
    return out
