"""
Periodic grids, discrete Fourier transforms and spectral calculus.

Everything downstream (propagators, solvers, weighted norms) works on a
uniform periodic box that stands in for the plane:

- Grid2D: immutable description of the box and its wavenumbers
- RealField / SpectralField: samples and full complex DFT coefficients
- spectral_derivative: multiplication by (i xi)^ax (i eta)^ay
- dealias: square cutoff used for the quadratic nonlinearity
- integrate: periodic Riemann sum dx*dy*sum

Arrays are indexed [i, j] <-> (x_i, y_j), i.e. axis 0 is x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatchError, NonFiniteError

_WORKERS = 1


def set_threads(n: int) -> None:
    """Set the number of worker threads used by every transform."""
    global _WORKERS
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    _WORKERS = int(n)


def get_threads() -> int:
    return _WORKERS


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on [x0, x0+Lx) x [y0, y0+Ly).

    Args:
        nx, ny: point counts, even and at least 8.
        Lx, Ly: side lengths.
        x0, y0: lower-left corner.
    """

    nx: int
    ny: int
    Lx: float
    Ly: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self) -> None:
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError(f"side lengths must be positive, got Lx={self.Lx}, Ly={self.Ly}")

    @classmethod
    def centered(cls, n: int, half_width: float, ny: int | None = None) -> "Grid2D":
        """Square box [-half_width, half_width)^2 with n points per side."""
        L = 2.0 * half_width
        return cls(n, n if ny is None else ny, L, L, -half_width, -half_width)

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def kx(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    @property
    def ky(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)

    def kmesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.kx, self.ky, indexing="ij")

    def index_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Signed integer mode indices (j, k) in FFT ordering."""
        j = np.fft.fftfreq(self.nx, d=1.0 / self.nx).astype(int)
        k = np.fft.fftfreq(self.ny, d=1.0 / self.ny).astype(int)
        return np.meshgrid(j, k, indexing="ij")

    def refine(self, factor: int = 2) -> "Grid2D":
        return Grid2D(self.nx * factor, self.ny * factor, self.Lx, self.Ly, self.x0, self.y0)

    def require_same(self, other: "Grid2D") -> None:
        if self != other:
            raise GridMismatchError(f"grid mismatch: {self} vs {other}")


@dataclass(frozen=True)
class RealField:
    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteError("field contains non-finite samples")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "RealField":
        X, Y = grid.mesh()
        return cls(grid, fn(X, Y))

    def __add__(self, other: "RealField") -> "RealField":
        self.grid.require_same(other.grid)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        self.grid.require_same(other.grid)
        return RealField(self.grid, self.values - other.values)

    def scale(self, c: float) -> "RealField":
        return RealField(self.grid, c * self.values)


@dataclass(frozen=True)
class SpectralField:
    grid: Grid2D
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def multiply(self, multiplier: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients * multiplier)


def fft2(a: np.ndarray) -> np.ndarray:
    return sfft.fft2(a, workers=_WORKERS)


def ifft2(a: np.ndarray) -> np.ndarray:
    return sfft.ifft2(a, workers=_WORKERS)


def forward_transform(f: RealField) -> SpectralField:
    """Unnormalized DFT: c[j,k] = sum f[m,n] exp(-i(k_j x_m + k_k y_n)) up to the corner phase."""
    if not np.all(np.isfinite(f.values)):
        raise NonFiniteError("forward_transform received non-finite samples")
    return SpectralField(f.grid, fft2(f.values))


def inverse_transform(F: SpectralField, *, check_real: bool = False) -> RealField:
    v = ifft2(F.coefficients)
    if check_real:
        scale = max(np.abs(v.real).max(), 1e-300)
        if np.abs(v.imag).max() > 1e-10 * scale:
            raise ValueError("inverse transform is not real; coefficients lack conjugate symmetry")
    return RealField(F.grid, v.real)


def parseval_sums(f: RealField, F: SpectralField | None = None) -> tuple[float, float]:
    """Return (dx dy sum |f|^2, dx dy/(nx ny) sum |c|^2); equal by Parseval."""
    g = f.grid
    if F is None:
        F = forward_transform(f)
    phys = g.dx * g.dy * float(np.sum(f.values**2))
    spec = g.dx * g.dy / (g.nx * g.ny) * float(np.sum(np.abs(F.coefficients) ** 2))
    return phys, spec


def derivative_multiplier(grid: Grid2D, ax: int, ay: int) -> np.ndarray:
    """(i kx)^ax (i ky)^ay with the Nyquist row/column zeroed for odd orders."""
    if ax < 0 or ay < 0:
        raise ValueError(f"derivative orders must be nonnegative, got ({ax}, {ay})")
    mx = (1j * grid.kx) ** ax
    my = (1j * grid.ky) ** ay
    if ax % 2:
        mx[grid.nx // 2] = 0.0
    if ay % 2:
        my[grid.ny // 2] = 0.0
    return np.outer(mx, my)


def spectral_derivative(F: SpectralField, ax: int, ay: int) -> SpectralField:
    if ax == 0 and ay == 0:
        return F
    return F.multiply(derivative_multiplier(F.grid, ax, ay))


def derivative(f: RealField, ax: int, ay: int) -> RealField:
    """Physical-space convenience wrapper around spectral_derivative."""
    return inverse_transform(spectral_derivative(forward_transform(f), ax, ay))


def dealias_mask(grid: Grid2D, fraction: float) -> np.ndarray:
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"dealias fraction must lie in (0, 1], got {fraction}")
    J, K = grid.index_mesh()
    return (np.abs(J) <= fraction * grid.nx / 2) & (np.abs(K) <= fraction * grid.ny / 2)


def dealias(F: SpectralField, fraction: float = 2.0 / 3.0) -> SpectralField:
    return F.multiply(dealias_mask(F.grid, fraction))


def integrate(f: RealField) -> float:
    return f.grid.dx * f.grid.dy * float(np.sum(f.values))


def l2_norm(f: RealField) -> float:
    return float(np.sqrt(integrate(RealField(f.grid, f.values**2))))


def evaluate_at(F: SpectralField, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of F at arbitrary points.

    Exact band-limited interpolation; cost is O(npoints * nx * ny), so it is
    meant for a few thousand points, not whole fine grids.
    """
    g = F.grid
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    c = F.coefficients.copy()
    # Split the Nyquist terms symmetrically so the interpolant is real for real data.
    c[g.nx // 2, :] *= 0.5
    c[:, g.ny // 2] *= 0.5
    kx, ky = g.kx, g.ky
    kx_ext = np.concatenate([kx, [-kx[g.nx // 2]]])
    ky_ext = np.concatenate([ky, [-ky[g.ny // 2]]])
    c_ext = np.zeros((g.nx + 1, g.ny + 1), dtype=complex)
    c_ext[: g.nx, : g.ny] = c
    c_ext[g.nx, : g.ny] = c[g.nx // 2, :]
    c_ext[: g.nx, g.ny] = c[:, g.ny // 2]
    c_ext[g.nx, g.ny] = c[g.nx // 2, g.ny // 2]
    out = np.empty(x.size)
    chunk = max(1, 2_000_000 // (g.nx + 1))
    for s in range(0, x.size, chunk):
        ex = np.exp(1j * np.outer(x[s : s + chunk] - g.x0, kx_ext))
        ey = np.exp(1j * np.outer(y[s : s + chunk] - g.y0, ky_ext))
        out[s : s + chunk] = np.einsum("pj,jk,pk->p", ex, c_ext, ey, optimize=True).real
    return out / (g.nx * g.ny)


def interpolate_to_tensor(F: SpectralField, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant on the tensor product of 1D node sets x and y."""
    g = F.grid
    c = F.coefficients.copy()
    c[g.nx // 2, :] *= 0.5
    c[:, g.ny // 2] *= 0.5
    kx_ext = np.concatenate([g.kx, [-g.kx[g.nx // 2]]])
    ky_ext = np.concatenate([g.ky, [-g.ky[g.ny // 2]]])
    c_ext = np.zeros((g.nx + 1, g.ny + 1), dtype=complex)
    c_ext[: g.nx, : g.ny] = c
    c_ext[g.nx, : g.ny] = c[g.nx // 2, :]
    c_ext[: g.nx, g.ny] = c[:, g.ny // 2]
    c_ext[g.nx, g.ny] = c[g.nx // 2, g.ny // 2]
    ex = np.exp(1j * np.outer(np.asarray(x, float) - g.x0, kx_ext))
    ey = np.exp(1j * np.outer(np.asarray(y, float) - g.y0, ky_ext))
    return (ex @ c_ext @ ey.T).real / (g.nx * g.ny)
