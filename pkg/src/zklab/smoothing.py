"""
Inverse of the conjugated linear operator and its derivative multipliers.

The conjugated operator H = d_t + (d_x - lam)^3 + (d_y - beta)^3 has symbol
i tau + (i xi - lam)^3 + (i eta - beta)^3; its inverse T0 has symbol m0 and
(d_x - lam)^k (d_y - beta)^l T0 has symbol m_kl = (i xi - lam)^k (i eta - beta)^l m0.
R^3 is modelled by a 3D periodic box with the data confined to its central
half along every axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import InconclusiveError
from .spectral import get_threads

SINGULAR_TOL = 1e-10


def _check_shift(lam: float, beta: float) -> None:
    if lam == 0 and beta == 0:
        raise ValueError("(lambda, beta) must not both vanish")


def m0_denominator(xi, eta, tau, lam: float, beta: float):
    return 1j * np.asarray(tau) + (1j * np.asarray(xi) - lam) ** 3 + (1j * np.asarray(eta) - beta) ** 3


def ab_parts(xi, eta, lam: float, beta: float):
    """(a, b) with m0 = -i / (tau + a + i b)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    a = -(xi**3) + 3 * xi * lam**2 - eta**3 + 3 * eta * beta**2
    b = lam**3 - 3 * xi**2 * lam + beta**3 - 3 * eta**2 * beta
    return a, b


def m0_eval(xi, eta, tau, lam: float, beta: float, form: str = "direct"):
    """m0 = 1/(i tau + (i xi - lam)^3 + (i eta - beta)^3); form="rewritten" uses -i/(tau + a + i b).

    Points where the denominator vanishes to within SINGULAR_TOL return nan.
    """
    _check_shift(lam, beta)
    if form == "direct":
        den = m0_denominator(xi, eta, tau, lam, beta)
        num = 1.0
    elif form == "rewritten":
        a, b = ab_parts(xi, eta, lam, beta)
        den = np.asarray(tau) + a + 1j * b
        num = -1j
    else:
        raise ValueError(f"unknown form {form!r}")
    den = np.asarray(den, dtype=complex)
    sing = np.abs(den) < SINGULAR_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(sing, np.nan + 0j, num / np.where(sing, 1.0, den))
    return complex(out) if out.ndim == 0 else out


def is_singular(xi, eta, tau, lam: float, beta: float) -> np.ndarray:
    return np.abs(m0_denominator(xi, eta, tau, lam, beta)) < SINGULAR_TOL


def mkl_eval(xi, eta, tau, lam: float, beta: float, k: int, l: int):
    if k < 0 or l < 0 or k > 2 or l > 2 or k + l > 2:
        raise ValueError(f"derivative orders must satisfy k, l in {{0,1,2}}, k + l <= 2; got ({k}, {l})")
    return (1j * np.asarray(xi) - lam) ** k * (1j * np.asarray(eta) - beta) ** l * m0_eval(xi, eta, tau, lam, beta)


@dataclass(frozen=True)
class PoleTerms:
    """m20 = (1/3) sum_j -i / (xi + a_j + i b_j); roots v_j of v^3 + w^3 - tau."""

    roots: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ill_conditioned: bool
    min_separation: float

    def evaluate(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)[..., None]
        return np.sum(-1j / (xi + self.a + 1j * self.b), axis=-1) / 3.0


def partial_fractions_m20(eta: float, tau: float, lam: float, beta: float,
                          separation_tol: float = 1e-8) -> PoleTerms:
    w = eta + 1j * beta
    roots = np.roots([1.0, 0.0, 0.0, w**3 - tau])
    sep = min(abs(roots[i] - roots[j]) for i in range(3) for j in range(i + 1, 3))
    return PoleTerms(roots, -roots.real, lam - roots.imag, bool(sep < separation_tol), float(sep))


def m20_direct(xi, eta, tau, lam: float, beta: float):
    v = np.asarray(xi) + 1j * lam
    w = np.asarray(eta) + 1j * beta
    return -1j * v**2 / (v**3 + w**3 - tau)


@dataclass(frozen=True)
class Grid3D:
    """Periodic box [x0, x0+Lx) x [y0, y0+Ly) x [t0, t0+Lt)."""

    nx: int
    ny: int
    nt: int
    Lx: float
    Ly: float
    Lt: float
    x0: float = 0.0
    y0: float = 0.0
    t0: float = 0.0

    def __post_init__(self) -> None:
        for name, n in (("nx", self.nx), ("ny", self.ny), ("nt", self.nt)):
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
        if min(self.Lx, self.Ly, self.Lt) <= 0:
            raise ValueError("side lengths must be positive")

    @classmethod
    def centered(cls, n: int, half_width: float, nt: int | None = None,
                 half_time: float | None = None) -> "Grid3D":
        nt = n if nt is None else nt
        ht = half_width if half_time is None else half_time
        return cls(n, n, nt, 2 * half_width, 2 * half_width, 2 * ht, -half_width, -half_width, -ht)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nt)

    @property
    def spacings(self) -> tuple[float, float, float]:
        return self.Lx / self.nx, self.Ly / self.ny, self.Lt / self.nt

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        dx, dy, dt = self.spacings
        return (self.x0 + dx * np.arange(self.nx), self.y0 + dy * np.arange(self.ny),
                self.t0 + dt * np.arange(self.nt))

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        dx, dy, dt = self.spacings
        return tuple(2 * np.pi * np.fft.fftfreq(n, d=d) for n, d in zip(self.shape, (dx, dy, dt)))

    def refine(self, factor: int = 2) -> "Grid3D":
        return Grid3D(self.nx * factor, self.ny * factor, self.nt * factor, self.Lx, self.Ly, self.Lt,
                      self.x0, self.y0, self.t0)

    def swap_xy(self) -> "Grid3D":
        return Grid3D(self.ny, self.nx, self.nt, self.Ly, self.Lx, self.Lt, self.y0, self.x0, self.t0)


def _symbol_on_grid(grid: Grid3D, lam: float, beta: float, k: int, l: int):
    """m_kl sampled at the DFT wavenumbers; odd-power Nyquist entries use zero wavenumber."""
    kx, ky, kt = grid.wavenumbers()
    # Nyquist modes have no sign; taking them at wavenumber 0 keeps real data real.
    kx = kx.copy()
    ky = ky.copy()
    kt = kt.copy()
    kx[grid.nx // 2] = 0.0
    ky[grid.ny // 2] = 0.0
    kt[grid.nt // 2] = 0.0
    XI, ETA, TAU = np.meshgrid(kx, ky, kt, indexing="ij", sparse=True)
    den = m0_denominator(XI, ETA, TAU, lam, beta)
    sing = np.abs(den) < SINGULAR_TOL
    num = (1j * XI - lam) ** k * (1j * ETA - beta) ** l
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(sing, 0.0, num / np.where(sing, 1.0, den))
    return m, int(np.count_nonzero(sing))


@dataclass(frozen=True)
class T0Result:
    values: np.ndarray
    skipped: int


def central_mass_fraction(grid: Grid3D, h: np.ndarray) -> float:
    """Share of sum h^2 lying outside the central half of some axis."""
    total = float(np.sum(h * h))
    if total == 0.0:
        return 0.0
    sl = tuple(slice(n // 4, n - n // 4) for n in grid.shape)
    return 1.0 - float(np.sum(h[sl] ** 2)) / total


def apply_T0(grid: Grid3D, h: np.ndarray, lam: float, beta: float, k: int = 0, l: int = 0) -> T0Result:
    """Discrete (d_x - lam)^k (d_y - beta)^l T0 applied to a real field on the 3D box."""
    _check_shift(lam, beta)
    h = np.asarray(h, dtype=float)
    if h.shape != grid.shape:
        raise ValueError(f"field shape {h.shape} does not match grid {grid.shape}")
    if k < 0 or l < 0 or k > 2 or l > 2 or k + l > 2:
        raise ValueError(f"derivative orders must satisfy k, l in {{0,1,2}}, k + l <= 2; got ({k}, {l})")
    m, skipped = _symbol_on_grid(grid, lam, beta, k, l)
    H = sfft.fftn(h, workers=get_threads())
    out = sfft.ifftn(m * H, workers=get_threads())
    return T0Result(out.real, skipped)


def apply_H(grid: Grid3D, f: np.ndarray, lam: float, beta: float) -> np.ndarray:
    """Forward operator d_t + (d_x - lam)^3 + (d_y - beta)^3 by multiplication with its symbol."""
    kx, ky, kt = grid.wavenumbers()
    kx = kx.copy()
    ky = ky.copy()
    kt = kt.copy()
    kx[grid.nx // 2] = 0.0
    ky[grid.ny // 2] = 0.0
    kt[grid.nt // 2] = 0.0
    XI, ETA, TAU = np.meshgrid(kx, ky, kt, indexing="ij", sparse=True)
    sym = m0_denominator(XI, ETA, TAU, lam, beta)
    return sfft.ifftn(sym * sfft.fftn(f, workers=get_threads()), workers=get_threads()).real


def _mixed_norms(grid: Grid3D, u: np.ndarray, axis: int) -> tuple[float, float]:
    """(max over `axis` of the L2 norm over the other two axes, L1 over `axis` of that L2 norm)."""
    d = grid.spacings
    others = tuple(i for i in range(3) if i != axis)
    inner = np.sqrt(d[others[0]] * d[others[1]] * np.sum(u * u, axis=others))
    return float(np.max(inner)), float(d[axis] * np.sum(inner))


@dataclass(frozen=True)
class BoundReport:
    """Sup-in-one-variable output norm against the L1 input norm."""

    kind: str
    k: int
    l: int
    lam: float
    beta: float
    sup_norm: float
    l1_norm: float
    ratio: float
    ratio_refined: float | None
    eps: float
    skipped: int
    wrap_fraction: float
    status: str

    @property
    def passed(self) -> bool:
        return self.status == "ok" and self.ratio <= 1.0 + max(self.eps, 0.0) and self.eps <= 0.05

    def row(self) -> dict:
        return {"kind": self.kind, "k": self.k, "l": self.l, "lambda": self.lam, "beta": self.beta,
                "ratio": self.ratio, "ratio_refined": self.ratio_refined, "eps": self.eps,
                "skipped": self.skipped, "wrap_fraction": self.wrap_fraction, "status": self.status}


FieldFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _bound(kind: str, h, grid: Grid3D, lam, beta, k, l, axis, refine, wrap_limit, raise_inconclusive):
    _check_shift(lam, beta)

    def once(g: Grid3D):
        vals = h(*g.mesh()) if callable(h) else np.asarray(h, dtype=float)
        res = apply_T0(g, vals, lam, beta, k, l)
        sup, _ = _mixed_norms(g, res.values, axis)
        _, l1 = _mixed_norms(g, vals, axis)
        wrap = central_mass_fraction(g, vals)
        return sup, l1, res.skipped, wrap

    sup, l1, skipped, wrap = once(grid)
    if l1 == 0.0:
        return BoundReport(kind, k, l, lam, beta, 0.0, 0.0, 0.0, None, 0.0, skipped, 0.0, "vacuous")
    ratio = sup / l1
    ratio_ref = None
    eps = 0.0
    if refine:
        if not callable(h):
            raise ValueError("refinement needs h as a function of (x, y, t)")
        s2, n2, sk2, _ = once(grid.refine(2))
        ratio_ref = s2 / n2
        eps = abs(ratio_ref - ratio) / ratio_ref
        skipped += sk2
    status = "ok" if wrap <= wrap_limit else "inconclusive"
    if status != "ok" and raise_inconclusive:
        raise InconclusiveError(f"input mass fraction {wrap:.3g} outside the central half exceeds {wrap_limit:g}")
    return BoundReport(kind, k, l, float(lam), float(beta), sup, l1, ratio, ratio_ref, eps, skipped, wrap, status)


def check_bound_62(h, grid: Grid3D, lam: float, beta: float, refine: bool = True,
                   wrap_limit: float = 1e-8, raise_inconclusive: bool = False) -> BoundReport:
    """sup_t |T0 h(., ., t)|_{L2_xy} against |h|_{L1_t L2_xy}; h is an array or a function (X, Y, T)."""
    return _bound("bound62", h, grid, lam, beta, 0, 0, 2, refine, wrap_limit, raise_inconclusive)


def check_bound_A4(h, grid: Grid3D, lam: float, beta: float, k: int, l: int, axis: str = "x",
                   refine: bool = True, wrap_limit: float = 1e-8,
                   raise_inconclusive: bool = False) -> BoundReport:
    """sup_x |m_kl h (x, ., .)|_{L2_yt} against |h|_{L1_x L2_yt}; axis="y" swaps the roles of x and y."""
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    if lam < 1 or beta < 1:
        raise ValueError("this bound is stated for lambda >= 1 and beta >= 1")
    return _bound("boundA4", h, grid, lam, beta, k, l, 0 if axis == "x" else 1, refine, wrap_limit,
                  raise_inconclusive)


def gaussian_bump(cx=0.0, cy=0.0, ct=0.0, sx=1.0, sy=1.0, st=1.0, amplitude=1.0) -> FieldFn:
    def fn(X, Y, T):
        return amplitude * np.exp(-((X - cx) ** 2) / (2 * sx**2) - (Y - cy) ** 2 / (2 * sy**2)
                                  - (T - ct) ** 2 / (2 * st**2))
    return fn


def bump_corpus(count: int, seed: int, spread: float = 1.0,
                sigma_range: tuple[float, float] = (0.6, 1.2)) -> list[FieldFn]:
    """Random smooth sums of one to three anisotropic Gaussians near the origin."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        parts = []
        for _ in range(int(rng.integers(1, 4))):
            c = rng.uniform(-spread, spread, size=3)
            s = rng.uniform(*sigma_range, size=3)
            amp = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
            parts.append(gaussian_bump(*c, *s, amplitude=amp))

        def fn(X, Y, T, parts=parts):
            return sum(p(X, Y, T) for p in parts)

        out.append(fn)
    return out
