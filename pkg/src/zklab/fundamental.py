"""
Fundamental solution of the linear operator d_t + d_x^3 + d_x d_y^2.

S(x, y) = (1/4 pi^2) ∫∫ exp(i(xi x + eta y)) exp(i(xi^3 + xi eta^2)) dxi deta

Three evaluation routes are provided:

- evaluate_S_direct: brute-force tapered 2D quadrature in polar frequency
  coordinates (Gauss-Legendre in the radius, trapezoid in the angle).
  Slow but independent; used as the oracle.
- evaluate_S_reduced: the eta integral is a Fresnel integral,
      ∫ exp(i eta y + i xi eta^2) deta = sqrt(pi i / xi) exp(-i y^2 / (4 xi)),
  leaving a 1D integral in xi. Both half-lines are rotated into the upper
  half plane, where exp(i xi^3) and exp(-i y^2/(4 xi)) decay, so the
  remaining integrand is smooth and non-oscillatory up to the exp(i x xi)
  factor.
- kernel_table: the scaled kernel t^{-2/3} S(x/t^{1/3}, y/t^{1/3}) sampled on
  a solver grid, mollified in frequency so its box sum is the zero-frequency
  symbol value 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import j0

from .errors import ConvergenceError
from .spectral import Grid2D, RealField, fft2, ifft2

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(q: int) -> tuple[np.ndarray, np.ndarray]:
    if q not in _GL_CACHE:
        _GL_CACHE[q] = leggauss(q)
    return _GL_CACHE[q]


def _panel_nodes(edges: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    gx, gw = _gauss(q)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = (0.5 * (b - a) * gx + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * gw).ravel()
    return nodes, weights


@dataclass(frozen=True)
class SEvalConfig:
    """Quadrature settings for S.

    Args:
        xi_max: frequency radius where the direct oracle's taper reaches zero.
        taper_width: width of the raised-cosine roll-off ending at xi_max.
        n_quad: panel-count parameter; doubling it halves every panel.
        tol: target absolute accuracy of a point value.
        kernel_filter: frequency scale of the smooth filter applied to kernel tables.
    """

    xi_max: float = 10.0
    taper_width: float = 4.0
    n_quad: int = 256
    tol: float = 1e-6
    kernel_filter: float = 2.8

    def __post_init__(self) -> None:
        if not (self.xi_max > self.taper_width > 0):
            raise ValueError(
                f"need xi_max > taper_width > 0, got xi_max={self.xi_max}, taper_width={self.taper_width}"
            )
        if self.n_quad < 256:
            raise ValueError(f"n_quad must be >= 256, got {self.n_quad}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not self.kernel_filter > 0:
            raise ValueError(f"kernel_filter must be positive, got {self.kernel_filter}")

    def refined(self) -> "SEvalConfig":
        return SEvalConfig(self.xi_max, self.taper_width, 2 * self.n_quad, self.tol, self.kernel_filter)


def raised_cosine_taper(r: np.ndarray, xi_max: float, width: float) -> np.ndarray:
    s = np.clip((np.asarray(r, float) - (xi_max - width)) / width, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * s))


# ---------------------------------------------------------------------------
# direct 2D oracle
# ---------------------------------------------------------------------------


def _direct_once(x: float, y: float, cfg: SEvalConfig, refine: int) -> complex:
    X, w = cfg.xi_max, cfg.taper_width
    scale = cfg.n_quad / 256 * refine
    rho = np.hypot(x, y)
    edges = [0.0]
    r = 0.0
    h_cap = X / cfg.n_quad * 256 / scale / 16
    while r < X:
        # panel length <= pi / (radial phase derivative at the far end)
        h = min(h_cap, np.pi / (3.0 * (r + h_cap) ** 2 + rho + 1.0) / scale)
        nr = min(r + h, X)
        if r < X - w < nr:
            nr = X - w
        edges.append(nr)
        r = nr
    rn, rw = _panel_nodes(np.array(edges), 16)
    rw = rw * rn * raised_cosine_taper(rn, X, w)
    total = 0.0 + 0.0j
    block = 256
    for s in range(0, rn.size, block):
        rr = rn[s : s + block]
        ww = rw[s : s + block]
        # angular bandwidth of exp(i (r^3 + r x) cos th + i r y sin th)
        band = rr.max() ** 3 + rr.max() * rho
        nth = int(2 * (band * refine + 32))
        nth += nth % 2
        th = 2.0 * np.pi * np.arange(nth) / nth
        c, sn = np.cos(th), np.sin(th)
        ph = np.outer(rr**3 + rr * x, c) + np.outer(rr * y, sn)
        ang = np.exp(1j * ph).sum(axis=1) * (2.0 * np.pi / nth)
        total += np.dot(ww, ang)
    return complex(total / (4.0 * np.pi**2))


def evaluate_S_direct(x: float, y: float, cfg: SEvalConfig = SEvalConfig()) -> complex:
    """Tapered 2D quadrature of S at one point, returned as a complex number.

    Two resolutions are computed; if they differ by more than 10*tol a
    ConvergenceError is raised, otherwise the finer value is returned.
    """
    coarse = _direct_once(float(x), float(y), cfg, 1)
    fine = _direct_once(float(x), float(y), cfg, 2)
    if abs(fine - coarse) > 10.0 * cfg.tol:
        raise ConvergenceError(
            f"direct quadrature at ({x}, {y}) not converged: |diff| = {abs(fine - coarse):.3e}"
        )
    return fine


# ---------------------------------------------------------------------------
# Fresnel-reduced evaluator
# ---------------------------------------------------------------------------

_RAY_ANGLES = np.pi / np.array([6.0, 8.0, 12.0, 18.0, 30.0, 45.0, 60.0, 90.0, 150.0])
_DECAY_CUT = 40.0  # integrand magnitudes below exp(-40) relative are dropped


def _ray_angle(x: float) -> float:
    """Largest candidate ray angle whose exp(i x xi) growth stays below e^2."""
    if x >= 0:
        return float(_RAY_ANGLES[0])
    for alpha in _RAY_ANGLES:
        A = -x * np.sin(alpha)
        B = np.sin(3 * alpha)
        growth = (2.0 / 3.0) * A * np.sqrt(A / (3 * B))
        if growth <= 2.0:
            return float(alpha)
    return float(_RAY_ANGLES[-1])


def _ray_integral(x: float, y: float, alpha: float, side: int, n_quad: int, q: int = 20) -> complex:
    """∫ over the rotated half-line of sqrt(pi i/xi) exp(i(x xi + xi^3 - y^2/(4 xi))) dxi.

    side=+1 is the rotated positive half-line (0 -> infinity), side=-1 the
    rotated negative one (-infinity -> 0). The substitution rho = s^2 removes
    the rho^{-1/2} endpoint singularity.
    """
    theta = alpha if side > 0 else np.pi - alpha
    e = np.exp(1j * theta)
    sa, s3a = np.sin(alpha), np.sin(3 * alpha)
    xm = max(-x, 0.0)
    rho_max = 1.0
    while rho_max**3 * s3a - xm * rho_max * sa < _DECAY_CUT + 8.0:
        rho_max *= 1.1
    s_max = np.sqrt(rho_max)
    # below rho_low the factor exp(-y^2 sin(alpha)/(4 rho)) is negligible
    rho_low = y * y * sa / (4.0 * (_DECAY_CUT + 8.0))
    s_low = np.sqrt(rho_low)
    # geometric panels shrinking toward the lower end, then subdivided so
    # that the phase changes by at most `budget` per panel
    if s_low > 0.0:
        k = max(1, int(np.ceil(np.log2(s_max / s_low))))
        coarse = np.concatenate([[s_low], s_max * 2.0 ** -np.arange(k - 1, -1, -1, dtype=float)])
        coarse = coarse[coarse >= s_low]
    else:
        coarse = np.concatenate([[0.0], s_max * 2.0 ** -np.arange(40, -1, -1, dtype=float)])
    budget = np.pi * 256.0 / n_quad
    edges = [coarse[0]]
    for a, b in zip(coarse[:-1], coarse[1:]):
        dphi = 2.0 * b * (3.0 * b**4 + abs(x))
        if a > 0.0:
            dphi += y * y / (2.0 * a**3)
        n = int(min(max(1.0, np.ceil(dphi * (b - a) / budget)), 20000))
        edges.extend(np.linspace(a, b, n + 1)[1:])
    s, sw = _panel_nodes(np.asarray(edges), q)
    xi = s * s * e
    with np.errstate(under="ignore"):
        if y != 0.0:
            ph = 1j * (x * xi + xi**3) - 1j * y * y / (4.0 * xi)
        else:
            ph = 1j * (x * xi + xi**3)
        # dxi = 2 s e ds and sqrt(pi i/xi) = sqrt(pi) sqrt(i/e) / s
        amp = 2.0 * e * np.sqrt(np.pi) * np.sqrt(1j / e)
        val = amp * np.dot(sw, np.exp(ph))
    return complex(val) if side > 0 else complex(-val)


def _reduced_once(x: float, y: float, n_quad: int) -> float:
    alpha = _ray_angle(x)
    integral = _ray_integral(x, y, alpha, +1, n_quad)
    # the negative half-line is the complex conjugate, so S = Re(I+)/(2 pi^2)
    return integral.real / (2.0 * np.pi**2)


def evaluate_S_reduced(x: float, y: float, cfg: SEvalConfig = SEvalConfig(), *, check: bool = True) -> float:
    """S(x, y) from the Fresnel-reduced 1D integral (explicitly real form)."""
    x, y = float(x), float(y)
    val = _reduced_once(x, y, cfg.n_quad)
    if check:
        ref = _reduced_once(x, y, 2 * cfg.n_quad)
        if abs(ref - val) > 10.0 * cfg.tol:
            raise ConvergenceError(f"reduced quadrature at ({x}, {y}) not converged: |diff| = {abs(ref - val):.3e}")
        val = ref
    return val


def evaluate_S_halflines(x: float, y: float, cfg: SEvalConfig = SEvalConfig()) -> complex:
    """Naive complex evaluation: the two half-lines integrated separately and summed."""
    alpha = _ray_angle(float(x))
    total = _ray_integral(x, y, alpha, +1, cfg.n_quad) + _ray_integral(x, y, alpha, -1, cfg.n_quad)
    return total / (4.0 * np.pi**2)


def evaluate_S_many(xs, ys, cfg: SEvalConfig = SEvalConfig(), *, check: bool = False) -> np.ndarray:
    xs, ys = np.broadcast_arrays(np.asarray(xs, float), np.asarray(ys, float))
    out = np.empty(xs.shape)
    for idx in np.ndindex(xs.shape):
        out[idx] = evaluate_S_reduced(xs[idx], ys[idx], cfg, check=check)
    return out


# ---------------------------------------------------------------------------
# decay verification
# ---------------------------------------------------------------------------

NOISE_FLOOR = 1e-12


@dataclass(frozen=True)
class DecayFitReport:
    c0_hat: float
    r2: float
    x_range: tuple[float, float]
    max_residual: float
    intercept: float = 0.0
    r2_linear: float = float("nan")
    samples: tuple = field(default=(), repr=False)
    passed: bool = False

    def __post_init__(self) -> None:
        if not self.x_range[0] < self.x_range[1]:
            raise ValueError(f"empty fit range {self.x_range}")

    def rows(self) -> list[tuple[float, float, float]]:
        """(x, |S(x,0)|, fitted |S|) per retained sample."""
        return [(x, s, float(np.exp(self.intercept - self.c0_hat * x**1.5))) for x, s in self.samples]


def _r2(yv: np.ndarray, fit: np.ndarray) -> float:
    ss_res = float(np.sum((yv - fit) ** 2))
    ss_tot = float(np.sum((yv - yv.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0


def verify_x_decay(x_lo: float, x_hi: float, n: int = 41, cfg: SEvalConfig = SEvalConfig()) -> DecayFitReport:
    """Fit log|S(x,0)| = c - c0 x^{3/2} by least squares on [x_lo, x_hi]."""
    if not (1.0 <= x_lo < x_hi):
        raise ValueError(f"need 1 <= x_lo < x_hi, got [{x_lo}, {x_hi}]")
    xs = np.linspace(x_lo, x_hi, n)
    vals = np.abs(np.array([evaluate_S_reduced(x, 0.0, cfg, check=False) for x in xs]))
    keep = vals > NOISE_FLOOR
    xs, vals = xs[keep], vals[keep]
    if xs.size < 5:
        return DecayFitReport(float("nan"), 0.0, (x_lo, x_hi), float("inf"), passed=False)
    logs = np.log(vals)
    slope, intercept = np.polyfit(xs**1.5, logs, 1)
    fit = intercept + slope * xs**1.5
    lin = np.polyval(np.polyfit(xs, logs, 1), xs)
    c0 = -float(slope)
    r2 = _r2(logs, fit)
    return DecayFitReport(
        c0_hat=c0,
        r2=max(0.0, min(1.0, r2)),
        x_range=(float(x_lo), float(x_hi)),
        max_residual=float(np.max(np.abs(logs - fit))),
        intercept=float(intercept),
        r2_linear=max(0.0, min(1.0, _r2(logs, lin))),
        samples=tuple(zip(xs.tolist(), vals.tolist())),
        passed=bool(c0 > 0 and r2 >= 0.99),
    )


@dataclass(frozen=True)
class YDecayReport:
    m: int
    x_fixed: float
    y_max: float
    sup: float
    y_at_sup: float
    interior: bool
    status: str  # "pass" or "inconclusive"


def verify_y_decay(m: int, x_fixed: float, y_max: float, cfg: SEvalConfig = SEvalConfig(), n: int = 401) -> YDecayReport:
    """Sup over sampled |y| <= y_max of (1+|y|)^m |S(x_fixed, y)|; must be interior."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    ys = np.linspace(-y_max, y_max, n)
    vals = np.array([evaluate_S_reduced(x_fixed, y, cfg, check=False) for y in ys])
    weighted = (1.0 + np.abs(ys)) ** m * np.abs(vals)
    i = int(np.argmax(weighted))
    interior = bool(abs(ys[i]) < 0.95 * y_max and np.isfinite(weighted[i]))
    return YDecayReport(m, float(x_fixed), float(y_max), float(weighted[i]), float(ys[i]), interior,
                        "pass" if interior else "inconclusive")


# ---------------------------------------------------------------------------
# convolution propagator
# ---------------------------------------------------------------------------


def kernel_filter(r: np.ndarray, kappa: float) -> np.ndarray:
    """Smooth radial frequency filter exp(-(r/kappa)^16); 1 - O((r/kappa)^16) inside."""
    return np.exp(-((np.asarray(r, float) / kappa) ** 16))


def kernel_table(grid: Grid2D, t: float, cfg: SEvalConfig = SEvalConfig()) -> np.ndarray:
    """Samples of the filtered kernel K_t = F^{-1}[filter * exp(i t m)] at grid offsets.

    Entry [i, j] holds K_t(i dx, j dy) with indices in FFT (signed) order, so
    a circular convolution with it is dx*dy*ifft(fft(K) fft(u)). The angular
    frequency integral is done in closed form (Bessel J0), leaving a radial
    Gauss-Legendre quadrature:
        K_t(x, y) = (1/2 pi) ∫ r filter(r) J0(r |(x + t r^2, y)|) dr.
    For t -> 0 this is an approximate identity; as a function of (x, y) it
    equals t^{-2/3} S(x/t^{1/3}, y/t^{1/3}) mollified at frequency scale kappa.
    """
    if not t > 0:
        raise ValueError(f"kernel requires t > 0 (Heaviside factor vanishes), got t={t}")
    kappa = cfg.kernel_filter
    r_end = 1.35 * kappa
    ox = grid.dx * np.fft.fftfreq(grid.nx, 1.0 / grid.nx)
    oy_half = grid.dy * np.arange(grid.ny // 2 + 1)
    OX, OY = np.meshgrid(ox, oy_half, indexing="ij")
    rho = float(np.hypot(np.abs(ox).max(), oy_half.max()))
    scale = cfg.n_quad / 256
    edges = [0.0]
    r = 0.0
    while r < r_end:
        h = min(0.25, np.pi / (rho + 3.0 * t * (r + 0.25) ** 2 + 1.0)) / scale
        r = min(r + h, r_end)
        edges.append(r)
    rn, rw = _panel_nodes(np.array(edges), 16)
    rw = rw * rn * kernel_filter(rn, kappa)
    K = np.zeros(OX.shape)
    OY2 = OY * OY
    for ri, wi in zip(rn, rw):
        K += wi * j0(ri * np.sqrt((OX + t * ri * ri) ** 2 + OY2))
    K /= 2.0 * np.pi
    full = np.empty(grid.shape)
    full[:, : grid.ny // 2 + 1] = K
    # S is even in y: fill negative offsets by reflection
    full[:, grid.ny // 2 + 1 :] = K[:, 1 : grid.ny // 2][:, ::-1]
    return full


def linear_solution_via_convolution(u0: RealField, t: float, cfg: SEvalConfig = SEvalConfig(),
                                    kernel: np.ndarray | None = None) -> RealField:
    """u(t) = K_t * u0 computed in coefficient space."""
    if not t > 0:
        raise ValueError(f"t must be positive (Heaviside factor vanishes for t <= 0), got t={t}")
    g = u0.grid
    v = u0.values
    peak = np.abs(v).max()
    edge = max(np.abs(v[0, :]).max(), np.abs(v[-1, :]).max(), np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max())
    if peak > 0 and edge > 1e-10 * peak:
        raise ValueError(f"u0 does not decay at the box edge (edge/peak = {edge / peak:.2e})")
    K = kernel_table(g, t, cfg) if kernel is None else kernel
    out = ifft2(fft2(K) * fft2(v)).real * (g.dx * g.dy)
    return RealField(g, out)
