"""
Weight functions, the decay-rate law, weighted norms and interpolation checks.

All weights depend on (x, y) only through z = x + y and are evaluated in log
space; exp is taken only after combining with log|f|, so wide boxes and large
rates produce either a finite number or a WeightOverflowError, never Inf.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.special import logsumexp, roots_legendre

from .errors import InconclusiveError, WeightOverflowError
from .spectral import Grid2D, RealField, fft2, ifft2

# exp(709.78) is the largest finite double.
LOG_OVERFLOW = 700.0


def decay_rate(t, a0: float):
    """a(t) = a0 / sqrt(1 + 27 a0^2 t / 2), the solution of a' = -(27/4) a^3, a(0) = a0."""
    if not a0 > 0:
        raise ValueError(f"initial rate must be positive, got a0={a0}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("decay_rate is defined for t >= 0")
    out = a0 / np.sqrt(1.0 + 13.5 * a0 * a0 * t)
    return float(out) if out.ndim == 0 else out


def decay_rate_derivative(t, a0: float):
    """Closed-form a'(t) = -(27/4) a(t)^3."""
    a = np.asarray(decay_rate(t, a0))
    out = -6.75 * a**3
    return float(out) if out.ndim == 0 else out


def theta_poly(z):
    """The seam polynomial 1/4 + 15/8 z^3 - 12/8 z^4 + 3/8 z^5 and its first two derivatives."""
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise ValueError("theta_poly is defined on [0, 1]")
    th = 0.25 + z**3 * (15.0 / 8 + z * (-12.0 / 8 + z * 3.0 / 8))
    d1 = z**2 * (45.0 / 8 + z * (-6.0 + z * 15.0 / 8))
    d2 = z * (45.0 / 4 + z * (-18.0 + z * 7.5))
    return th, d1, d2


def theta_second_factored(z):
    """theta'' written as (3/4) z ((sqrt(10) z - 12/sqrt(10))^2 + 3/5), visibly >= 0."""
    z = np.asarray(z, dtype=float)
    r = np.sqrt(10.0)
    return 0.75 * z * ((r * z - 12.0 / r) ** 2 + 0.6)


def theta_third(z):
    z = np.asarray(z, dtype=float)
    return 45.0 / 4 - 36.0 * z + 22.5 * z * z


def p2_taylor(z, t: float, n: float, a0: float, derivative: int = 0):
    """Quadratic Taylor polynomial of exp(a(t) z^{3/2}) about z = n, or its z-derivative."""
    z = np.asarray(z, dtype=float)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if np.any(z < n):
        raise ValueError("p2_taylor is defined for z >= n")
    a = decay_rate(t, a0)
    e = np.exp(a * n**1.5)
    c1 = 1.5 * a * np.sqrt(n) * e
    c2 = ((1.5 * a * np.sqrt(n)) ** 2 + 0.75 * a / np.sqrt(n)) * e
    h = z - n
    if derivative == 0:
        out = e + c1 * h + 0.5 * c2 * h * h
    elif derivative == 1:
        out = c1 + c2 * h
    elif derivative == 2:
        out = c2 + 0.0 * h
    else:
        raise ValueError("only derivatives 0, 1, 2 are available")
    return float(out) if out.ndim == 0 else out


def smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def kato_cutoff(s):
    """Decreasing C-infinity function equal to 1 for s <= 1 and 0 for s >= 10."""
    return 1.0 - smooth_step((np.asarray(s, dtype=float) - 1.0) / 9.0)


_GL_X, _GL_W = roots_legendre(12)


def _smooth_step_integral(u):
    """Integral of smooth_step over [0, u] for u in [0, 1], via panel sums plus a final partial panel."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    m = 256
    edges = np.linspace(0.0, 1.0, m + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 / m
    panel = half * np.sum(_GL_W * smooth_step(mid[:, None] + half * _GL_X), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    k = np.minimum((u * m).astype(int), m - 1)
    lo = edges[k]
    hh = 0.5 * (u - lo)
    part = hh * np.sum(_GL_W * smooth_step((lo + hh)[..., None] + hh[..., None] * _GL_X), axis=-1)
    return cum[k] + part


def kato_theta(x, n: float):
    """theta_n(x) = int_0^x kato_cutoff(x'/n) dx' = n * Theta(x/n)."""
    x = np.asarray(x, dtype=float)
    s = x / n
    u = (np.clip(s, 1.0, 10.0) - 1.0) / 9.0
    big = 1.0 + 9.0 * (u - _smooth_step_integral(u))
    out = n * np.where(s <= 1.0, s, big)
    return float(out) if out.ndim == 0 else out


class WeightKind(str, Enum):
    EXP_ABS = "ExpAbs"
    EXP_PLUS = "ExpPlus"
    EXP_LINEAR = "ExpLinear"
    POLY = "Poly"
    TRUNCATED_PHI_N = "TruncatedPhiN"
    KATO_PHI_N = "KatoPhiN"


@dataclass(frozen=True)
class WeightSpec:
    """A weight w(x, y, t) that depends on space through z = x + y.

    kind            log w(z)
    ExpAbs          a |z|^{3/2}
    ExpPlus         a(t) max(z, 0)^{3/2}
    ExpLinear       2 beta z
    Poly            2 a log(1 + |z|)
    TruncatedPhiN   piecewise: a(t)/4, a(t) theta(z), a(t) z^{3/2}, log P2(z, t)
    KatoPhiN        2 beta theta_n(z)

    The rate is a0/sqrt(1 + 27 a0^2 t/2) when a0 is given, otherwise the fixed a.
    reflect=True evaluates every formula at -z (mirror image through the origin).
    """

    kind: WeightKind
    a: float | None = None
    beta: float | None = None
    n: float | None = None
    a0: float | None = None
    t: float = 0.0
    reflect: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", WeightKind(self.kind))
        k = self.kind
        if k in (WeightKind.EXP_LINEAR, WeightKind.KATO_PHI_N):
            if self.beta is None:
                raise ValueError(f"{k.value} needs beta")
        elif k is WeightKind.TRUNCATED_PHI_N:
            if self.a0 is None or not self.a0 > 0:
                raise ValueError("TruncatedPhiN needs a0 > 0")
        elif self.a is None and self.a0 is None:
            raise ValueError(f"{k.value} needs a or a0")
        if k is WeightKind.POLY and self.a is not None and self.a < 0:
            raise ValueError("Poly exponent must be >= 0")
        if k in (WeightKind.TRUNCATED_PHI_N, WeightKind.KATO_PHI_N):
            if self.n is None or self.n < 1:
                raise ValueError(f"{k.value} needs n >= 1")
        if self.t < 0:
            raise ValueError("t must be >= 0")

    def rate(self, t: float | None = None) -> float:
        t = self.t if t is None else t
        if self.a0 is not None:
            return decay_rate(t, self.a0)
        return float(self.a)

    def log_weight(self, z, t: float | None = None) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.reflect:
            z = -z
        k = self.kind
        if k is WeightKind.EXP_ABS:
            return self.rate(t) * np.abs(z) ** 1.5
        if k is WeightKind.EXP_PLUS:
            return self.rate(t) * np.maximum(z, 0.0) ** 1.5
        if k is WeightKind.EXP_LINEAR:
            return 2.0 * self.beta * z
        if k is WeightKind.POLY:
            return 2.0 * self.rate(t) * np.log1p(np.abs(z))
        if k is WeightKind.KATO_PHI_N:
            return 2.0 * self.beta * kato_theta(z, self.n)
        return self._log_phi_n(z, self.t if t is None else t)

    def _log_phi_n(self, z: np.ndarray, t: float) -> np.ndarray:
        a, n = self.rate(t), self.n
        out = np.full(z.shape, a / 4.0)
        mid = (z > 0) & (z <= 1)
        out[mid] = a * theta_poly(z[mid])[0]
        pw = (z > 1) & (z <= n)
        out[pw] = a * z[pw] ** 1.5
        top = z > n
        out[top] = np.log(p2_taylor(z[top], t, n, self.a0))
        return out

    def dz(self, z, t: float | None = None) -> np.ndarray:
        """Analytic z-derivative of the weight itself (not its log)."""
        z = np.asarray(z, dtype=float)
        if self.reflect:
            return -replace(self, reflect=False).dz(-z, t)
        w = np.exp(self.log_weight(z, t))
        k = self.kind
        if k is WeightKind.EXP_ABS:
            return w * 1.5 * self.rate(t) * np.sign(z) * np.sqrt(np.abs(z))
        if k is WeightKind.EXP_PLUS:
            return w * 1.5 * self.rate(t) * np.sqrt(np.maximum(z, 0.0))
        if k is WeightKind.EXP_LINEAR:
            return w * 2.0 * self.beta
        if k is WeightKind.POLY:
            return w * 2.0 * self.rate(t) * np.sign(z) / (1.0 + np.abs(z))
        if k is WeightKind.KATO_PHI_N:
            return w * 2.0 * self.beta * kato_cutoff(z / self.n)
        tt = self.t if t is None else t
        a, n = self.rate(tt), self.n
        out = np.zeros(z.shape)
        mid = (z > 0) & (z <= 1)
        out[mid] = w[mid] * a * theta_poly(z[mid])[1]
        pw = (z > 1) & (z <= n)
        out[pw] = w[pw] * 1.5 * a * np.sqrt(z[pw])
        top = z > n
        out[top] = p2_taylor(z[top], tt, n, self.a0, derivative=1)
        return out


def eval_weight(spec: WeightSpec, x, y, t: float | None = None) -> np.ndarray:
    return np.exp(spec.log_weight(np.asarray(x, float) + np.asarray(y, float), t))


def window_cutoff(grid: Grid2D, margin: float) -> np.ndarray:
    """Smooth tensor cutoff: 0 in the outer half of a margin (fraction of each side), 1 inside the margin.

    margin = 0 gives the all-ones window.
    """
    if not 0.0 <= margin < 0.5:
        raise ValueError(f"window margin must lie in [0, 0.5), got {margin}")
    if margin == 0.0:
        return np.ones(grid.shape)

    def axis(c, c0, L):
        d = np.minimum(c - c0, c0 + L - c) / L
        return smooth_step((d - 0.5 * margin) / (0.5 * margin))

    return np.outer(axis(grid.x, grid.x0, grid.Lx), axis(grid.y, grid.y0, grid.Ly))


def _corner_name(grid: Grid2D, i: int, j: int) -> str:
    x, y = grid.x[i], grid.y[j]
    cx = grid.x0 + 0.5 * grid.Lx
    cy = grid.y0 + 0.5 * grid.Ly
    vert = "upper" if y >= cy else "lower"
    horiz = "right" if x >= cx else "left"
    return f"{vert}-{horiz} corner (x={x:.4g}, y={y:.4g})"


def _log_abs(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(values))


def weighted_norm(f: RealField, spec: WeightSpec, t: float | None = None,
                  window: float = 0.0) -> float:
    """Riemann sum of f^2 w over the box (the squared weighted L2 norm).

    Computed as exp(log w + 2 log|f|) with underflow flushed to zero.
    Raises WeightOverflowError naming the corner where the integrand overflows.
    """
    g = f.grid
    X, Y = g.mesh()
    logw = spec.log_weight(X + Y, t)
    if window:
        logw = logw + _log_abs(window_cutoff(g, window))
    expo = logw + 2.0 * _log_abs(f.values)
    top = np.max(expo)
    if top > LOG_OVERFLOW:
        i, j = np.unravel_index(np.argmax(expo), expo.shape)
        raise WeightOverflowError(
            f"weighted integrand overflows (log size {top:.1f}) near the {_corner_name(g, i, j)}")
    with np.errstate(under="ignore"):
        vals = np.exp(expo)
    return g.dx * g.dy * float(np.sum(vals))


def weighted_field(f: RealField, log_w: np.ndarray) -> RealField:
    """Pointwise exp(log_w) * f, evaluated in log space."""
    expo = log_w + _log_abs(f.values)
    top = np.max(expo)
    if top > LOG_OVERFLOW:
        i, j = np.unravel_index(np.argmax(expo), expo.shape)
        raise WeightOverflowError(
            f"weighted field overflows (log size {top:.1f}) near the {_corner_name(f.grid, i, j)}")
    with np.errstate(under="ignore"):
        return RealField(f.grid, np.sign(f.values) * np.exp(expo))


def bessel_multiplier(grid: Grid2D, s: float) -> np.ndarray:
    if s < 0:
        raise ValueError(f"smoothness order must be >= 0, got {s}")
    KX, KY = grid.kmesh()
    return (1.0 + KX**2 + KY**2) ** (0.5 * s)


def apply_Js(f: RealField, s: float) -> RealField:
    """Bessel potential J^s: multiply coefficients by (1 + xi^2 + eta^2)^{s/2}."""
    if s < 0:
        raise ValueError(f"smoothness order must be >= 0, got {s}")
    if s == 0:
        return f
    return RealField(f.grid, ifft2(bessel_multiplier(f.grid, s) * fft2(f.values)).real)


def _l2(f: RealField) -> float:
    return float(np.sqrt(f.grid.dx * f.grid.dy * np.sum(f.values**2)))


def edge_mass_fraction(f: RealField, cells: int = 2) -> float:
    """Share of sum f^2 located within `cells` grid cells of the box edge."""
    v2 = f.values**2
    total = float(np.sum(v2))
    if total == 0.0:
        return 0.0
    inner = float(np.sum(v2[cells:-cells, cells:-cells]))
    return (total - inner) / total


class Lemma(str, Enum):
    L26 = "L26"
    L27 = "L27"
    LB1 = "LB1"


@dataclass(frozen=True)
class InterpReport:
    lemma: Lemma
    s: float
    param: float
    theta: float
    lhs: float
    rhs: float
    edge_fraction: float
    status: str
    contamination_limit: float = field(default=1e-8, repr=False)

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else float("inf")

    @property
    def conclusive(self) -> bool:
        return self.status == "ok"


def interp_check(lemma: str | Lemma, f: RealField, s: float, a_or_beta: float, theta: float,
                 contamination_limit: float = 1e-8, raise_inconclusive: bool = False) -> InterpReport:
    """Evaluate LHS and RHS of one of three weighted interpolation inequalities.

    L26: |J^{s(1-th)}(e^{(th a/2)|z|^{3/2}} f)|  vs  |J^s f|^{1-th} |e^{(th a/2)|z|^{3/2}} f|^th
    L27: |J^{th s}((1+|z|)^{(1-th)a} f)|         vs  |J^s f|^th |(1+|z|)^a f|^{1-th}
    LB1: |J^{th s}(e^{(1-th) beta z} f)|          vs  |J^s f|^th |e^{beta z} f|^{1-th}

    with z = x + y. If any weighted function carries more than
    contamination_limit of its mass within two cells of the edge, the
    status is "inconclusive" (or InconclusiveError is raised on request).
    """
    lemma = Lemma(lemma)
    if s < 0:
        raise ValueError("s must be >= 0")
    if lemma is Lemma.L27:
        if not 0.0 < theta < 1.0:
            raise ValueError("L27 needs theta in (0, 1)")
    elif not 0.0 <= theta <= 1.0:
        raise ValueError(f"{lemma.value} needs theta in [0, 1]")
    if a_or_beta < 0:
        raise ValueError("weight parameter must be >= 0")
    g = f.grid
    X, Y = g.mesh()
    Z = X + Y
    p = a_or_beta
    if lemma is Lemma.L26:
        lw = 0.5 * theta * p * np.abs(Z) ** 1.5
        inner = weighted_field(f, lw)
        lhs = _l2(apply_Js(inner, s * (1.0 - theta)))
        weighted = [inner]
        rhs = _l2(apply_Js(f, s)) ** (1.0 - theta) * _l2(inner) ** theta
    elif lemma is Lemma.L27:
        lz = np.log1p(np.abs(Z))
        inner = weighted_field(f, (1.0 - theta) * p * lz)
        full = weighted_field(f, p * lz)
        lhs = _l2(apply_Js(inner, theta * s))
        weighted = [inner, full]
        rhs = _l2(apply_Js(f, s)) ** theta * _l2(full) ** (1.0 - theta)
    else:
        inner = weighted_field(f, (1.0 - theta) * p * Z)
        full = weighted_field(f, p * Z)
        lhs = _l2(apply_Js(inner, theta * s))
        weighted = [inner, full]
        rhs = _l2(apply_Js(f, s)) ** theta * _l2(full) ** (1.0 - theta)
    edge = max(edge_mass_fraction(w) for w in weighted + [f])
    status = "ok" if edge <= contamination_limit else "inconclusive"
    if status != "ok" and raise_inconclusive:
        raise InconclusiveError(
            f"{lemma.value}: weighted mass fraction {edge:.3g} near the edge exceeds {contamination_limit:g}")
    return InterpReport(lemma, float(s), float(p), float(theta), lhs, rhs, edge, status,
                        contamination_limit)


@dataclass(frozen=True)
class MixtureComponent:
    amplitude: float
    cx: float
    cy: float
    sigma: float


def gaussian_mixture_corpus(count: int, seed: int, max_components: int = 3,
                            center_radius: float = 2.0,
                            sigma_range: tuple[float, float] = (0.8, 1.6)) -> list[list[MixtureComponent]]:
    """Reproducible list of Gaussian-mixture descriptions (amplitude, center, width)."""
    rng = np.random.default_rng(seed)
    corpus = []
    for _ in range(count):
        k = int(rng.integers(1, max_components + 1))
        comps = []
        for _ in range(k):
            amp = float(rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0]))
            cx, cy = rng.uniform(-center_radius, center_radius, size=2)
            sig = float(rng.uniform(*sigma_range))
            comps.append(MixtureComponent(amp, float(cx), float(cy), sig))
        corpus.append(comps)
    return corpus


def mixture_field(grid: Grid2D, comps: list[MixtureComponent]) -> RealField:
    X, Y = grid.mesh()
    v = np.zeros(grid.shape)
    for c in comps:
        v += c.amplitude * np.exp(-((X - c.cx) ** 2 + (Y - c.cy) ** 2) / (2.0 * c.sigma**2))
    return RealField(grid, v)


@dataclass(frozen=True)
class CorpusResult:
    ratios: np.ndarray
    statuses: tuple[str, ...]

    @property
    def max_ratio(self) -> float:
        ok = [r for r, s in zip(self.ratios, self.statuses) if s == "ok"]
        return float(max(ok)) if ok else float("nan")

    @property
    def n_inconclusive(self) -> int:
        return sum(s != "ok" for s in self.statuses)


def corpus_interp(lemma: str | Lemma, grid: Grid2D, corpus, s: float, a_or_beta: float,
                  theta: float) -> CorpusResult:
    ratios, statuses = [], []
    for comps in corpus:
        r = interp_check(lemma, mixture_field(grid, comps), s, a_or_beta, theta)
        ratios.append(r.ratio)
        statuses.append(r.status)
    return CorpusResult(np.asarray(ratios), tuple(statuses))


def dominance_constant(a0: float, ns=(4, 8, 16), t: float = 0.0, samples: int = 1000) -> tuple[float, dict]:
    """Measured sup over z in [0, 3n] of phi_n(z, t) / exp(a(t) z^{3/2}), overall and per n."""
    per_n = {}
    for n in ns:
        spec = WeightSpec(WeightKind.TRUNCATED_PHI_N, a0=a0, n=n, t=t)
        z = np.linspace(0.0, 3.0 * n, samples)
        a = spec.rate()
        per_n[n] = float(np.max(np.exp(spec.log_weight(z) - a * z**1.5)))
    return max(per_n.values()), per_n


def margin_fraction(f: RealField, spec: WeightSpec, margin: float, t: float | None = None) -> float:
    """Share of the unwindowed weighted mass f^2 w sitting where the window is below 1.

    Evaluated with a log-sum-exp so it stays finite even when the raw integrand overflows.
    """
    g = f.grid
    X, Y = g.mesh()
    expo = spec.log_weight(X + Y, t) + 2.0 * _log_abs(f.values)
    if not np.any(np.isfinite(expo)):
        return 0.0
    edge = window_cutoff(g, margin) < 1.0
    total = logsumexp(expo[np.isfinite(expo)])
    sel = expo[edge & np.isfinite(expo)]
    if sel.size == 0:
        return 0.0
    return float(np.exp(logsumexp(sel) - total))
