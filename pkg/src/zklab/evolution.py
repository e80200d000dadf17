"""
Linear propagators and the pseudo-spectral ZK solver.

Asymmetric form:  u_t + u_xxx + u_xyy + u u_x = 0,            m = xi^3 + xi eta^2
Symmetric form:   u_t + u_xxx + u_yyy + 4^{-1/3} u (u_x + u_y) = 0,  m = xi^3 + eta^3

In coefficient space u_t = i m u + N(u), so the linear propagator is
multiplication by exp(i t m). The nonlinear solver is integrating-factor RK4
(Lawson form) with the quadratic term written in divergence form and
dealiased by the 2/3 rule at every evaluation.

The rotation/scaling x' = mu x + lam y, y' = mu x - lam y with mu = 4^{-1/3},
lam = sqrt(3) mu maps solutions of the asymmetric equation to solutions of the
symmetric one.
"""

from __future__ import annotations

import csv
import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import BlowUpError, CFLError
from .spectral import (
    Grid2D,
    RealField,
    dealias_mask,
    derivative_multiplier,
    derivative,
    evaluate_at,
    fft2,
    forward_transform,
    get_threads,
    ifft2,
    integrate,
)

MU = 4.0 ** (-1.0 / 3.0)
LAM = np.sqrt(3.0) * MU
NONLINEAR_SYM = 4.0 ** (-1.0 / 3.0)


class DispersionSymbol(enum.Enum):
    ASYMMETRIC = "asymmetric"
    SYMMETRIC = "symmetric"

    def __call__(self, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
        if self is DispersionSymbol.ASYMMETRIC:
            return kx**3 + kx * ky**2
        return kx**3 + ky**3

    def on_grid(self, kx: np.ndarray, ky: np.ndarray, kx_nyq: float | None, ky_nyq: float | None) -> np.ndarray:
        """Discrete symbol with Nyquist wavenumbers dropped from odd powers.

        Every term is odd in the wavenumber it differentiates an odd number of
        times, so zeroing those Nyquist entries keeps real fields real while
        |exp(i t m)| = 1 still holds on every mode.
        """
        kxo = np.where(np.isclose(np.abs(kx), abs(kx_nyq)), 0.0, kx) if kx_nyq is not None else kx
        kyo = np.where(np.isclose(np.abs(ky), abs(ky_nyq)), 0.0, ky) if ky_nyq is not None else ky
        if self is DispersionSymbol.ASYMMETRIC:
            return kxo**3 + kxo * ky**2
        return kxo**3 + kyo**3


def grid_symbol(grid: Grid2D, sym: DispersionSymbol) -> np.ndarray:
    KX, KY = grid.kmesh()
    return sym.on_grid(KX, KY, np.pi / grid.dx, np.pi / grid.dy)


def linear_propagate(u0: RealField, t: float, sym: DispersionSymbol) -> RealField:
    """Exact linear evolution: coefficients multiplied by exp(i t m)."""
    if t == 0:
        return u0
    g = u0.grid
    phase = np.exp(1j * t * grid_symbol(g, sym))
    return RealField(g, ifft2(fft2(u0.values) * phase).real)


# ---------------------------------------------------------------------------
# nonlinear solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping parameters.

    Args:
        dt: maximal time step; the solver shortens it to land on snapshot times.
        t_end: final time in (0, 1].
        dealias_fraction: cutoff ratio of the square dealiasing mask.
        nonlinear_form: "asymmetric" (u u_x), "symmetric" (4^{-1/3} u (u_x+u_y))
            or "none" for a purely linear run; None picks the form matching the symbol.
        n_snapshots: number of stored snapshots including t = 0 and t_end.
        store_every_step: store every step as a snapshot (overrides n_snapshots).
        cfl_safety: factor in dt <= cfl_safety / max|m| over the dealiased grid.
        blowup_factor: abort when the L2 norm grows by more than this factor.
    """

    dt: float
    t_end: float = 1.0
    dealias_fraction: float = 2.0 / 3.0
    nonlinear_form: str | None = None
    n_snapshots: int = 11
    store_every_step: bool = False
    cfl_safety: float = 1.0
    blowup_factor: float = 1e3

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.t_end <= 1:
            raise ValueError(f"t_end must lie in (0, 1], got {self.t_end}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.nonlinear_form not in (None, "asymmetric", "symmetric", "none"):
            raise ValueError(f"unknown nonlinear_form {self.nonlinear_form!r}")
        if self.n_snapshots < 2:
            raise ValueError("n_snapshots must be >= 2")


def max_symbol(grid: Grid2D, sym: DispersionSymbol, dealias_fraction: float = 2.0 / 3.0) -> float:
    KX, KY = grid.kmesh()
    mask = dealias_mask(grid, dealias_fraction)
    return float(np.abs(sym(KX, KY))[mask].max())


def cfl_dt(grid: Grid2D, sym: DispersionSymbol, dealias_fraction: float = 2.0 / 3.0, safety: float = 1.0) -> float:
    """Largest step allowed by dt <= safety / max|m|."""
    return safety / max_symbol(grid, sym, dealias_fraction)


def check_cfl(grid: Grid2D, cfg: SolverConfig, sym: DispersionSymbol) -> None:
    limit = cfl_dt(grid, sym, cfg.dealias_fraction, cfg.cfl_safety)
    if cfg.dt > limit * (1 + 1e-12):
        raise CFLError(f"dt = {cfg.dt:.4g} exceeds the CFL limit {limit:.4g} for {sym.value} on {grid.shape}")


@dataclass
class Trajectory:
    grid: Grid2D
    times: list[float] = field(default_factory=list)
    snapshots: list[RealField] = field(default_factory=list)
    diag_t: list[float] = field(default_factory=list)
    diag_mass: list[float] = field(default_factory=list)
    diag_l2: list[float] = field(default_factory=list)
    dt_used: float = 0.0

    def append(self, t: float, f: RealField) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must be strictly increasing")
        self.times.append(float(t))
        self.snapshots.append(f)

    def at(self, t: float) -> RealField:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > 1e-12:
            raise KeyError(f"no snapshot at t = {t}")
        return self.snapshots[i]

    def max_mass_drift(self) -> float:
        m = np.asarray(self.diag_mass)
        ref = max(abs(m[0]), np.sqrt(self.grid.dx * self.grid.dy) * 1e-300)
        return float(np.max(np.abs(m - m[0])) / ref)

    def max_l2_drift(self) -> float:
        n = np.asarray(self.diag_l2)
        if n[0] == 0:
            return float(np.max(n))
        return float(np.max(np.abs(n - n[0])) / n[0])

    def export_binary(self, path: str | Path, index: int) -> None:
        """Header (nx, ny as int64; Lx, Ly, t as float64) then row-major doubles."""
        g = self.grid
        with open(path, "wb") as fh:
            fh.write(struct.pack("<qqddd", g.nx, g.ny, g.Lx, g.Ly, self.times[index]))
            fh.write(np.ascontiguousarray(self.snapshots[index].values, dtype="<f8").tobytes())

    def export_diagnostics_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mass", "l2"])
            for row in zip(self.diag_t, self.diag_mass, self.diag_l2):
                w.writerow([repr(float(v)) for v in row])


def read_binary_snapshot(path: str | Path) -> tuple[Grid2D, float, np.ndarray]:
    raw = Path(path).read_bytes()
    nx, ny, Lx, Ly, t = struct.unpack("<qqddd", raw[:40])
    vals = np.frombuffer(raw[40:], dtype="<f8").reshape(nx, ny)
    return Grid2D(nx, ny, Lx, Ly), t, vals


class _RHS:
    """Dealiased nonlinear term in rfft layout (axis 1 halved)."""

    def __init__(self, grid: Grid2D, form: str, fraction: float):
        self.grid = grid
        kx = grid.kx
        ky = 2.0 * np.pi * np.fft.rfftfreq(grid.ny, d=grid.dy)
        KX, KY = np.meshgrid(kx, ky, indexing="ij")
        j = np.fft.fftfreq(grid.nx, 1.0 / grid.nx)
        k = np.fft.rfftfreq(grid.ny, 1.0 / grid.ny)
        J, K = np.meshgrid(j, k, indexing="ij")
        self.mask = (np.abs(J) <= fraction * grid.nx / 2) & (np.abs(K) <= fraction * grid.ny / 2)
        dx_mult = 1j * KX
        dy_mult = 1j * KY
        dx_mult[grid.nx // 2, :] = 0.0
        dy_mult[:, -1] = 0.0
        if form == "asymmetric":
            mult = -0.5 * dx_mult
        elif form == "symmetric":
            mult = -0.5 * NONLINEAR_SYM * (dx_mult + dy_mult)
        else:
            mult = None
        self.mult = None if mult is None else mult * self.mask
        self.KX, self.KY = KX, KY

    def __call__(self, uh: np.ndarray) -> np.ndarray:
        if self.mult is None:
            return np.zeros_like(uh)
        w = get_threads()
        u = sfft.irfft2(uh, s=self.grid.shape, workers=w)
        return self.mult * sfft.rfft2(u * u, workers=w)


def _diag(grid: Grid2D, uh: np.ndarray) -> tuple[float, float]:
    n = grid.nx * grid.ny
    mass = grid.dx * grid.dy * uh[0, 0].real
    wts = np.full(uh.shape[1], 2.0)
    wts[0] = 1.0
    wts[-1] = 1.0
    energy = grid.dx * grid.dy / n * float(np.sum(np.abs(uh) ** 2 * wts[None, :]))
    return float(mass), float(np.sqrt(energy))


def _linear_trajectory(u0: RealField, cfg: SolverConfig, sym: DispersionSymbol) -> Trajectory:
    """Snapshots of the exact linear flow of the dealiased datum; no time step is involved."""
    grid = u0.grid
    rhs = _RHS(grid, "none", cfg.dealias_fraction)
    L = 1j * sym.on_grid(rhs.KX, rhs.KY, np.pi / grid.dx, np.pi / grid.dy)
    uh0 = sfft.rfft2(u0.values, workers=get_threads()) * rhs.mask
    traj = Trajectory(grid)
    for t in np.linspace(0.0, cfg.t_end, cfg.n_snapshots):
        uh = uh0 if t == 0 else np.exp(L * t) * uh0
        mass, l2 = _diag(grid, uh)
        traj.diag_t.append(float(t))
        traj.diag_mass.append(mass)
        traj.diag_l2.append(l2)
        traj.append(float(t), RealField(grid, sfft.irfft2(uh, s=grid.shape, workers=get_threads())))
    return traj


def zk_solve(u0: RealField, cfg: SolverConfig, sym: DispersionSymbol) -> Trajectory:
    """Integrating-factor RK4 trajectory of the ZK equation for the given symbol.

    With nonlinear_form="none" (and snapshots only) the linear flow is applied
    exactly at each snapshot time, so no CFL restriction applies.
    """
    grid = u0.grid
    form = cfg.nonlinear_form or sym.value
    if form == "none" and not cfg.store_every_step:
        return _linear_trajectory(u0, cfg, sym)
    check_cfl(grid, cfg, sym)
    rhs = _RHS(grid, form, cfg.dealias_fraction)
    L = 1j * sym.on_grid(rhs.KX, rhs.KY, np.pi / grid.dx, np.pi / grid.dy)
    # keep the initial datum inside the dealiased band so the scheme is a Galerkin method
    uh = sfft.rfft2(u0.values, workers=get_threads()) * rhs.mask
    traj = Trajectory(grid)
    if cfg.store_every_step:
        n_steps = int(np.ceil(cfg.t_end / cfg.dt - 1e-12))
        out_times = np.linspace(0.0, cfg.t_end, n_steps + 1)
    else:
        out_times = np.linspace(0.0, cfg.t_end, cfg.n_snapshots)
    t = 0.0
    traj.append(0.0, RealField(grid, sfft.irfft2(uh, s=grid.shape)))
    m0, l0 = _diag(grid, uh)
    traj.diag_t.append(0.0)
    traj.diag_mass.append(m0)
    traj.diag_l2.append(l0)
    cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    for t_next in out_times[1:]:
        interval = t_next - t
        steps = max(1, int(np.ceil(interval / cfg.dt - 1e-9)))
        h = interval / steps
        traj.dt_used = max(traj.dt_used, h)
        key = round(h, 15)
        if key not in cache:
            cache[key] = (np.exp(L * h), np.exp(L * h / 2))
        E, E2 = cache[key]
        for s in range(steps):
            k1 = rhs(uh)
            k2 = rhs(E2 * (uh + 0.5 * h * k1))
            k3 = rhs(E2 * uh + 0.5 * h * k2)
            k4 = rhs(E * uh + h * (E2 * k3))
            uh = E * uh + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
            tt = t + (s + 1) * h if s + 1 < steps else t_next
            mass, l2 = _diag(grid, uh)
            if not np.isfinite(l2) or (l0 > 0 and l2 > cfg.blowup_factor * l0):
                last = traj.diag_t[-1]
                raise BlowUpError(f"norm blow-up or NaN after t = {last:.6g}", last)
            traj.diag_t.append(float(tt))
            traj.diag_mass.append(mass)
            traj.diag_l2.append(l2)
        t = t_next
        traj.append(float(t), RealField(grid, sfft.irfft2(uh, s=grid.shape, workers=get_threads())))
    return traj


# ---------------------------------------------------------------------------
# symmetrizing change of variables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoordinateMap:
    mu: float = MU
    lam: float = LAM

    def to_symmetric(self, x, y):
        """(x, y) -> (x', y') = (mu x + lam y, mu x - lam y)."""
        return self.mu * x + self.lam * y, self.mu * x - self.lam * y

    def to_asymmetric(self, xp, yp):
        """(x', y') -> (x, y) = ((x'+y')/(2 mu), (x'-y')/(2 lam))."""
        return (xp + yp) / (2.0 * self.mu), (xp - yp) / (2.0 * self.lam)

    @property
    def jacobian(self) -> float:
        """dx dy = jacobian * dx' dy'."""
        return 1.0 / (2.0 * self.lam * self.mu)


def map_to_symmetric(x, y):
    return CoordinateMap().to_symmetric(x, y)


def map_to_asymmetric(xp, yp):
    return CoordinateMap().to_asymmetric(xp, yp)


def transport_weight_rate(a: float) -> float:
    """Decay rate after the change of variables: a / (2 mu)^{3/2}."""
    if not a > 0:
        raise ValueError(f"decay rate must be positive, got {a}")
    return a / (2.0 * MU) ** 1.5


def weight_transport_identity(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a: float,
    grid: Grid2D,
    grid_p: Grid2D,
) -> tuple[float, float]:
    """Both sides of ∫ e^{a|x|^{3/2}} f^2 dxdy = J ∫ e^{ã|x'+y'|^{3/2}} f̃^2 dx'dy'.

    f is evaluated natively in each frame (f̃(x',y') = f(x(x',y'), y(x',y'))).
    """
    cm = CoordinateMap()
    X, Y = grid.mesh()
    lhs = integrate(RealField(grid, np.exp(a * np.abs(X) ** 1.5) * f(X, Y) ** 2))
    XP, YP = grid_p.mesh()
    xa, ya = cm.to_asymmetric(XP, YP)
    at = transport_weight_rate(a)
    rhs = cm.jacobian * integrate(RealField(grid_p, np.exp(at * np.abs(XP + YP) ** 1.5) * f(xa, ya) ** 2))
    return lhs, rhs


@dataclass(frozen=True)
class EquivalenceReport:
    rel_l2_diff: float
    norm_asym: float
    norm_sym_scaled: float
    n_points: int
    tolerance: float
    passed: bool
    interpolation_dominated: bool = False


def solve_equivalence_check(
    u0: Callable[[np.ndarray, np.ndarray], np.ndarray],
    grid_asym: Grid2D,
    grid_sym: Grid2D,
    cfg: SolverConfig,
    tolerance: float = 1e-3,
    interior: float = 0.9,
    refine_check: bool = False,
) -> EquivalenceReport:
    """Evolve u0 under the asymmetric equation and its mapped datum under the
    symmetric one, then compare at t_end on the symmetric grid.

    The asymmetric snapshot is sampled at the exactly mapped coordinates by
    trigonometric interpolation. Only symmetric-grid points whose preimage
    lies inside the central `interior` fraction of the asymmetric box are used.
    """
    cm = CoordinateMap()
    ua0 = RealField.from_function(grid_asym, u0)
    XP, YP = grid_sym.mesh()
    xa, ya = cm.to_asymmetric(XP, YP)
    us0 = RealField(grid_sym, u0(xa, ya))
    dt = min(cfg.dt, cfl_dt(grid_asym, DispersionSymbol.ASYMMETRIC, cfg.dealias_fraction, cfg.cfl_safety),
             cfl_dt(grid_sym, DispersionSymbol.SYMMETRIC, cfg.dealias_fraction, cfg.cfl_safety))
    run = SolverConfig(dt=dt, t_end=cfg.t_end, dealias_fraction=cfg.dealias_fraction,
                       nonlinear_form=None if cfg.nonlinear_form != "none" else "none",
                       n_snapshots=2, cfl_safety=cfg.cfl_safety)
    ta = zk_solve(ua0, run, DispersionSymbol.ASYMMETRIC)
    ts = zk_solve(us0, run, DispersionSymbol.SYMMETRIC)
    fa = ta.snapshots[-1]
    fs = ts.snapshots[-1]
    cx = grid_asym.x0 + grid_asym.Lx / 2
    cy = grid_asym.y0 + grid_asym.Ly / 2
    inside = (np.abs(xa - cx) <= interior * grid_asym.Lx / 2) & (np.abs(ya - cy) <= interior * grid_asym.Ly / 2)
    sampled = evaluate_at(forward_transform(fa), xa[inside], ya[inside])
    ref = fs.values[inside]
    denom = np.linalg.norm(ref)
    diff = np.linalg.norm(sampled - ref)
    rel = float(diff / denom) if denom > 0 else float(diff)
    n_a = float(np.sqrt(integrate(RealField(grid_asym, fa.values**2))))
    n_s = float(np.sqrt(cm.jacobian * integrate(RealField(grid_sym, fs.values**2))))
    flagged = False
    if refine_check and rel > tolerance:
        finer = solve_equivalence_check(u0, grid_asym.refine(), grid_sym.refine(), cfg, tolerance, interior)
        flagged = finer.rel_l2_diff > 0.5 * rel
    return EquivalenceReport(rel, n_a, n_s, int(inside.sum()), tolerance, bool(rel <= tolerance), flagged)


# ---------------------------------------------------------------------------
# difference equation
# ---------------------------------------------------------------------------


def difference_coefficients(u1: RealField, u2: RealField) -> tuple[RealField, RealField]:
    """(a0, a1) with a1 = 4^{-1/3} u1 and a0 = 4^{-1/3} (d_x + d_y) u2."""
    u1.grid.require_same(u2.grid)
    a1 = u1.scale(NONLINEAR_SYM)
    grad = derivative(u2, 1, 0) + derivative(u2, 0, 1)
    a0 = grad.scale(NONLINEAR_SYM)
    return a0, a1


def difference_residual(traj1: Trajectory, traj2: Trajectory,
                        dealias_fraction: float = 2.0 / 3.0) -> tuple[np.ndarray, np.ndarray, float]:
    """L2 norm of v_t + (d_x^3+d_y^3) v + a1 (d_x+d_y) v + a0 v at interior snapshots.

    Requires equally spaced snapshots (store_every_step); v_t uses the
    fourth-order five-point central difference. Also returns the spectral
    tail: the largest L2 norm of the part of the nonlinear difference that the
    dealiasing mask removes, which bounds what the residual can resolve.
    Returns (times, residuals, tail).
    """
    times = np.asarray(traj1.times)
    if len(times) != len(traj2.times) or np.any(np.abs(times - np.asarray(traj2.times)) > 1e-14):
        raise ValueError("trajectories must share snapshot times")
    traj1.grid.require_same(traj2.grid)
    h = np.diff(times)
    if np.max(np.abs(h - h[0])) > 1e-12 * max(1.0, h[0]):
        raise ValueError("snapshots must be equally spaced")
    h = h[0]
    grid = traj1.grid
    lin = derivative_multiplier(grid, 3, 0) + derivative_multiplier(grid, 0, 3)
    dsum = derivative_multiplier(grid, 1, 0) + derivative_multiplier(grid, 0, 1)
    outside = ~dealias_mask(grid, dealias_fraction)
    v = [a.values - b.values for a, b in zip(traj1.snapshots, traj2.snapshots)]
    out_t, out_r = [], []
    tail = 0.0
    for i in range(2, len(v) - 2):
        vt = (v[i - 2] - 8 * v[i - 1] + 8 * v[i + 1] - v[i + 2]) / (12.0 * h)
        vh = fft2(v[i])
        a0, a1 = difference_coefficients(traj1.snapshots[i], traj2.snapshots[i])
        res = vt + ifft2(lin * vh).real + a1.values * ifft2(dsum * vh).real + a0.values * v[i]
        out_t.append(times[i])
        out_r.append(np.sqrt(grid.dx * grid.dy * np.sum(res**2)))
        u1, u2 = traj1.snapshots[i].values, traj2.snapshots[i].values
        nl = NONLINEAR_SYM * 0.5 * dsum * fft2(u1 * u1 - u2 * u2)
        cut = ifft2(np.where(outside, nl, 0.0)).real
        tail = max(tail, float(np.sqrt(grid.dx * grid.dy * np.sum(cut**2))))
    return np.asarray(out_t), np.asarray(out_r), tail
