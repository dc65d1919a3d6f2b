"""First-order finite-volume benchmark driven by the exact fields.

A minimal solver for the 2D isentropic system in conservative form,

    U = (rho, rho u1, rho u2),
    F_x = (rho u1, rho u1^2 + p, rho u1 u2),
    F_y = (rho u2, rho u1 u2, rho u2^2 + p),      p = K rho^gamma,

on a uniform Cartesian grid: dimension-by-dimension Rusanov (local
Lax-Friedrichs) fluxes with wave speed |u| + c, c = sqrt(gamma K rho^(gamma-1)),
forward-Euler time stepping at a CFL fraction of dx / max(|u| + c), and a
one-cell ghost ring.  Ghost cells are refreshed from the exact solution each
step (time-dependent Dirichlet), so interior error isolates the scheme.

The intended use is convergence studies against the exact solutions: a
first-order scheme on a smooth exact field must show L1 errors shrinking at
order ~ 1 under mesh doubling, which ``run_and_compare`` tabulates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .emden import Trajectory
from .errors import BoxOutsideSupport, NonFiniteState
from .fields import SolutionParams, eval_flow_arrays, support_s_bound

__all__ = ["FvConfig", "ConservativeField", "ErrorReport", "init_from_exact",
           "step", "run", "run_and_compare"]


@dataclass(frozen=True)
class FvConfig:
    """Box, resolution and stepping controls for one benchmark run."""

    x_lo: float = -1.0
    x_hi: float = 1.0
    y_lo: float = -1.0
    y_hi: float = 1.0
    nx: int = 64
    ny: int = 64
    cfl: float = 0.4
    rho_floor: float = 1e-12
    t0: float = 0.0
    t_end: float = 0.2
    boundary: str = "exact"   # "exact" (Dirichlet from the exact field) | "outflow"
    support_margin: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("CFL must lie in (0, 1)")
        if self.nx < 16 or self.ny < 16:
            raise ValueError("resolution must be at least 16 cells per axis")
        if self.boundary not in ("exact", "outflow"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_hi - self.y_lo) / self.ny

    def centers(self):
        """Cell-center coordinate arrays including the ghost ring."""
        xs = self.x_lo + (np.arange(self.nx + 2) - 0.5) * self.dx
        ys = self.y_lo + (np.arange(self.ny + 2) - 0.5) * self.dy
        return np.meshgrid(xs, ys, indexing="ij")


class ConservativeField:
    """Cell data (rho, rho u1, rho u2) with a one-cell ghost ring."""

    def __init__(self, cfg: FvConfig, rho, m1, m2, t: float):
        self.cfg = cfg
        self.rho = np.asarray(rho, dtype=float)
        self.m1 = np.asarray(m1, dtype=float)
        self.m2 = np.asarray(m2, dtype=float)
        self.t = float(t)
        self.floor_events = 0
        expected = (cfg.nx + 2, cfg.ny + 2)
        if self.rho.shape != expected:
            raise ValueError(f"expected padded shape {expected}, got {self.rho.shape}")

    @classmethod
    def from_primitive(cls, cfg: FvConfig, rho, u1, u2, t: float = 0.0):
        rho = np.asarray(rho, dtype=float)
        return cls(cfg, rho, rho * np.asarray(u1, float), rho * np.asarray(u2, float), t)

    def interior(self):
        """Views of the interior cells (no ghosts)."""
        sl = (slice(1, -1), slice(1, -1))
        return self.rho[sl], self.m1[sl], self.m2[sl]

    def copy(self):
        out = ConservativeField(self.cfg, self.rho.copy(), self.m1.copy(),
                                self.m2.copy(), self.t)
        out.floor_events = self.floor_events
        return out


def _sound_speed(rho, params: SolutionParams):
    return np.sqrt(params.gamma * params.K * rho ** (params.gamma - 1.0))


def _flux_x(rho, m1, m2, params):
    u = m1 / rho
    p = params.K * rho ** params.gamma
    return m1, m1 * u + p, m2 * u


def _flux_y(rho, m1, m2, params):
    v = m2 / rho
    p = params.K * rho ** params.gamma
    return m2, m1 * v, m2 * v + p


def _fill_ghosts(field: ConservativeField, params, traj, t: float):
    cfg = field.cfg
    if cfg.boundary == "outflow":
        for q in (field.rho, field.m1, field.m2):
            q[0, :] = q[1, :]
            q[-1, :] = q[-2, :]
            q[:, 0] = q[:, 1]
            q[:, -1] = q[:, -2]
        return
    if traj is None:
        raise ValueError("exact-Dirichlet boundaries need the scale trajectory")
    xg, yg = cfg.centers()
    state = traj.state_at(t)
    ring = np.zeros_like(xg, dtype=bool)
    ring[0, :] = ring[-1, :] = True
    ring[:, 0] = ring[:, -1] = True
    rho, u1, u2, _ = eval_flow_arrays(params, state, xg[ring], yg[ring])
    field.rho[ring] = rho
    field.m1[ring] = rho * u1
    field.m2[ring] = rho * u2


def init_from_exact(params: SolutionParams, traj: Trajectory, t0: float,
                    cfg: FvConfig) -> ConservativeField:
    """Sample the exact field at cell centers (ghost ring included).

    The box, enlarged by the ghost ring, must stay strictly inside the
    density support with the configured similarity margin for the whole run
    window [t0, t_end].
    """
    s_b = support_s_bound(params)
    if not math.isinf(s_b):
        ts = np.linspace(t0, max(t0, cfg.t_end), 33)
        a_min = float(np.min(traj.sample(ts)[0]))
        r_corner = math.hypot(max(abs(cfg.x_lo - cfg.dx), abs(cfg.x_hi + cfg.dx)),
                              max(abs(cfg.y_lo - cfg.dy), abs(cfg.y_hi + cfg.dy)))
        s_reach = (r_corner / a_min) ** 2
        if s_reach > cfg.support_margin * s_b:
            raise BoxOutsideSupport(
                f"box corner reaches s = {s_reach:.4g} over the run window, "
                f"margin allows {cfg.support_margin:.3g} * {s_b:.4g}")
    xg, yg = cfg.centers()
    state = traj.state_at(t0)
    rho, u1, u2, _ = eval_flow_arrays(params, state, xg, yg)
    return ConservativeField(cfg, rho, rho * u1, rho * u2, t0)


def step(field: ConservativeField, params: SolutionParams,
         traj: Trajectory | None = None, dt_cap: float | None = None) -> float:
    """Advance one forward-Euler step with Rusanov fluxes; returns dt used.

    Ghost cells are refreshed at the current time before the fluxes are
    formed.  Densities below the floor are clamped (and counted).  NaN or
    Inf anywhere aborts via NonFiniteState with diagnostics.
    """
    cfg = field.cfg
    _fill_ghosts(field, params, traj, field.t)
    rho, m1, m2 = field.rho, field.m1, field.m2
    u1 = m1 / rho
    u2 = m2 / rho
    c = _sound_speed(rho, params)
    smax = float(np.max(np.maximum(np.abs(u1), np.abs(u2)) + c))
    dt = cfg.cfl * min(cfg.dx, cfg.dy) / smax
    if dt_cap is not None:
        dt = min(dt, dt_cap)

    fx = _flux_x(rho, m1, m2, params)
    fy = _flux_y(rho, m1, m2, params)
    ax = np.abs(u1) + c
    ay = np.abs(u2) + c

    # x faces between columns i and i+1 (rows trimmed to the interior).
    amax_x = np.maximum(ax[:-1, 1:-1], ax[1:, 1:-1])
    flux_x = [0.5 * (f[:-1, 1:-1] + f[1:, 1:-1]) - 0.5 * amax_x * (q[1:, 1:-1] - q[:-1, 1:-1])
              for f, q in zip(fx, (rho, m1, m2))]
    amax_y = np.maximum(ay[1:-1, :-1], ay[1:-1, 1:])
    flux_y = [0.5 * (f[1:-1, :-1] + f[1:-1, 1:]) - 0.5 * amax_y * (q[1:-1, 1:] - q[1:-1, :-1])
              for f, q in zip(fy, (rho, m1, m2))]

    lam_x, lam_y = dt / cfg.dx, dt / cfg.dy
    for q, gx, gy in zip((field.rho, field.m1, field.m2), flux_x, flux_y):
        q[1:-1, 1:-1] -= lam_x * (gx[1:, :] - gx[:-1, :]) + lam_y * (gy[:, 1:] - gy[:, :-1])

    inner = field.rho[1:-1, 1:-1]
    low = inner < cfg.rho_floor
    if np.any(low):
        field.floor_events += int(np.count_nonzero(low))
        inner[low] = cfg.rho_floor
    field.t += dt
    if not (np.all(np.isfinite(field.rho)) and np.all(np.isfinite(field.m1))
            and np.all(np.isfinite(field.m2))):
        raise NonFiniteState(f"non-finite cell state at t = {field.t}")
    return dt


def run(params: SolutionParams, traj: Trajectory, cfg: FvConfig) -> ConservativeField:
    """March from t0 to t_end; the final partial step lands exactly on t_end."""
    field = init_from_exact(params, traj, cfg.t0, cfg)
    while field.t < cfg.t_end - 1e-14 * max(1.0, abs(cfg.t_end)):
        step(field, params, traj, dt_cap=cfg.t_end - field.t)
    return field


@dataclass(frozen=True)
class ErrorReport:
    """Per-resolution errors against the exact field, with observed orders."""

    resolutions: tuple
    l1_rho: tuple
    linf_rho: tuple
    l1_mom: tuple
    linf_mom: tuple
    orders_l1_rho: tuple
    floor_events: tuple

    def rows(self):
        hdr = ("resolution", "l1_rho", "linf_rho", "l1_mom", "linf_mom", "order_l1_rho")
        body = []
        for k, n in enumerate(self.resolutions):
            order = self.orders_l1_rho[k - 1] if k > 0 else None
            body.append((n, self.l1_rho[k], self.linf_rho[k], self.l1_mom[k],
                         self.linf_mom[k], order))
        return hdr, body

    def as_dict(self):
        return {
            "resolutions": list(self.resolutions),
            "l1_rho": list(self.l1_rho),
            "linf_rho": list(self.linf_rho),
            "l1_mom": list(self.l1_mom),
            "linf_mom": list(self.linf_mom),
            "orders_l1_rho": list(self.orders_l1_rho),
            "floor_events": list(self.floor_events),
        }


def _errors_vs_exact(field: ConservativeField, params, traj):
    cfg = field.cfg
    xg, yg = cfg.centers()
    sl = (slice(1, -1), slice(1, -1))
    state = traj.state_at(field.t)
    rho_e, u1_e, u2_e, _ = eval_flow_arrays(params, state, xg[sl], yg[sl])
    m1_e, m2_e = rho_e * u1_e, rho_e * u2_e
    cell = cfg.dx * cfg.dy
    d_rho = field.rho[sl] - rho_e
    d_m = np.hypot(field.m1[sl] - m1_e, field.m2[sl] - m2_e)
    return (float(np.sum(np.abs(d_rho)) * cell), float(np.max(np.abs(d_rho))),
            float(np.sum(d_m) * cell), float(np.max(d_m)))


def run_and_compare(params: SolutionParams, traj: Trajectory, cfg: FvConfig,
                    resolutions) -> ErrorReport:
    """Run every resolution and tabulate errors and observed L1 orders."""
    resolutions = [int(n) for n in resolutions]
    if len(resolutions) < 2:
        raise ValueError("need at least two resolutions for an order estimate")
    l1r, lir, l1m, lim, floors = [], [], [], [], []
    for n in resolutions:
        cfg_n = replace(cfg, nx=n, ny=n)
        field = run(params, traj, cfg_n)
        e = _errors_vs_exact(field, params, traj)
        l1r.append(e[0])
        lir.append(e[1])
        l1m.append(e[2])
        lim.append(e[3])
        floors.append(field.floor_events)
    orders = tuple(
        math.log2(l1r[k] / l1r[k + 1]) / math.log2(resolutions[k + 1] / resolutions[k])
        if l1r[k + 1] > 0 else math.inf
        for k in range(len(resolutions) - 1)
    )
    return ErrorReport(resolutions=tuple(resolutions), l1_rho=tuple(l1r),
                       linf_rho=tuple(lir), l1_mom=tuple(l1m), linf_mom=tuple(lim),
                       orders_l1_rho=orders, floor_events=tuple(floors))
