"""Numerical verification lab for the exact-solution claims.

Every field evaluated by this package is pushed back through the governing
equations with finite differences:

* mass and momentum residuals of the 2D family (4th-order 5-point stencils
  in space, 2nd-order central differences in time, scale factors taken from
  dense trajectory output),
* the gamma = 2 fixture on its own independent code path (2nd-order spatial
  stencils; its time derivatives are analytic),
* the generic-swirl mass identity: for ANY tangential speed profile G(t, r),
  rho = f(r/a)/a^2 with the dilation velocity keeps the mass equation exact,
* the viscous term mu * Laplacian(u), identically zero for velocity fields
  affine in (x, y), so the inviscid and viscous momentum residuals agree,
* the three-axis 3D family (e.g. anisotropic scales with uniform drift)
  whose consistency is MEASURED, not assumed: reports carry a PASS/FAIL
  verdict with the offending equation and location on failure.

Residuals are normalized per equation by the largest constituent-term
magnitude on the grid, making tolerances scale-free across parameter
regimes.  For exact fields the normalized residual is pure finite-difference
truncation error and must shrink at the stencil order under h-refinement;
``residual_convergence`` measures that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rk
from .emden import IntegrationConfig, TerminalEvent, Trajectory
from .errors import (
    GridTouchesSupportBoundary,
    InvalidParams,
    LadderTooShort,
    TrajectoryTooShort,
)
from .fields import (
    ScaleState,
    SolutionParams,
    eval_flow_arrays,
    support_s_bound,
    zhang_zheng_arrays,
)

__all__ = [
    "GridSpec",
    "Grid3Spec",
    "ResidualReport",
    "GenericRotationField",
    "ThreeAxisParams",
    "Scales3Trajectory",
    "euler_residual_2d",
    "zz_direct_residual",
    "mass_residual_generic_g",
    "ns_viscous_term",
    "laplacian_fd",
    "integrate_scales_3d",
    "eval_flow_3d_arrays",
    "euler_residual_3d",
    "residual_convergence",
]


@dataclass(frozen=True)
class GridSpec:
    """Sampling region and stencil steps for 2D residual evaluation.

    Either an annulus r in [r_lo, r_hi] (n_r x n_theta points) or a box
    [x_lo, x_hi] x [y_lo, y_hi] (nx x ny points).  h is the spatial stencil
    step, h_t the temporal one; support_margin caps the similarity
    coordinate at margin * s_boundary when the support is finite.
    """

    kind: str = "annulus"
    r_lo: float = 0.3
    r_hi: float = 1.5
    n_r: int = 20
    n_theta: int = 24
    x_lo: float = -1.0
    x_hi: float = 1.0
    y_lo: float = -1.0
    y_hi: float = 1.0
    nx: int = 16
    ny: int = 16
    h: float = 1e-3
    h_t: float = 1e-3
    support_margin: float = 0.9

    def __post_init__(self):
        if self.h <= 0 or self.h_t <= 0:
            raise ValueError("stencil steps h and h_t must be positive")
        if self.kind not in ("annulus", "box"):
            raise ValueError(f"unknown grid kind {self.kind!r}")

    def points(self):
        """Flattened (x, y) sample arrays."""
        if self.kind == "annulus":
            radii = np.linspace(self.r_lo, self.r_hi, self.n_r)
            thetas = np.linspace(0.0, 2.0 * math.pi, self.n_theta, endpoint=False)
            r, th = np.meshgrid(radii, thetas, indexing="ij")
            return (r * np.cos(th)).ravel(), (r * np.sin(th)).ravel()
        xs = np.linspace(self.x_lo, self.x_hi, self.nx)
        ys = np.linspace(self.y_lo, self.y_hi, self.ny)
        xg, yg = np.meshgrid(xs, ys, indexing="ij")
        return xg.ravel(), yg.ravel()

    def max_radius(self) -> float:
        if self.kind == "annulus":
            return self.r_hi
        return math.hypot(max(abs(self.x_lo), abs(self.x_hi)),
                          max(abs(self.y_lo), abs(self.y_hi)))


@dataclass(frozen=True)
class ResidualReport:
    """Normalized residual statistics per governing equation."""

    equations: dict          # name -> {"max": .., "mean": .., "scale": .., "worst_point": (..)}
    h: float
    h_t: float
    n_points: int
    verdict: str | None = None       # "PASS"/"FAIL" when a tolerance was given
    tolerance: float | None = None
    worst_equation: str | None = None
    notes: tuple = ()

    @property
    def max_normalized(self) -> float:
        return max(eq["max"] for eq in self.equations.values())

    def as_dict(self):
        out = {
            "h": self.h, "h_t": self.h_t, "n_points": self.n_points,
            "max_normalized": self.max_normalized,
            "equations": {k: dict(v) for k, v in self.equations.items()},
        }
        if self.verdict is not None:
            out.update(verdict=self.verdict, tolerance=self.tolerance,
                       worst_equation=self.worst_equation)
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _d1_central4(fm2, fm1, fp1, fp2, h):
    """4th-order first derivative from the 5-point stencil."""
    return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)


def _d1_central2(fm1, fp1, h):
    return (fp1 - fm1) / (2.0 * h)


def _summarize(name, residual, terms, coords, payloads=()):
    """Normalized residual statistics for one equation.

    The scale is the largest constituent-term magnitude on the grid.  The
    undifferentiated flux payloads provide a floor for that scale: for
    uniform fields every derivative term degenerates to stencil rounding
    noise, and without the floor the normalization would divide noise by
    noise instead of reporting a machine-zero residual.
    """
    scale = max(float(np.max(np.abs(t))) for t in terms)
    for q in payloads:
        scale = max(scale, float(np.max(np.abs(q))))
    scale = max(scale, 1e-300)
    normal = np.abs(residual) / scale
    k = int(np.argmax(normal))
    return name, {
        "max": float(normal[k]),
        "mean": float(np.mean(normal)),
        "scale": scale,
        "worst_point": tuple(float(c[k]) for c in coords),
    }


def _check_support_margin(params, a_values, grid: GridSpec):
    s_b = support_s_bound(params)
    if math.isinf(s_b):
        return
    a_min = min(a_values)
    r_reach = grid.max_radius() + 2.0 * grid.h
    s_reach = (r_reach / a_min) ** 2
    if s_reach > grid.support_margin * s_b:
        raise GridTouchesSupportBoundary(
            f"stencil reaches s = {s_reach:.4g} but the margin allows "
            f"{grid.support_margin:.3g} * {s_b:.4g}")


def euler_residual_2d(params: SolutionParams, traj: Trajectory, t: float,
                      grid: GridSpec, mu: float = 0.0,
                      density_factor: float = 1.0) -> ResidualReport:
    """Mass and momentum residuals of the family field at time t.

    Spatial derivatives use 4th-order 5-point stencils; the time derivative
    is a 2nd-order central difference with scale states taken from the
    trajectory's dense output at t +- h_t.  With mu != 0 the viscous term
    mu * Laplacian(u) is subtracted from the momentum residuals (the family
    velocity is affine in x, y, so this changes nothing beyond rounding).

    density_factor multiplies the density everywhere; values != 1 provide a
    deliberately broken field as a negative control for convergence studies.
    """
    h, h_t = grid.h, grid.h_t
    if not traj.covers(t - h_t, t + h_t):
        raise TrajectoryTooShort(
            f"need [{t - h_t}, {t + h_t}] inside {traj.t_span}")
    st_m, st_0, st_p = (traj.state_at(t - h_t), traj.state_at(t), traj.state_at(t + h_t))
    _check_support_margin(params, (st_m.a, st_0.a, st_p.a), grid)
    x, y = grid.points()

    def fields_at(state, xs, ys):
        rho, u1, u2, p = eval_flow_arrays(params, state, xs, ys)
        if density_factor != 1.0:
            rho = rho * density_factor
            p = params.K * rho ** params.gamma
        return rho, u1, u2, p

    c = fields_at(st_0, x, y)
    tm = fields_at(st_m, x, y)
    tp = fields_at(st_p, x, y)
    xs = {d: fields_at(st_0, x + d * h, y) for d in (-2, -1, 1, 2)}
    ys = {d: fields_at(st_0, x, y + d * h) for d in (-2, -1, 1, 2)}

    rho, u1, u2, p = c

    def dx4(idx):
        return _d1_central4(xs[-2][idx], xs[-1][idx], xs[1][idx], xs[2][idx], h)

    def dy4(idx):
        return _d1_central4(ys[-2][idx], ys[-1][idx], ys[1][idx], ys[2][idx], h)

    def dt2(idx):
        return _d1_central2(tm[idx], tp[idx], h_t)

    # Mass: rho_t + d_x(rho u1) + d_y(rho u2)
    t_rho = dt2(0)
    t_mx = _d1_central4(xs[-2][0] * xs[-2][1], xs[-1][0] * xs[-1][1],
                        xs[1][0] * xs[1][1], xs[2][0] * xs[2][1], h)
    t_my = _d1_central4(ys[-2][0] * ys[-2][2], ys[-1][0] * ys[-1][2],
                        ys[1][0] * ys[1][2], ys[2][0] * ys[2][2], h)
    mass_terms = [t_rho, t_mx, t_my]
    mass_res = t_rho + t_mx + t_my

    # Momentum: rho [u_t + (u.grad) u] + grad p  (- mu Laplacian(u))
    u1_x, u1_y = dx4(1), dy4(1)
    u2_x, u2_y = dx4(2), dy4(2)
    p_x, p_y = dx4(3), dy4(3)
    mx_terms = [rho * dt2(1), rho * u1 * u1_x, rho * u2 * u1_y, p_x]
    my_terms = [rho * dt2(2), rho * u1 * u2_x, rho * u2 * u2_y, p_y]
    if mu != 0.0:
        lap1 = (xs[1][1] + xs[-1][1] + ys[1][1] + ys[-1][1] - 4.0 * u1) / (h * h)
        lap2 = (xs[1][2] + xs[-1][2] + ys[1][2] + ys[-1][2] - 4.0 * u2) / (h * h)
        mx_terms.append(-mu * lap1)
        my_terms.append(-mu * lap2)
    mx_res = sum(mx_terms)
    my_res = sum(my_terms)

    eqs = dict([
        _summarize("mass", mass_res, mass_terms, (x, y),
                   payloads=(rho, rho * u1, rho * u2)),
        _summarize("momentum-x", mx_res, mx_terms, (x, y),
                   payloads=(rho * u1, rho * u1 * u1, rho * u2 * u1, p)),
        _summarize("momentum-y", my_res, my_terms, (x, y),
                   payloads=(rho * u2, rho * u1 * u2, rho * u2 * u2, p)),
    ])
    return ResidualReport(equations=eqs, h=h, h_t=h_t, n_points=x.size)


def zz_direct_residual(t: float, K: float, grid: GridSpec) -> ResidualReport:
    """Residuals of the gamma = 2 fixture on its own code path.

    The 1/t and 1/t^2 time factors are differentiated analytically
    (rho_t = -2 rho/t, u_t = -u/t), so only 2nd-order spatial truncation
    error remains.
    """
    if grid.kind == "annulus" and grid.r_lo <= 2.0 * grid.h:
        raise ValueError("annulus must exclude an r = 0 neighborhood wider than 2h")
    h = grid.h
    x, y = grid.points()

    def at(xs, ys):
        return zhang_zheng_arrays(t, xs, ys, K)

    rho, u1, u2, p = at(x, y)
    xp, xm = at(x + h, y), at(x - h, y)
    yp, ym = at(x, y + h), at(x, y - h)

    t_rho = -2.0 * rho / t
    t_mx = _d1_central2(xm[0] * xm[1], xp[0] * xp[1], h)
    t_my = _d1_central2(ym[0] * ym[2], yp[0] * yp[2], h)
    mass_terms = [t_rho, t_mx, t_my]
    mass_res = t_rho + t_mx + t_my

    u1_x, u1_y = _d1_central2(xm[1], xp[1], h), _d1_central2(ym[1], yp[1], h)
    u2_x, u2_y = _d1_central2(xm[2], xp[2], h), _d1_central2(ym[2], yp[2], h)
    p_x, p_y = _d1_central2(xm[3], xp[3], h), _d1_central2(ym[3], yp[3], h)
    mx_terms = [-rho * u1 / t, rho * u1 * u1_x, rho * u2 * u1_y, p_x]
    my_terms = [-rho * u2 / t, rho * u1 * u2_x, rho * u2 * u2_y, p_y]

    eqs = dict([
        _summarize("mass", mass_res, mass_terms, (x, y),
                   payloads=(rho, rho * u1, rho * u2)),
        _summarize("momentum-x", sum(mx_terms), mx_terms, (x, y),
                   payloads=(rho * u1, rho * u1 * u1, rho * u2 * u1, p)),
        _summarize("momentum-y", sum(my_terms), my_terms, (x, y),
                   payloads=(rho * u2, rho * u1 * u2, rho * u2 * u2, p)),
    ])
    return ResidualReport(equations=eqs, h=h, h_t=0.0, n_points=x.size)


@dataclass(frozen=True)
class GenericRotationField:
    """Radial density shape with an arbitrary tangential speed profile.

    rho(t, x, y) = f(r / a(t)) / a(t)^2
    u(t, x, y)   = (adot/a) (x, y) + (G(t, r)/r) (-y, x)

    f, G, a, adot are callables (f and G vectorized over arrays).  The
    dilation factor adot(t) r / a(t) is the unique radial speed balancing
    the mass equation; G is unconstrained because the tangential term is
    divergence-free against any radial density.
    """

    f: object
    G: object
    a: object
    adot: object


def mass_residual_generic_g(fieldspec: GenericRotationField, t: float,
                            grid: GridSpec) -> float:
    """Normalized max mass residual of the generic-swirl structure."""
    if grid.kind != "annulus":
        raise ValueError("generic-swirl residuals need an annulus grid (u is singular at r = 0)")
    if grid.r_lo <= 2.0 * grid.h:
        raise ValueError("annulus must exclude an r = 0 neighborhood wider than 2h")
    h, h_t = grid.h, grid.h_t
    x, y = grid.points()

    def rho_at(tau, xs, ys):
        a = fieldspec.a(tau)
        rr = np.hypot(xs, ys)
        return fieldspec.f(rr / a) / (a * a)

    a0 = fieldspec.a(t)
    ad0 = fieldspec.adot(t)

    def mom_at(xs, ys, which):
        rr = np.hypot(xs, ys)
        rho = fieldspec.f(rr / a0) / (a0 * a0)
        swirl = fieldspec.G(t, rr) / rr
        if which == 1:
            return rho * ((ad0 / a0) * xs - swirl * ys)
        return rho * (swirl * xs + (ad0 / a0) * ys)

    t_rho = _d1_central2(rho_at(t - h_t, x, y), rho_at(t + h_t, x, y), h_t)
    t_mx = _d1_central4(mom_at(x - 2 * h, y, 1), mom_at(x - h, y, 1),
                        mom_at(x + h, y, 1), mom_at(x + 2 * h, y, 1), h)
    t_my = _d1_central4(mom_at(x, y - 2 * h, 2), mom_at(x, y - h, 2),
                        mom_at(x, y + h, 2), mom_at(x, y + 2 * h, 2), h)
    terms = [t_rho, t_mx, t_my]
    scale = max(float(np.max(np.abs(tm))) for tm in terms)
    for q in (rho_at(t, x, y), mom_at(x, y, 1), mom_at(x, y, 2)):
        scale = max(scale, float(np.max(np.abs(q))))
    return float(np.max(np.abs(t_rho + t_mx + t_my)) / max(scale, 1e-300))


def laplacian_fd(velocity, x, y, h: float):
    """5-point finite-difference vector Laplacian of velocity(x, y) -> (u1, u2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c1, c2 = velocity(x, y)
    terms = [velocity(x + h, y), velocity(x - h, y), velocity(x, y + h), velocity(x, y - h)]
    lap1 = (sum(tt[0] for tt in terms) - 4.0 * c1) / (h * h)
    lap2 = (sum(tt[1] for tt in terms) - 4.0 * c2) / (h * h)
    return lap1, lap2


def ns_viscous_term(params: SolutionParams, state: ScaleState, x, y,
                    mu: float = 1.0, h: float = 1e-3):
    """mu * Laplacian(u) of the family velocity, by finite differences.

    The family velocity is affine in (x, y), so the exact value is zero and
    the finite-difference result is pure rounding noise with floor
    ~ eps * |u| / h^2.  Returned as (mu lap_u1, mu lap_u2).
    """

    def vel(xs, ys):
        _, u1, u2, _ = eval_flow_arrays(params, state, xs, ys)
        return u1, u2

    lap1, lap2 = laplacian_fd(vel, x, y, h)
    return mu * lap1, mu * lap2


def viscous_norm(params: SolutionParams, state: ScaleState, x, y,
                 mu: float = 1.0, h: float = 1e-3) -> float:
    """max |mu Lap(u)| normalized by the velocity-gradient scale / h."""
    l1, l2 = ns_viscous_term(params, state, x, y, mu=mu, h=h)
    grad_scale = abs(state.adot / state.a) + abs(params.xi) / state.a ** 2
    floor_scale = max(grad_scale, 1e-300) / h
    return float(max(np.max(np.abs(l1)), np.max(np.abs(l2))) / floor_scale)


# --------------------------------------------------------------------------
# Three-axis 3D family
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ThreeAxisParams:
    """Anisotropic three-axis family with uniform per-axis drift.

    rho = f(s) / (a1 a2 a3),  u_i = (adot_i/a_i)(x_i - d_i) + ddot-free drift
    rate d1_i, with d_i(t) = d0_i + t d1_i,
    s = sum_k ((x_k - d_k)/a_k)^2 and
    f(s) = max(-xi3 (gamma-1)/(2 K gamma) s + alpha3, 0)^(1/(gamma-1)).

    The scales satisfy the coupled system addot_i = xi3 / (a_i (a1 a2 a3)^(gamma-1)).
    xi3 plays the role the scale-equation constant lam plays in 2D; it is a
    separate knob and is named separately on purpose.
    """

    gamma: float
    K: float
    xi3: float
    alpha3: float
    a_init: tuple = (1.0, 1.0, 1.0)
    adot_init: tuple = (0.0, 0.0, 0.0)
    drift0: tuple = (0.0, 0.0, 0.0)
    drift_rate: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        violations = []
        if not self.gamma > 1.0:
            violations.append("NonPositiveGammaMargin")
        if not self.K > 0.0:
            violations.append("NonPositiveK")
        if not self.alpha3 >= 0.0:
            violations.append("NegativeAlpha")
        if len(self.a_init) != 3 or any(not a > 0.0 for a in self.a_init):
            violations.append("NonPositiveA0")
        if violations:
            raise InvalidParams(violations)

    def drift_at(self, t: float):
        return tuple(d0 + t * d1 for d0, d1 in zip(self.drift0, self.drift_rate))

    def support_s_bound(self) -> float:
        d = self.xi3 * (self.gamma - 1.0)
        if d <= 0.0:
            return math.inf
        return 2.0 * self.K * self.gamma * self.alpha3 / d


class Scales3Trajectory:
    """Coupled three-axis scale trajectories with a conserved-quantity record.

    The first integral monitored here,
        H = sum_i adot_i^2 / 2 + xi3 / ((gamma-1) (a1 a2 a3)^(gamma-1)),
    follows from multiplying each scale equation by adot_i and summing; it is
    validated numerically by the test suite before being trusted.
    """

    def __init__(self, c3: ThreeAxisParams, sol: _rk.RkSolution, terminal):
        self.c3 = c3
        self._sol = sol
        self.ts = sol.ts
        self.a = sol.ys[:, :3]
        self.adot = sol.ys[:, 3:]
        self.terminal = terminal
        g = c3.gamma
        prod = np.prod(np.sort(self.a, axis=1), axis=1)
        kin_sq = np.sort(self.adot ** 2, axis=1)
        self.H = 0.5 * np.sum(kin_sq, axis=1) + c3.xi3 / ((g - 1.0) * prod ** (g - 1.0))
        self.drift = np.abs(self.H - self.H[0]) / max(1.0, abs(self.H[0]))

    @property
    def t_span(self):
        return float(self.ts[0]), float(self.ts[-1])

    def covers(self, t_lo, t_hi):
        lo, hi = self.t_span
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        return lo - slack <= t_lo and t_hi <= hi + slack

    def state_at(self, t: float):
        """(a[3], adot[3]) arrays from dense output."""
        y = self._sol.eval_dense(t)
        return y[:3], y[3:]


def _ordered_prod3(a):
    """Product of three scales in sorted order: bitwise permutation-invariant."""
    s = np.sort(np.asarray(a, dtype=float))
    return s[0] * s[1] * s[2]


def integrate_scales_3d(c3: ThreeAxisParams, t_end: float,
                        cfg: IntegrationConfig = IntegrationConfig()) -> Scales3Trajectory:
    """Integrate the coupled three-axis scale system from t = 0."""
    g, xi3 = c3.gamma, c3.xi3
    eps = cfg.collapse_epsilon

    def rhs(t, y):
        a = y[:3]
        prod = _ordered_prod3(a)
        acc = xi3 / (a * prod ** (g - 1.0))
        return np.concatenate([y[3:], acc])

    def admissible(y):
        return bool(np.all(y[:3] > 0.0))

    def step_bound(t, y):
        a, ad = y[:3], y[3:]
        shrink = ad < 0.0
        if not np.any(shrink):
            return None
        return float(0.1 * np.min(a[shrink] / np.abs(ad[shrink])))

    def stop(y):
        return float(np.min(y[:3])) - eps

    def near_stop(t, y):
        a, ad = y[:3], y[3:]
        k = int(np.argmin(a))
        if ad[k] >= 0.0:
            return None
        plunge = a[k] / -ad[k]
        floor = 16.0 * np.finfo(float).eps * max(abs(t), 1.0)
        if a[k] <= max(20.0 * eps, 1e-7) or (a[k] <= 1e-3 and plunge <= 1e4 * floor):
            return plunge
        return None

    y0 = np.array(list(c3.a_init) + list(c3.adot_init), dtype=float)
    sol = _rk.solve(rhs, 0.0, y0, t_end, rtol=cfg.rel_tol, atol=cfg.abs_tol,
                    max_step=cfg.max_step, step_bound=step_bound,
                    admissible=admissible, stop=stop, near_stop=near_stop)
    if sol.status == "stopped":
        terminal = TerminalEvent(kind="collapsed", t=float(sol.stop_t),
                                 bracket=sol.stop_bracket, message=sol.message)
    elif sol.status == "reached_end":
        terminal = TerminalEvent(kind="reached_end", t=float(sol.ts[-1]))
    else:
        terminal = TerminalEvent(kind="step_failure", t=float(sol.ts[-1]), message=sol.message)
    return Scales3Trajectory(c3, sol, terminal)


def eval_flow_3d_arrays(c3: ThreeAxisParams, a, adot, t: float, x, y, z):
    """Vectorized 3D family evaluation; returns (rho, u1, u2, u3, p)."""
    a = np.asarray(a, dtype=float)
    adot = np.asarray(adot, dtype=float)
    d = c3.drift_at(t)
    xr, yr, zr = x - d[0], y - d[1], z - d[2]
    sq = np.sort(np.stack([(xr / a[0]) ** 2, (yr / a[1]) ** 2, (zr / a[2]) ** 2]), axis=0)
    s = sq[0] + sq[1] + sq[2]
    slope = -c3.xi3 * (c3.gamma - 1.0) / (2.0 * c3.K * c3.gamma)
    base = np.maximum(slope * s + c3.alpha3, 0.0)
    f = base ** (1.0 / (c3.gamma - 1.0))
    prod = _ordered_prod3(a)
    rho = f / prod
    u1 = (adot[0] / a[0]) * xr + c3.drift_rate[0]
    u2 = (adot[1] / a[1]) * yr + c3.drift_rate[1]
    u3 = (adot[2] / a[2]) * zr + c3.drift_rate[2]
    p = c3.K * rho ** c3.gamma
    return rho, u1, u2, u3, p


@dataclass(frozen=True)
class Grid3Spec:
    """Cube of sample points for 3D residuals, centered on the drift point."""

    half_width: float = 0.5
    n: int = 7
    h: float = 1e-3
    h_t: float = 1e-3
    support_margin: float = 0.9

    def points(self, center):
        xs = np.linspace(center[0] - self.half_width, center[0] + self.half_width, self.n)
        ys = np.linspace(center[1] - self.half_width, center[1] + self.half_width, self.n)
        zs = np.linspace(center[2] - self.half_width, center[2] + self.half_width, self.n)
        xg, yg, zg = np.meshgrid(xs, ys, zs, indexing="ij")
        return xg.ravel(), yg.ravel(), zg.ravel()


def euler_residual_3d(c3: ThreeAxisParams, scales: Scales3Trajectory, t: float,
                      grid: Grid3Spec, tolerance: float | None = None) -> ResidualReport:
    """Mass + three momentum residuals of the 3D family at time t.

    The report never presumes the family exact: with a tolerance given, the
    verdict states PASS (consistent at that tolerance) or FAIL with the
    offending equation and sample location.
    """
    h, h_t = grid.h, grid.h_t
    if not scales.covers(t - h_t, t + h_t):
        raise TrajectoryTooShort(f"need [{t - h_t}, {t + h_t}] inside {scales.t_span}")
    s_b = c3.support_s_bound()
    states = {dt: scales.state_at(t + dt) for dt in (-h_t, 0.0, h_t)}
    if not math.isinf(s_b):
        a_min = min(float(np.min(st[0])) for st in states.values())
        center = np.array(c3.drift_at(t))
        max_rate = max(abs(r) for r in c3.drift_rate)
        reach = math.sqrt(3.0) * (grid.half_width + 2.0 * h) + h_t * max_rate
        if (reach / a_min) ** 2 > grid.support_margin * s_b:
            raise GridTouchesSupportBoundary(
                f"stencil reach s = {(reach / a_min) ** 2:.4g} exceeds "
                f"{grid.support_margin:.3g} * {s_b:.4g}")
    x, y, z = grid.points(c3.drift_at(t))

    def at(dt, xs, ys, zs):
        a, ad = states[dt]
        return eval_flow_3d_arrays(c3, a, ad, t + dt, xs, ys, zs)

    c = at(0.0, x, y, z)
    tm, tp = at(-h_t, x, y, z), at(h_t, x, y, z)
    sx = {d: at(0.0, x + d * h, y, z) for d in (-2, -1, 1, 2)}
    sy = {d: at(0.0, x, y + d * h, z) for d in (-2, -1, 1, 2)}
    sz = {d: at(0.0, x, y, z + d * h) for d in (-2, -1, 1, 2)}
    rho, u1, u2, u3, p = c

    def d4(shifts, idx):
        return _d1_central4(shifts[-2][idx], shifts[-1][idx], shifts[1][idx], shifts[2][idx], h)

    def d4_prod(shifts, i, j):
        return _d1_central4(shifts[-2][i] * shifts[-2][j], shifts[-1][i] * shifts[-1][j],
                            shifts[1][i] * shifts[1][j], shifts[2][i] * shifts[2][j], h)

    t_rho = _d1_central2(tm[0], tp[0], h_t)
    mass_terms = [t_rho, d4_prod(sx, 0, 1), d4_prod(sy, 0, 2), d4_prod(sz, 0, 3)]
    mass_res = sum(mass_terms)

    eqs = [_summarize("mass", mass_res, mass_terms, (x, y, z),
                      payloads=(rho, rho * u1, rho * u2, rho * u3))]
    vel = {1: ("momentum-x", u1), 2: ("momentum-y", u2), 3: ("momentum-z", u3)}
    for i, (name, ui) in vel.items():
        conv = rho * (u1 * d4(sx, i) + u2 * d4(sy, i) + u3 * d4(sz, i))
        terms = [rho * _d1_central2(tm[i], tp[i], h_t), conv,
                 {1: d4(sx, 4), 2: d4(sy, 4), 3: d4(sz, 4)}[i]]
        eqs.append(_summarize(name, sum(terms), terms, (x, y, z),
                              payloads=(rho * ui, rho * u1 * ui, p)))
    eq_dict = dict(eqs)

    verdict = worst = None
    if tolerance is not None:
        worst = max(eq_dict, key=lambda k: eq_dict[k]["max"])
        verdict = "PASS" if eq_dict[worst]["max"] <= tolerance else "FAIL"
    return ResidualReport(equations=eq_dict, h=h, h_t=h_t, n_points=x.size,
                          verdict=verdict, tolerance=tolerance, worst_equation=worst)


def residual_convergence(run, h_ladder):
    """Observed order of a residual operation across an h-ladder.

    ``run`` maps h to either a ResidualReport or a bare residual float.
    Returns a dict with the ladder, per-h residuals, the least-squares slope
    of log(residual) vs log(h), and "not_applicable" = True when residuals
    sit at the rounding floor (machine-zero fields have no order).
    """
    ladder = [float(h) for h in h_ladder]
    if len(ladder) < 3:
        raise LadderTooShort(f"need >= 3 rungs, got {len(ladder)}")
    if any(h2 >= h1 for h1, h2 in zip(ladder, ladder[1:])):
        raise ValueError("h-ladder must be strictly decreasing")
    residuals = []
    for h in ladder:
        out = run(h)
        residuals.append(out.max_normalized if isinstance(out, ResidualReport) else float(out))
    floor = 1e-13
    if all(r <= floor for r in residuals):
        return {"h": ladder, "residuals": residuals, "order": None, "not_applicable": True}
    safe = [max(r, 1e-300) for r in residuals]
    slope = float(np.polyfit(np.log(ladder), np.log(safe), 1)[0])
    return {"h": ladder, "residuals": residuals, "order": slope, "not_applicable": False}
