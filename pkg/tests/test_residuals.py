"""Residual verification lab: 2D family, fixture, swirl identity, 3D family."""

import numpy as np
import pytest

from swirlgas import (
    ThreeAxisParams,
    GenericRotationField,
    Grid3Spec,
    GridSpec,
    GridTouchesSupportBoundary,
    IntegrationConfig,
    InvalidParams,
    LadderTooShort,
    SolutionParams,
    TrajectoryTooShort,
    euler_residual_2d,
    euler_residual_3d,
    integrate,
    integrate_scales_3d,
    mass_residual_generic_g,
    residual_convergence,
    zhang_zheng_embedding,
    zz_direct_residual,
)
from swirlgas.residuals import eval_flow_3d_arrays, laplacian_fd, ns_viscous_term, viscous_norm
from swirlgas import _rk

GENERIC = SolutionParams(gamma=1.4, K=1, xi=0.7, lam=0.9, alpha=1, a0=1, a1=0.3)


@pytest.fixture(scope="module")
def generic_traj():
    return integrate(GENERIC, IntegrationConfig(t_end=1.0))


def grid_2d(h, h_t=None, r_hi=2.0):
    return GridSpec(kind="annulus", r_lo=0.3, r_hi=r_hi, n_r=16, n_theta=24,
                    h=h, h_t=h / 2 if h_t is None else h_t)


# ----------------------------------------------------------- 2D family

def test_generic_family_residual_small(generic_traj):
    rep = euler_residual_2d(GENERIC, generic_traj, 0.5, grid_2d(1e-3))
    assert rep.max_normalized <= 1e-6
    assert set(rep.equations) == {"mass", "momentum-x", "momentum-y"}


def test_generic_family_residual_second_order(generic_traj):
    r1 = euler_residual_2d(GENERIC, generic_traj, 0.5, grid_2d(1e-3)).max_normalized
    r2 = euler_residual_2d(GENERIC, generic_traj, 0.5, grid_2d(5e-4)).max_normalized
    assert 3.0 <= r1 / r2 <= 5.0


def test_uniform_static_residual_is_zero():
    p = SolutionParams(gamma=1.4, K=1, xi=0.0, lam=0.0, alpha=1, a0=1, a1=0)
    traj = integrate(p, IntegrationConfig(t_end=1.0))
    grid = GridSpec(kind="box", x_lo=-1, x_hi=1, y_lo=-1, y_hi=1, nx=8, ny=8,
                    h=1e-3, h_t=5e-4)
    rep = euler_residual_2d(p, traj, 0.5, grid)
    assert rep.max_normalized == 0.0


def test_fixture_member_residual_small():
    emb = zhang_zheng_embedding(1.0)
    traj = integrate(emb.params, IntegrationConfig(t_end=0.4))
    rep = euler_residual_2d(emb.params, traj, 0.2, grid_2d(1e-3))
    assert rep.max_normalized <= 1e-6


def test_residual_guards(generic_traj):
    with pytest.raises(TrajectoryTooShort):
        euler_residual_2d(GENERIC, generic_traj, 0.9999, grid_2d(1e-3, h_t=1e-3))
    wide = GridSpec(kind="annulus", r_lo=0.3, r_hi=3.6, n_r=8, n_theta=8, h=1e-3, h_t=5e-4)
    with pytest.raises(GridTouchesSupportBoundary):
        euler_residual_2d(GENERIC, generic_traj, 0.5, wide)


# ----------------------------------------------------------- fixture direct path

def test_fixture_direct_residual():
    grid = GridSpec(kind="annulus", r_lo=0.1, r_hi=2.0, n_r=20, n_theta=24, h=5e-4)
    rep = zz_direct_residual(1.0, 1.0, grid)
    assert rep.max_normalized <= 1e-7
    rep2 = zz_direct_residual(2.0, 1.0, grid)
    assert rep2.max_normalized <= 1e-7


def test_fixture_direct_residual_second_order():
    g1 = GridSpec(kind="annulus", r_lo=0.1, r_hi=2.0, n_r=20, n_theta=24, h=1e-3)
    g2 = GridSpec(kind="annulus", r_lo=0.1, r_hi=2.0, n_r=20, n_theta=24, h=5e-4)
    r1 = zz_direct_residual(1.0, 1.0, g1).max_normalized
    r2 = zz_direct_residual(1.0, 1.0, g2).max_normalized
    assert 3.0 <= r1 / r2 <= 5.0


def test_fixture_direct_rejects_origin_grid():
    with pytest.raises(ValueError):
        zz_direct_residual(1.0, 1.0, GridSpec(kind="annulus", r_lo=1e-4, r_hi=1.0, h=1e-3))


def test_mirrored_fixture_variant_is_not_a_solution():
    # Negating the swirl of the fixture breaks the equations at O(1): the
    # residual no longer vanishes.  This pins the sign convention.
    t, K, h = 1.0, 1.0, 1e-4
    grid = GridSpec(kind="annulus", r_lo=0.5, r_hi=1.5, n_r=10, n_theta=16, h=h)
    x, y = grid.points()

    def mirrored(xs, ys):
        rho = (xs ** 2 + ys ** 2) / (8 * K * t * t)
        return rho, (xs + ys) / (2 * t), (xs - ys) / (2 * t)

    rho, u1, u2 = mirrored(x, y)
    rx_p = mirrored(x + h, y)
    rx_m = mirrored(x - h, y)
    ry_p = mirrored(x, y + h)
    ry_m = mirrored(x, y - h)
    mass = (-2 * rho / t
            + (rx_p[0] * rx_p[1] - rx_m[0] * rx_m[1]) / (2 * h)
            + (ry_p[0] * ry_p[2] - ry_m[0] * ry_m[2]) / (2 * h))
    scale = np.max(np.abs(2 * rho / t))
    assert np.max(np.abs(mass)) / scale > 1e-2


# ----------------------------------------------------------- generic swirl mass identity

def annulus_for_mass(h):
    return GridSpec(kind="annulus", r_lo=0.3, r_hi=2.0, n_r=16, n_theta=24, h=h, h_t=1e-4)


def test_mass_identity_no_swirl():
    spec = GenericRotationField(f=lambda eta: np.exp(-eta ** 2),
                                G=lambda t, r: np.zeros_like(r),
                                a=lambda t: 1.0 + t, adot=lambda t: 1.0)
    assert mass_residual_generic_g(spec, 0.5, annulus_for_mass(1e-3)) <= 1e-7


def test_mass_identity_weird_swirl():
    spec = GenericRotationField(f=lambda eta: np.exp(-eta ** 2),
                                G=lambda t, r: (1 + t) * r ** 2 * np.sin(r),
                                a=lambda t: 1.0 + t, adot=lambda t: 1.0)
    assert mass_residual_generic_g(spec, 0.5, annulus_for_mass(1e-3)) <= 1e-7


def test_mass_identity_random_polynomial_sweep():
    rng = np.random.default_rng(7)
    values = []
    for _ in range(5):
        coef = rng.uniform(-1, 1, 5)
        spec = GenericRotationField(
            f=lambda eta: np.exp(-eta ** 2),
            G=lambda t, r, c=coef: c[0] + c[1] * r + c[2] * r ** 2 + c[3] * r ** 3 + c[4] * r ** 4,
            a=lambda t: 1.0 + 0.5 * t, adot=lambda t: 0.5)
        values.append(mass_residual_generic_g(spec, 0.5, annulus_for_mass(1e-3)))
    assert max(values) <= 1e-6
    # The bound must not depend on the swirl profile.  Some spread is
    # inherent because the normalization scale carries the swirl flux
    # itself; a factor 4 keeps the check meaningful (measured spread ~2.2x).
    assert max(values) <= 4.0 * max(min(values), 1e-12)


# ----------------------------------------------------------- viscous term

def test_viscous_term_vanishes_on_family(generic_traj):
    st = generic_traj.state_at(0.5)
    x, y = grid_2d(1e-3).points()
    for mu in (1.0, 3.7):
        assert viscous_norm(GENERIC, st, x, y, mu=mu, h=1e-3) <= 1e-10


def test_viscous_term_scales_linearly(generic_traj):
    st = generic_traj.state_at(0.5)
    x, y = grid_2d(1e-3).points()
    l1, l2 = ns_viscous_term(GENERIC, st, x, y, mu=1.0, h=1e-3)
    m1, m2 = ns_viscous_term(GENERIC, st, x, y, mu=3.7, h=1e-3)
    assert np.array_equal(m1, 3.7 * l1)
    assert np.array_equal(m2, 3.7 * l2)


def test_laplacian_oracle_quadratic_field():
    x = np.linspace(-1, 1, 11)
    y = np.linspace(-1, 1, 11)
    lap1, lap2 = laplacian_fd(lambda xs, ys: (xs ** 2, np.zeros_like(xs)), x, y, 1e-3)
    assert np.max(np.abs(lap1 - 2.0)) <= 1e-6
    assert np.max(np.abs(lap2)) <= 1e-6


def test_euler_vs_viscous_momentum_residuals(generic_traj):
    # The family velocity is affine, so adding mu * Laplacian(u) changes the
    # momentum residuals only at rounding level.  h large enough to keep the
    # second-difference rounding noise under the bound.
    grid = grid_2d(1e-2, h_t=5e-4)
    base = euler_residual_2d(GENERIC, generic_traj, 0.5, grid)
    for mu in (1.0, 3.7, 10.0):
        ns = euler_residual_2d(GENERIC, generic_traj, 0.5, grid, mu=mu)
        for eq in ("momentum-x", "momentum-y"):
            assert abs(ns.equations[eq]["max"] - base.equations[eq]["max"]) <= 1e-10


# ----------------------------------------------------------- 3D scales

def test_3d_isotropic_symmetry():
    c3 = ThreeAxisParams(gamma=5 / 3, K=1.0, xi3=1.0, alpha3=1.0)
    sc = integrate_scales_3d(c3, 1.5)
    assert np.max(np.abs(sc.a[:, 0] - sc.a[:, 1])) <= 1e-10
    assert np.max(np.abs(sc.a[:, 0] - sc.a[:, 2])) <= 1e-10


def test_3d_isotropic_matches_scalar_reduction():
    g = 5 / 3
    c3 = ThreeAxisParams(gamma=g, K=1.0, xi3=1.0, alpha3=1.0)
    sc = integrate_scales_3d(c3, 1.0)
    sol = _rk.solve(lambda t, y: np.array([y[1], 1.0 / y[0] ** (3 * g - 2)]),
                    0.0, np.array([1.0, 0.0]), 1.0, rtol=1e-12, atol=1e-12)
    assert abs(sc.a[-1, 0] - sol.ys[-1, 0]) <= 1e-8


def test_3d_first_integral_is_conserved():
    # H = sum adot_i^2/2 + xi3/((g-1) prod a_k^(g-1)) should be a constant of
    # motion; verify on an anisotropic run before trusting the drift monitor.
    c3 = ThreeAxisParams(gamma=1.4, K=1.0, xi3=1.0, alpha3=1.0,
                            a_init=(1.0, 1.2, 0.8), adot_init=(0.1, -0.2, 0.0))
    sc = integrate_scales_3d(c3, 2.0)
    assert np.max(sc.drift) <= 1e-9
    g = c3.gamma
    prod = np.prod(sc.a, axis=1)
    h = 0.5 * np.sum(sc.adot ** 2, axis=1) + c3.xi3 / ((g - 1) * prod ** (g - 1))
    assert np.max(np.abs(h - h[0])) <= 1e-9 * max(1.0, abs(h[0]))


def test_3d_zero_forcing_is_linear():
    c3 = ThreeAxisParams(gamma=1.4, K=1.0, xi3=0.0, alpha3=1.0,
                            a_init=(1, 1.2, 0.8), adot_init=(0.1, -0.05, 0.2))
    sc = integrate_scales_3d(c3, 2.0)
    expect = np.array([1, 1.2, 0.8]) + 2.0 * np.array([0.1, -0.05, 0.2])
    assert np.max(np.abs(sc.a[-1] - expect)) == 0.0


def test_3d_contraction_collapses():
    c3 = ThreeAxisParams(gamma=1.4, K=1.0, xi3=-1.0, alpha3=1.0)
    sc = integrate_scales_3d(c3, 10.0)
    assert sc.terminal.kind == "collapsed"


def test_3d_params_validation():
    with pytest.raises(InvalidParams):
        ThreeAxisParams(gamma=1.0, K=1.0, xi3=1.0, alpha3=1.0)
    with pytest.raises(InvalidParams):
        ThreeAxisParams(gamma=1.4, K=1.0, xi3=1.0, alpha3=1.0, a_init=(1.0, -1.0, 1.0))


# ----------------------------------------------------------- 3D residuals

def test_3d_isotropic_residual_and_radial_crosscheck():
    c3 = ThreeAxisParams(gamma=1.4, K=1.0, xi3=1.0, alpha3=1.0)
    sc = integrate_scales_3d(c3, 1.0)
    rep = euler_residual_3d(c3, sc, 0.5, Grid3Spec(half_width=0.4, n=7, h=1e-3, h_t=5e-4),
                            tolerance=1e-6)
    assert rep.verdict == "PASS"
    # Radial evaluation path: rho(r) = f(r^2/a^2)/a^3 for equal axes.
    a, adot = sc.state_at(0.5)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-0.4, 0.4, (50, 3))
    rho, u1, u2, u3, _ = eval_flow_3d_arrays(c3, a, adot, 0.5,
                                             pts[:, 0], pts[:, 1], pts[:, 2])
    r2 = np.sum(pts ** 2, axis=1)
    s = r2 / a[0] ** 2
    slope = -c3.xi3 * (c3.gamma - 1) / (2 * c3.K * c3.gamma)
    f = np.maximum(slope * s + c3.alpha3, 0.0) ** (1 / (c3.gamma - 1))
    assert np.max(np.abs(rho - f / a[0] ** 3)) <= 1e-13
    radial = (u1 * pts[:, 0] + u2 * pts[:, 1] + u3 * pts[:, 2])
    assert np.max(np.abs(radial - (adot[0] / a[0]) * r2)) <= 1e-13


def test_3d_pure_drift_residual():
    c3 = ThreeAxisParams(gamma=1.4, K=1.0, xi3=0.0, alpha3=1.0,
                            drift0=(0.1, 0.0, -0.2), drift_rate=(0.3, -0.1, 0.05))
    sc = integrate_scales_3d(c3, 1.0)
    rep = euler_residual_3d(c3, sc, 0.5, Grid3Spec(half_width=0.4, n=7, h=1e-3, h_t=5e-4),
                            tolerance=1e-8)
    assert rep.verdict == "PASS"
    assert rep.max_normalized <= 1e-8


ANISO = ThreeAxisParams(gamma=1.4, K=1.0, xi3=1.0, alpha3=1.0,
                           a_init=(1.0, 1.2, 0.8), drift_rate=(0.1, 0.0, -0.05))


def test_3d_anisotropic_with_drift_passes():
    sc = integrate_scales_3d(ANISO, 1.0)
    rep = euler_residual_3d(ANISO, sc, 0.5, Grid3Spec(half_width=0.4, n=7, h=1e-3, h_t=5e-4),
                            tolerance=1e-6)
    assert rep.verdict == "PASS"
    study = residual_convergence(
        lambda h: euler_residual_3d(ANISO, sc, 0.5,
                                    Grid3Spec(half_width=0.4, n=7, h=h, h_t=h / 2)),
        [4e-3, 2e-3, 1e-3])
    assert not study["not_applicable"]
    assert 1.8 <= study["order"] <= 4.2


def test_3d_permutation_equivariance():
    perm = (2, 0, 1)
    c3 = ANISO
    c3p = ThreeAxisParams(gamma=c3.gamma, K=c3.K, xi3=c3.xi3, alpha3=c3.alpha3,
                             a_init=tuple(c3.a_init[i] for i in perm),
                             adot_init=tuple(c3.adot_init[i] for i in perm),
                             drift0=tuple(c3.drift0[i] for i in perm),
                             drift_rate=tuple(c3.drift_rate[i] for i in perm))
    sc = integrate_scales_3d(c3, 1.0)
    scp = integrate_scales_3d(c3p, 1.0)
    grid = Grid3Spec(half_width=0.4, n=5, h=1e-3, h_t=5e-4)
    rep = euler_residual_3d(c3, sc, 0.5, grid)
    repp = euler_residual_3d(c3p, scp, 0.5, grid)
    names = ("momentum-x", "momentum-y", "momentum-z")
    for axis_new, axis_old in enumerate(perm):
        a = repp.equations[names[axis_new]]["max"]
        b = rep.equations[names[axis_old]]["max"]
        assert abs(a - b) <= 1e-13
    assert abs(repp.equations["mass"]["max"] - rep.equations["mass"]["max"]) <= 1e-13


# ----------------------------------------------------------- convergence studies

def test_convergence_order_2d(generic_traj):
    study = residual_convergence(
        lambda h: euler_residual_2d(GENERIC, generic_traj, 0.5, grid_2d(h)),
        [4e-3, 2e-3, 1e-3])
    assert not study["not_applicable"]
    assert 1.8 <= study["order"] <= 4.2


def test_convergence_negative_control_plateaus(generic_traj):
    exact = euler_residual_2d(GENERIC, generic_traj, 0.5, grid_2d(5e-4)).max_normalized
    study = residual_convergence(
        lambda h: euler_residual_2d(GENERIC, generic_traj, 0.5, grid_2d(h),
                                    density_factor=1.01),
        [4e-3, 2e-3, 1e-3, 5e-4])
    assert abs(study["order"]) <= 0.5
    assert study["residuals"][-1] >= 100.0 * exact


def test_convergence_not_applicable_for_machine_zero():
    p = SolutionParams(gamma=1.4, K=1, xi=0.0, lam=0.0, alpha=1, a0=1, a1=0)
    traj = integrate(p, IntegrationConfig(t_end=1.0))
    grid = lambda h: GridSpec(kind="box", x_lo=-1, x_hi=1, y_lo=-1, y_hi=1,
                              nx=6, ny=6, h=h, h_t=h / 2)
    study = residual_convergence(
        lambda h: euler_residual_2d(p, traj, 0.5, grid(h)), [4e-3, 2e-3, 1e-3])
    assert study["not_applicable"]
    assert study["order"] is None


def test_convergence_ladder_validation(generic_traj):
    run = lambda h: 1.0
    with pytest.raises(LadderTooShort):
        residual_convergence(run, [1e-3, 5e-4])
    with pytest.raises(ValueError):
        residual_convergence(run, [1e-3, 2e-3, 5e-4])
