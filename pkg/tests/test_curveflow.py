import numpy as np
import pytest

from darkfront import curveflow as cf
from darkfront.coefficients import CoefficientRecord

PURE = CoefficientRecord(mu=0.0, beta=3.0, alpha0=1.0, nu=0.0, zeta=0.0)
HEADLINE = CoefficientRecord(mu=0.0405, beta=2.96, alpha0=0.014764,
                             nu=0.363808, zeta=0.047384)
AGAINST = CoefficientRecord(mu=-0.503, beta=3.50, alpha0=-0.159797,
                            nu=0.345105, zeta=0.105806)


def _cfl_dt(alpha0, length, m, safety=0.25):
    kmax = np.pi * m / length
    return safety * 2.0 / (abs(alpha0) * kmax**2)


def wobble_curve(m=256, radius=3.0, amp=0.1, center=(6.0, 6.0)):
    t = 2 * np.pi * np.arange(m) / m
    r = radius + amp * (np.sin(3 * t) - np.sin(7 * t) ** 2)
    return cf.ClosedCurve(markers=np.column_stack(
        [center[0] + r * np.cos(t), center[1] + r * np.sin(t)]))


# ------------------------------------------------------------ velocity

def test_circle_velocity_uniform():
    v = cf.normal_velocity(cf.circle(2.0, 128), HEADLINE, 0.3)
    pred = -HEADLINE.alpha0 / 2.0 + 0.09 * HEADLINE.zeta / 8.0
    assert v.mean() == pytest.approx(pred, rel=1e-10)
    assert v.max() - v.min() < 1e-10


def test_equilibrium_circle_zero_velocity():
    # residual floor set by Lap_s amplification of spectral rounding in kappa
    rstar = 0.3 * np.sqrt(HEADLINE.zeta / HEADLINE.alpha0)
    v = cf.normal_velocity(cf.circle(rstar, 128), HEADLINE, 0.3)
    assert np.abs(v).max() < 1e-9


def test_velocity_matches_fd_curvature_oracle():
    # eps = 0: V = -alpha0 kappa; check against an independent
    # finite-difference curvature on the raw markers
    m = 512
    t = 2 * np.pi * np.arange(m) / m
    r = 2.0 + 0.2 * np.sin(4 * t)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    curve = cf.ClosedCurve(markers=pts)
    v = cf.normal_velocity(curve, PURE, 0.0)
    xp = np.gradient(np.concatenate([pts[-3:, 0], pts[:, 0], pts[:3, 0]]))[3:-3]
    yp = np.gradient(np.concatenate([pts[-3:, 1], pts[:, 1], pts[:3, 1]]))[3:-3]
    xpp = np.gradient(np.concatenate([xp[-3:], xp, xp[:3]]))[3:-3]
    ypp = np.gradient(np.concatenate([yp[-3:], yp, yp[:3]]))[3:-3]
    kappa_fd = (xp * ypp - yp * xpp) / (xp**2 + yp**2) ** 1.5
    assert np.abs(v + kappa_fd).max() <= 0.005 * np.abs(kappa_fd).max()


def test_velocity_requires_simple_curve():
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False) + 0.01
    f8 = np.column_stack([2 * np.sin(2 * t), 2 * np.sin(t)])
    with pytest.raises(cf.SelfIntersectionError):
        cf.normal_velocity(cf.ClosedCurve(markers=f8), PURE, 0.0)


def test_velocity_requires_enough_markers():
    with pytest.raises(ValueError, match="64"):
        cf.normal_velocity(cf.circle(1.0, 32), PURE, 0.0)


# ------------------------------------------------------------ length rate

def test_length_rate_integration_by_parts_consistency():
    curve = wobble_curve()
    for rec in (HEADLINE, AGAINST):
        a = cf.length_rate(curve, rec, 0.3)
        b = cf.length_rate_direct(curve, rec, 0.3)
        assert abs(a - b) <= 1e-6 * abs(a)


def test_length_rate_circle_formula():
    for radius in (1.0, 3.0):
        rate = cf.length_rate(cf.circle(radius, 128), HEADLINE, 0.3)
        pred = -2 * np.pi * (HEADLINE.alpha0 / radius
                             - 0.09 * HEADLINE.zeta / radius**3)
        assert rate == pytest.approx(pred, rel=1e-9)


def test_length_rate_zero_at_equilibrium():
    rstar = 0.3 * np.sqrt(HEADLINE.zeta / HEADLINE.alpha0)
    rate = cf.length_rate(cf.circle(rstar, 128), HEADLINE, 0.3)
    assert abs(rate) < 1e-8


def test_evolve_and_differentiate_matches_length_rate():
    curve = wobble_curve(m=256, radius=2.0, amp=0.05)
    dT = 2e-5
    traj = cf.evolve(curve, HEADLINE, 0.3, dT=dT, T_end=40 * dT,
                     record_every=dT)
    rate_fd = np.gradient(np.array(traj.lengths), np.array(traj.times))
    rate_model = cf.length_rate(
        cf.ClosedCurve(markers=cf._redistribute(curve.markers)), HEADLINE, 0.3)
    assert rate_fd[1] == pytest.approx(rate_model, rel=0.01)


# ------------------------------------------------------------ trajectories

def test_circle_exact_shrink_law():
    # R(T)^2 = R0^2 - 2 alpha0 T to 1e-4 relative, marched down to R <= 0.2;
    # dT is re-tightened per segment as the shrinking radius raises k_max
    m = 128
    R = 1.0
    T = 0.0
    errs = []
    while R > 0.2:
        seg = min(0.06, (R**2 - 0.039) / 2.0)
        dT = _cfl_dt(1.0, 2 * np.pi * max(R - np.sqrt(2 * seg), 0.15), m)
        traj = cf.evolve(cf.circle(R, m), PURE, 0.0, dT=dT, T_end=seg,
                         record_every=seg)
        T += traj.times[-1]
        R = traj.lengths[-1] / (2 * np.pi)
        exact = np.sqrt(1.0 - 2.0 * T)
        errs.append(abs(R - exact) / exact)
    assert R <= 0.2
    assert max(errs) < 1e-4


def test_marker_convergence_second_order():
    def err(m):
        dT = _cfl_dt(1.0, 2 * np.pi, m)
        traj = cf.evolve(cf.circle(1.0, m), PURE, 0.0, dT=dT, T_end=0.32,
                         record_every=0.32)
        return abs(traj.lengths[-1] / (2 * np.pi) - np.sqrt(1 - 0.64))

    e1, e2 = err(128), err(256)
    assert e1 / e2 >= 3.5


def test_gauss_bonnet_along_trajectory():
    curve = wobble_curve(m=256, radius=2.5)
    traj_curves = []
    traj = cf.evolve(curve, HEADLINE, 0.3, dT=5e-4, T_end=0.2,
                     record_every=0.05, store_curves=True)
    for _, markers in traj.curves:
        c = cf.ClosedCurve(markers=markers)
        assert cf.total_turning(c) == pytest.approx(2 * np.pi, abs=1e-6)


def test_equal_spacing_maintained():
    curve = wobble_curve(m=256)
    traj = cf.evolve(curve, AGAINST, 0.3, dT=5e-4, T_end=0.5,
                     record_every=0.5, store_curves=True)
    final = cf.ClosedCurve(markers=traj.curves[-1][1])
    assert final.spacing_deviation() < 0.01


def test_growth_regime_regularized():
    # alpha0 < 0: length grows while nu > 0 keeps curvature bounded
    curve = wobble_curve(m=512)
    traj = cf.evolve(curve, AGAINST, 0.3, dT=5e-4, T_end=3.0,
                     record_every=0.5)
    lengths = np.array(traj.lengths)
    assert lengths[-1] > lengths[0]
    assert max(abs(k) for k in traj.kappa_max) < 5.0
    assert max(abs(k) for k in traj.kappa_min) < 5.0


def test_self_intersection_halts():
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False) + 0.01
    f8 = np.column_stack([2 * np.sin(2 * t), 2 * np.sin(t)])
    # fed a non-simple curve, evolve halts immediately with the event
    traj = cf.evolve(cf.ClosedCurve(markers=np.column_stack(
        [4 + f8[:, 0], 4 + f8[:, 1]])), PURE, 0.0, dT=1e-5, T_end=1e-3)
    assert traj.events and traj.events[0][1] == "self_intersection"


# ------------------------------------------------------------ circle ODE

def test_circle_ode_closed_form():
    T, R = cf.circle_ode(3.0, PURE, eps=0.0, T_end=4.0)
    assert np.abs(R**2 - (9.0 - 2.0 * T)).max() < 1e-8


def test_circle_ode_monotone_decay_to_equilibrium():
    rstar = 0.3 * np.sqrt(HEADLINE.zeta / HEADLINE.alpha0)
    T, R = cf.circle_ode(3.0, HEADLINE, eps=0.3, T_end=400.0)
    assert np.all(np.diff(R) <= 1e-12)
    assert R[-1] == pytest.approx(rstar, rel=1e-3)
    # starting below R*: monotone growth toward it
    T2, R2 = cf.circle_ode(0.8 * rstar, HEADLINE, eps=0.3, T_end=50.0)
    assert np.all(np.diff(R2) >= -1e-12)
    assert R2[-1] <= rstar + 1e-6


def test_circle_ode_growth_when_alpha_negative():
    T, R = cf.circle_ode(1.0, AGAINST, eps=0.3, T_end=5.0)
    assert np.all(np.diff(R) > 0.0)


def test_circle_ode_collapse_event():
    T, R = cf.circle_ode(0.5, PURE, eps=0.0, T_end=10.0)
    # R^2 = 0.25 - 2T hits the collapse radius before T_end
    assert T[-1] < 0.2
    assert R[-1] == pytest.approx(0.02, abs=1e-6)


def test_trajectory_csv(tmp_path):
    traj = cf.evolve(cf.circle(1.0, 128), PURE, 0.0, dT=1e-5, T_end=1e-3,
                     record_every=5e-4)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "T,length,kappa_min,kappa_max,event"
    assert len(lines) >= 3
