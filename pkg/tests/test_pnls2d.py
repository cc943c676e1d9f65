import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from darkfront import interface as itf
from darkfront import pnls2d as p2
from darkfront.params import ScaledParams
from darkfront.spectra import essential_dispersion

SP = ScaledParams(beta=2.96, mu=0.0405, theta=0.0, eps=0.3, box=12.0)


@pytest.fixture(scope="module")
def grid():
    return p2.build_grid2d(12.0, 256, 0.3)


@pytest.fixture(scope="module")
def grid_small():
    # smaller box keeps spacing <= eps/4 at n = 128
    return p2.build_grid2d(9.0, 128, 0.3)


def test_grid_validation():
    with pytest.raises(ValueError, match="power of two"):
        p2.PeriodicGrid2D(box=12.0, n=100)
    with pytest.raises(ValueError, match="resolve"):
        p2.build_grid2d(12.0, 128, 0.3)   # spacing 0.094 > eps/4


# ------------------------------------------------------------- residual

def test_residual_uniform_states(grid_small):
    for val in [(1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)]:
        st = p2.uniform_state(grid_small, val)
        fp, fq = p2.residual(st, SP)
        assert np.abs(fp).max() == 0.0
        assert np.abs(fq).max() == 0.0


def test_residual_rejects_nonfinite(grid_small):
    st = p2.uniform_state(grid_small, (1.0, 0.0))
    st.p[0, 0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        p2.residual(st, SP)


def test_residual_stripe_front(grid):
    st = p2.stripe_ic(SP, grid)
    fp, fq = p2.residual(st, SP)
    X, _ = grid.axes()
    away = (X > 0.5) & (X < grid.box - 0.5)
    assert np.abs(fp[away]).max() < 1e-5
    assert np.abs(fq[away]).max() < 1e-5


# ------------------------------------------------------------- stepping

def test_equilibrium_fixed_thousand_steps(grid_small):
    cfg = p2.SolverConfig(dt=0.01, t_end=10.0, snapshot_every=10.0)
    stepper = p2.Stepper(grid_small, SP, cfg)
    for val in [(1.0, 0.0), (-1.0, 0.0)]:
        out = stepper.advance(p2.uniform_state(grid_small, val), 1000)
        assert np.abs(out.p - val[0]).max() < 1e-12
        assert np.abs(out.q - val[1]).max() < 1e-12


def test_step_wrapper_advances_tau(grid_small):
    cfg = p2.SolverConfig(dt=0.02, t_end=1.0, snapshot_every=1.0)
    st = p2.uniform_state(grid_small, (1.0, 0.0))
    out = p2.step(st, SP, cfg)
    assert out.tau == pytest.approx(0.02)


def test_uniform_dynamics_match_ode_oracle(grid_small):
    # spatially uniform fields follow the k = 0 ODE; compare against a
    # high-accuracy integration of the same right-hand side and check
    # second-order convergence of the time stepper
    sp = ScaledParams(beta=3.0, mu=0.2, theta=0.0, eps=0.3, box=9.0)

    def rhs(t, y):
        pv, qv = y
        usq = pv * pv + qv * qv
        return [-(1.0 - sp.mu) * qv + 2.0 * usq * qv,
                2.0 * pv - sp.beta * qv - 2.0 * usq * pv]

    sol = solve_ivp(rhs, (0.0, 2.0), [0.9, 0.05], rtol=1e-12, atol=1e-14)

    errs = []
    for dt in (0.005, 0.0025):
        cfg = p2.SolverConfig(dt=dt, t_end=2.0, snapshot_every=1.0,
                              dealias=False)
        st = p2.uniform_state(grid_small, (0.9, 0.05))
        out = p2.Stepper(grid_small, sp, cfg).advance(st, int(round(2.0 / dt)))
        errs.append(np.hypot(out.p[3, 7] - sol.y[0, -1],
                             out.q[3, 7] - sol.y[1, -1]))
    assert errs[0] < 1e-5
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)


def test_far_field_decay_exponents(grid_small):
    # uniform perturbations about (1, 0) decay at the s = 0 dispersion roots
    sp = ScaledParams(beta=3.0, mu=0.0, theta=0.0, eps=0.3, box=9.0)
    cfg = p2.SolverConfig(dt=0.005, t_end=1.0, snapshot_every=1.0)
    stepper = p2.Stepper(grid_small, sp, cfg)
    st = p2.uniform_state(grid_small, (1.0, 0.0))
    st.p += 1e-6
    st.q += 5e-7
    traj = []
    cur = st
    for _ in range(400):
        traj.append((cur.p[0, 0] - 1.0, cur.q[0, 0]))
        cur = stepper.advance(cur, 1)
    traj = np.array(traj)
    A = traj[1:].T @ np.linalg.pinv(traj[:-1].T)
    lam = np.sort_complex(np.log(np.linalg.eigvals(A)) / cfg.dt)
    ref = np.sort_complex(np.array(essential_dispersion(0.0, 0.0, 3.0)))
    for got, want in zip(lam, ref):
        assert abs(got.real - want.real) <= 0.02 * abs(want.real)
        assert abs(got.imag - want.imag) <= 0.02 * max(abs(want.imag), 1e-12)


def test_mirror_symmetry_preserved(grid):
    # the wobble initial data is mirror-symmetric about the vertical axis
    ic = p2.perturbed_circle_ic(SP, grid)
    n = grid.n

    def mirror(f):
        return np.roll(f[:, ::-1], 1, axis=1)  # x -> L - x on the node set

    assert np.abs(ic.p - mirror(ic.p)).max() < 1e-14
    cfg = p2.SolverConfig(dt=0.01, t_end=10.0, snapshot_every=10.0)
    out = p2.Stepper(grid, SP, cfg).advance(ic, 1000)
    assert np.abs(out.p - mirror(out.p)).max() < 1e-8
    assert np.abs(out.q - mirror(out.q)).max() < 1e-8


def test_blow_up_detector(grid_small):
    cfg = p2.SolverConfig(dt=0.5, t_end=10.0, snapshot_every=1.0)
    st = p2.uniform_state(grid_small, (3.0, 3.0))
    stepper = p2.Stepper(grid_small, SP, cfg)
    with pytest.raises(p2.BlowUpError):
        stepper.advance(st, 200)


# ------------------------------------------------------------- initial data

def test_perturbed_circle_geometry(grid):
    ic = p2.perturbed_circle_ic(SP, grid)
    cs = itf.extract_contours(ic.p, grid.box)
    assert len(cs) == 1
    pts = cs[0].points - grid.box / 2.0
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    r = np.hypot(pts[:, 0], pts[:, 1])
    rt = 3.0 + 0.1 * (np.sin(3 * theta) - np.sin(7 * theta) ** 2)
    assert np.abs(r - rt).max() <= grid.spacing
    # spot values of the radius function
    assert rt[np.argmin(np.abs(theta))] == pytest.approx(3.0, abs=2e-2)
    idx90 = np.argmin(np.abs(theta - np.pi / 2))
    assert rt[idx90] == pytest.approx(2.8, abs=2e-2)
    # initial contour length against the arclength quadrature oracle
    def integrand(t):
        rr = 3.0 + 0.1 * (np.sin(3 * t) - np.sin(7 * t) ** 2)
        dr = 0.1 * (3 * np.cos(3 * t) - 7 * np.sin(14 * t))
        return np.hypot(rr, dr)
    ref = quad(integrand, 0, 2 * np.pi, limit=400)[0]
    assert itf.curve_length(cs[0]) == pytest.approx(ref, rel=0.01)


def test_perturbed_circle_rejects_small_box():
    sp = ScaledParams(beta=2.96, mu=0.0405, theta=0.0, eps=0.3, box=7.0)
    grid = p2.build_grid2d(7.0, 128, 0.3)
    with pytest.raises(ValueError, match="box too small"):
        p2.perturbed_circle_ic(sp, grid)


def test_theta_magnitude_far_field(grid):
    # |Theta| vanishes on the interface and approaches |A| in the far field
    ic = p2.perturbed_circle_ic(SP, grid)
    cfg = p2.SolverConfig(dt=0.01, t_end=5.0, snapshot_every=5.0)
    out = p2.Stepper(grid, SP, cfg).advance(ic, 500)
    amp = out.theta_magnitude(SP)
    X, Y = grid.axes()
    r = np.hypot(X - grid.box / 2, Y - grid.box / 2)
    far = (r > 3.1 + 5 * SP.eps) | (r < 2.8 - 5 * SP.eps)
    target = 2.0 / np.sqrt(SP.beta)
    assert np.abs(amp[far] - target).max() < 1e-3
    cs = itf.extract_contours(out.p, grid.box)
    c = max(cs, key=lambda c: len(c.points))
    # sample |Theta| on the extracted zero contour by nearest grid nodes
    ii = np.round(c.points[:, 1] / grid.spacing).astype(int) % grid.n
    jj = np.round(c.points[:, 0] / grid.spacing).astype(int) % grid.n
    assert np.abs(amp[ii, jj]).max() < 0.25 * target


# ------------------------------------------------------------- simulate

def test_simulate_record_and_series(grid):
    cfg = p2.SolverConfig(dt=0.01, t_end=2.0, snapshot_every=0.5,
                          store_fields=True)
    ic = p2.perturbed_circle_ic(SP, grid)
    rec = p2.simulate(ic, SP, cfg)
    assert len(rec.times) == 5
    assert rec.series is not None
    assert len(rec.series.lengths) == 5
    assert rec.series.component_count[0] == 1
    assert len(rec.snapshots) == 5
    assert rec.final_state.tau == pytest.approx(2.0)


def test_simulate_collapse_event(grid_small):
    # a tiny bubble shrinks and disappears: collapse must be recorded
    sp = ScaledParams(beta=3.0, mu=0.5, theta=0.0, eps=0.3, box=9.0)
    X, Y = grid_small.axes()
    r = np.hypot(X - 4.5, Y - 4.5)
    p = np.tanh((r - 0.45) / sp.eps)
    st = p2.State2D(p=p, q=np.zeros_like(p), tau=0.0, grid=grid_small)
    cfg = p2.SolverConfig(dt=0.01, t_end=40.0, snapshot_every=2.0)
    rec = p2.simulate(st, sp, cfg)
    assert any(name == "collapse" for _, name in rec.events)


# ------------------------------------------------------------- refinement

@pytest.mark.slow
def test_dt_refinement_interface_length(grid):
    # halving dt changes the interface length at tau = 100 by < 0.1%
    lengths = {}
    for dt in (0.01, 0.005):
        cfg = p2.SolverConfig(dt=dt, t_end=100.0, snapshot_every=100.0)
        ic = p2.perturbed_circle_ic(SP, grid)
        out = p2.Stepper(grid, SP, cfg).advance(ic, int(round(100.0 / dt)))
        c = itf.extract_contours(out.p, grid.box)[0]
        lengths[dt] = itf.curve_length(c)
    rel = abs(lengths[0.01] - lengths[0.005]) / lengths[0.005]
    assert rel < 1e-3


@pytest.mark.slow
def test_grid_refinement_interface_length(grid):
    # doubling the grid changes the interface length at tau = 100 by < 0.5%
    lengths = {}
    for n in (256, 512):
        g = p2.build_grid2d(12.0, n, 0.3)
        cfg = p2.SolverConfig(dt=0.01, t_end=100.0, snapshot_every=100.0)
        ic = p2.perturbed_circle_ic(SP, g)
        out = p2.Stepper(g, SP, cfg).advance(ic, 10000)
        c = itf.extract_contours(out.p, g.box)[0]
        lengths[n] = itf.curve_length(c)
    rel = abs(lengths[256] - lengths[512]) / lengths[512]
    assert rel < 5e-3
