import numpy as np
import pytest

from darkfront import line1d, spectra
from darkfront.line1d import assemble, front_profiles
from conftest import quad_norm


# ---------------------------------------------------------- dispersion

def test_essential_dispersion_double_root():
    r1, r2 = spectra.essential_dispersion(0.0, 0.0, 4.0)
    assert r1 == pytest.approx(-2.0, abs=1e-14)
    assert r2 == pytest.approx(-2.0, abs=1e-14)


def test_essential_dispersion_split_roots():
    r1, r2 = spectra.essential_dispersion(0.0, 0.0, 5.0)
    assert r1 == pytest.approx(-1.0, abs=1e-14)
    assert r2 == pytest.approx(-4.0, abs=1e-14)


def test_essential_dispersion_complex_case():
    r1, r2 = spectra.essential_dispersion(2.0, 3.0, 3.0)
    assert r1.real == pytest.approx(-1.5, abs=1e-14)
    assert r2.real == pytest.approx(-1.5, abs=1e-14)
    assert r1.imag != 0.0


def test_dispersion_max_at_s_zero():
    for mu, beta in [(0.0, 3.0), (1.5, 2.0), (-0.5, 4.0)]:
        at0 = max(r.real for r in spectra.essential_dispersion(0.0, mu, beta))
        for s in (0.3, 1.0, 2.5, 7.0):
            rs = max(r.real for r in spectra.essential_dispersion(s, mu, beta))
            assert rs <= at0 + 1e-12


def test_lambda_ess_values():
    assert spectra.lambda_ess(0.0, 5.0) == pytest.approx(-1.0, abs=1e-14)
    assert spectra.lambda_ess(0.0, 4.0) == pytest.approx(-2.0, abs=1e-14)
    assert spectra.lambda_ess(3.0, 3.0) == pytest.approx(-1.5, abs=1e-14)
    assert spectra.lambda_ess(0.5, 3.0) < 0.0


def test_far_field_symbol_matrix_consistency():
    # eigenvalues of [[0, s^2+1+mu], [-(s^2+4), -beta]] match the formula
    for s in (0.0, 0.7, 2.2):
        for mu, beta in [(0.2, 3.0), (-0.4, 2.0)]:
            m = np.array([[0.0, s**2 + 1.0 + mu], [-(s**2 + 4.0), -beta]])
            ev = sorted(np.linalg.eigvals(m), key=lambda z: (z.real, z.imag))
            ref = sorted(spectra.essential_dispersion(s, mu, beta),
                         key=lambda z: (z.real, z.imag))
            assert np.allclose(ev, ref, atol=1e-12)


# ---------------------------------------------------------- rho_star

def test_rho_star_positive_window(grid_fast):
    for mu in (-0.2, 0.0, 1.0, 3.0):
        assert spectra.rho_star(mu, 3.0, grid_fast) > 0.0


def test_rho_star_projected_pencil_oracle(grid_fast):
    # brute-force oracle: project C and D^-1 onto an explicit orthonormal
    # basis of the constraint complement and take the smallest eigenvalue
    g = grid_fast
    mu, beta = 3.0, 3.0
    c = spectra._constraint_vector(mu, beta, g)
    c = c / np.linalg.norm(c)
    rng = np.random.default_rng(5)
    basis, _ = np.linalg.qr(
        np.column_stack([c, rng.standard_normal((g.n, 40))]))
    q = basis[:, 1:]  # 40 directions orthogonal to c
    C = assemble("C", mu, beta, g)
    D = assemble("D", mu, beta, g)
    A = q.T @ (C.dense() @ q)
    Dinv_q = line1d.solve_D_values(D, q)
    B = q.T @ Dinv_q
    B = 0.5 * (B + B.T)
    from scipy.linalg import eigh
    approx_min = eigh(A, B, eigvals_only=True)[0]
    rho = spectra.rho_star(mu, beta, g)
    # a 40-dim Rayleigh-Ritz restriction can only overestimate the min
    assert rho <= approx_min + 1e-8
    assert rho > 0.0
    # D positive definite on the complement at mu = 3
    assert np.all(np.linalg.eigvalsh(B) > 0.0)


@pytest.mark.slow
def test_rho_star_refinement(grid_default):
    fine = line1d.build_grid(20.0, 4096)
    a = spectra.rho_star(1.0, 3.0, grid_default)
    b = spectra.rho_star(1.0, 3.0, fine)
    assert abs(a - b) < 1e-5


# ---------------------------------------------------------- kernel pair

def test_kernel_pair_residuals(grid_default):
    for mu in (0.5, -0.2):
        psi0, dag = spectra.kernel_pair(mu, 3.0, grid_default)
        L = assemble("L", mu, 3.0, grid_default)
        assert L.apply(psi0).norm() < 1e-7
        assert L.apply_adjoint(dag).norm() < 1e-7


def test_kernel_pair_mu_zero_form(grid_default):
    g = grid_default
    psi0, dag = spectra.kernel_pair(0.0, 3.0, g)
    _, psi, dphi = front_profiles(g)
    ref = psi.values / quad_norm(g, psi.values)
    assert quad_norm(g, dag.first.values - ref) < 1e-12
    assert quad_norm(g, dag.second.values) == 0.0
    ref0 = dphi.values / quad_norm(g, dphi.values)
    assert quad_norm(g, psi0.first.values - ref0) < 1e-12


def test_kernel_pair_continuity_through_zero(grid_default):
    _, dag_eps = spectra.kernel_pair(1e-4, 3.0, grid_default)
    _, dag_0 = spectra.kernel_pair(0.0, 3.0, grid_default)
    diff = np.concatenate([
        dag_eps.first.values - dag_0.first.values,
        dag_eps.second.values - dag_0.second.values,
    ])
    w2 = np.tile(grid_default.weights, 2)
    assert np.sqrt(np.sum(w2 * diff**2)) < 1e-2


# ---------------------------------------------------------- point spectrum

@pytest.fixture(scope="module")
def report_mu05(grid_fast):
    return spectra.point_spectrum(0.5, 3.0, grid_fast)


def test_point_spectrum_kernel_and_gap(report_mu05):
    rep = report_mu05
    assert rep.kernel_dim == 1
    assert rep.kernel_eigenvalue < 1e-6
    assert rep.gap < 0.0
    assert rep.gap <= rep.spectral_bound + spectra.GAP_TOL
    assert rep.certified


def test_point_spectrum_kernel_alignment(report_mu05):
    # the zero mode aligns with (phi', 0) after normalization
    assert 1.0 - report_mu05.kernel_alignment < 1e-5


def test_point_spectrum_contains_minus_beta(report_mu05):
    # the lambda = -beta branch of the nonzero-eigenvalue dichotomy
    ev = report_mu05.eigenvalues
    assert np.min(np.abs(ev + 3.0)) < 1e-5


def test_point_spectrum_negative_mu(grid_fast):
    rep = spectra.point_spectrum(-0.2, 3.0, grid_fast)
    assert rep.kernel_dim == 1
    assert rep.gap < 0.0


def test_pencil_relation_for_eigenvalues(report_mu05, grid_fast):
    # lambda(lambda+beta) = -<C P1,P1>/<D^-1 P1,P1> for nonzero eigenvalues
    g = grid_fast
    mu, beta = 0.5, 3.0
    op = assemble("L", mu, beta, g)
    C = assemble("C", mu, beta, g)
    D = assemble("D", mu, beta, g)
    ev = report_mu05.eigenvalues
    nonzero = ev[(np.abs(ev) > 1e-3) & (np.abs(ev + beta) > 1e-3)]
    pick = nonzero[np.argsort(-nonzero.real)][:4:2]  # two representatives
    for lam in pick:
        vec = spectra.eigenvector_for(op, lam, g)
        p1 = vec[: g.n]
        cp = np.vdot(p1, C.dense() @ p1).real
        dinv_p1 = line1d.solve_D_values(D, np.column_stack([p1.real, p1.imag]))
        dp = (np.vdot(p1.real, dinv_p1[:, 0]) + np.vdot(p1.imag, dinv_p1[:, 1])).real
        rho1 = cp / dp
        resid = lam * (lam + beta) + rho1
        assert abs(resid) <= 1e-4 * max(1.0, abs(rho1))


def test_truncation_stability_of_certification():
    # the reported certification statistics are insensitive to widening Z
    g20 = line1d.build_grid(20.0, 1024)
    g30 = line1d.build_grid(30.0, 1024)
    r20 = spectra.point_spectrum(0.5, 3.0, g20)
    r30 = spectra.point_spectrum(0.5, 3.0, g30)
    assert abs(r20.kernel_eigenvalue - r30.kernel_eigenvalue) < 1e-6
    assert abs(r20.gap - r30.gap) < 1e-6


def test_report_json_roundtrip(tmp_path, report_mu05):
    path = tmp_path / "report.json"
    report_mu05.to_json(path)
    import json

    data = json.loads(path.read_text())
    assert data["kernel_dim"] == 1
    assert len(data["eigenvalues"]) <= 64
    # eigenvalues sorted by descending real part
    reals = [e[0] for e in data["eigenvalues"]]
    assert reals == sorted(reals, reverse=True)
