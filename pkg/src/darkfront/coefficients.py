"""Curvature-flow coefficients alpha0, nu, zeta of the normal-velocity law.

The interface moves with normal velocity

    V = -alpha0 kappa + eps^2 (nu Lap_s kappa + zeta kappa^3) + O(eps^4),

where the coefficients come from Fredholm solvability of the inner expansion
about the tanh front.  With g = D^{-1} phi' and the adjoint kernel
Psi0+ = (beta g, phi')  (or (sech, 0) at mu = 0):

    alpha0 = <phi', Psi0+_2> / <phi', Psi0+_1>
    nu     = <W1, Psi0+> / <phi', Psi0+_1>
    zeta   = <W2, Psi0+> / <phi', Psi0+_1>

with W1, W2 assembled termwise from the first- and second-order correction
profiles U1 = (p1, q1) (even in z) and U2 = (p2, q2) (odd in z).  All solves
and derivatives act on one shared grid so the solvability identities hold at
the discrete level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import line1d
from .line1d import (
    LineGrid,
    ScalarProfile,
    VectorProfile,
    MU_BRANCH_TOL,
)
from .params import figure_path_beta

PARITY_TOL = 1e-8
SOLVABILITY_TOL = 1e-9
ROUTE_AGREEMENT_TOL = 1e-6


@dataclass
class CoefficientRecord:
    """One (mu, beta) point of the coefficient sweep."""

    mu: float
    beta: float
    alpha0: float
    nu: float
    zeta: float
    diagnostics: dict = field(default_factory=dict)
    rho_star: float | None = None
    lambda_ess: float | None = None
    gap: float | None = None

    @property
    def equilibrium_radius_factor(self) -> float:
        """R*/eps = sqrt(zeta/alpha0); requires alpha0, zeta > 0."""
        if self.alpha0 <= 0.0 or self.zeta <= 0.0:
            return float("nan")
        return float(np.sqrt(self.zeta / self.alpha0))


class _Workspace:
    """Shared discrete machinery for one grid (C operator, stencils, fronts)."""

    def __init__(self, grid: LineGrid):
        self.grid = grid
        self.phi, self.psi, self.dphi = line1d.front_profiles(grid)
        self.Dz = line1d.deriv_matrix(grid, 1)
        self.C = line1d.assemble("C", 0.0, 1.0, grid)
        self._kernel_unit = self.dphi.values / np.linalg.norm(self.dphi.values)
        self.norm_fp2 = line1d.inner(self.dphi, self.dphi)
        self.ip_fp_psi = line1d.inner(self.dphi, self.psi)

    def ip(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(self.grid.weights * a * b))

    def csolve(self, values: np.ndarray) -> np.ndarray:
        """Pseudo-inverse C solve: project off phi', return x with x _|_ phi'."""
        v = values - self._kernel_unit * np.dot(self._kernel_unit, values)
        return line1d.solve_C(self.C, ScalarProfile(self.grid, v)).values

    def dsolve(self, mu: float, beta: float, values: np.ndarray) -> np.ndarray:
        D = line1d.assemble("D", mu, beta, self.grid)
        prof = ScalarProfile(self.grid, values)
        if abs(mu) < MU_BRANCH_TOL:
            return line1d.solve_D_constrained(D, prof).values
        return line1d.solve_D(D, prof).values


_WORKSPACES: dict[tuple[float, int], _Workspace] = {}


def _workspace(grid: LineGrid | None) -> _Workspace:
    if grid is None:
        grid = line1d.build_grid()
    key = (grid.half_width, grid.n)
    ws = _WORKSPACES.get(key)
    if ws is None:
        ws = _Workspace(grid)
        _WORKSPACES[key] = ws
    return ws


def adjoint_kernel_pair(mu: float, beta: float, grid: LineGrid | None = None):
    """(Psi0+_1, Psi0+_2) spanning ker L^T: (beta D^-1 phi', phi'), or (sech, 0)."""
    ws = _workspace(grid)
    if abs(mu) < MU_BRANCH_TOL:
        return ws.psi.values.copy(), np.zeros(ws.grid.n)
    g = ws.dsolve(mu, beta, ws.dphi.values)
    return beta * g, ws.dphi.values.copy()


def _denominator(ws: _Workspace, psi_dag_1: np.ndarray) -> float:
    return ws.ip(ws.dphi.values, psi_dag_1)


def alpha0(mu: float, beta: float, grid: LineGrid | None = None) -> float:
    """Leading curvature coefficient ||phi'||^2 / (beta <D^-1 phi', phi'>).

    Exactly zero at mu = 0 and sign(alpha0) = sign(mu) for small |mu|;
    the small-mu slope is ||phi'||^2 ||psi||^2 / (beta <phi', psi>^2).
    """
    ws = _workspace(grid)
    d1, d2 = adjoint_kernel_pair(mu, beta, ws.grid)
    return ws.ip(ws.dphi.values, d2) / _denominator(ws, d1)


def ubar1(mu: float, beta: float, grid: LineGrid | None = None) -> VectorProfile:
    """First-order inner profile U1 = (p1, q1), both even in z.

    Solves L U1 = (alpha0 phi', -phi') with q1 = alpha0 D^-1 phi' (or its
    smooth mu = 0 limit) and p1 = C^-1 (phi' - beta q1), p1 _|_ phi'.
    """
    ws = _workspace(grid)
    fp = ws.dphi.values
    if abs(mu) < MU_BRANCH_TOL:
        q1 = (ws.norm_fp2 / (beta * ws.ip_fp_psi)) * ws.psi.values
    else:
        a0 = alpha0(mu, beta, ws.grid)
        q1 = a0 * ws.dsolve(mu, beta, fp)
    p1 = ws.csolve(fp - beta * q1)
    vec = VectorProfile(ScalarProfile(ws.grid, p1), ScalarProfile(ws.grid, q1))
    _check_parity(ws, vec, even=True, label="U1")
    return vec


def ubar2(mu: float, beta: float, u1: VectorProfile) -> VectorProfile:
    """Second-order inner profile U2 = (p2, q2), both odd in z.

    Assembles the source pair (omega1, omega2) from U1, checks its odd
    parity and the Fredholm condition <beta D^-1 omega1 + omega2, phi'> = 0,
    then inverts the block operator.
    """
    ws = _workspace(u1.grid)
    a0 = alpha0(mu, beta, ws.grid)
    w1, w2 = _omega_pair(ws, mu, beta, a0, u1)
    dw1 = ws.dsolve(mu, beta, w1)
    rhs_c = beta * dw1 + w2
    solv = abs(ws.ip(rhs_c, ws.dphi.values))
    if solv > SOLVABILITY_TOL * max(1.0, float(np.linalg.norm(rhs_c))):
        raise RuntimeError(
            f"C-solvability violated in U2 assembly: <rhs, phi'> = {solv:.2e}"
        )
    p2 = -ws.csolve(rhs_c)
    vec = VectorProfile(ScalarProfile(ws.grid, p2), ScalarProfile(ws.grid, dw1))
    _check_parity(ws, vec, even=False, label="U2")
    return vec


def _omega_pair(ws, mu, beta, a0, u1):
    """omega1 = dz(q1 + a0 p1) - 4 phi p1 q1 and its partner, both odd."""
    p1, q1 = u1.first.values, u1.second.values
    phiv = ws.phi.values
    u1sq = p1**2 + q1**2
    w1 = ws.Dz @ (q1 + a0 * p1) - 4.0 * phiv * p1 * q1
    w2 = (ws.Dz @ (a0 * q1 - p1) + 4.0 * phiv * p1**2
          + 2.0 * u1sq * phiv + ws.grid.nodes * ws.dphi.values)
    for name, vec in (("omega1", w1), ("omega2", w2)):
        even = 0.5 * (vec + vec[::-1])
        if np.linalg.norm(even) > PARITY_TOL * max(1.0, np.linalg.norm(vec)):
            raise RuntimeError(f"parity violation: {name} has an even part")
    return w1, w2


def _check_parity(ws, vec: VectorProfile, even: bool, label: str) -> None:
    for comp in (vec.first.values, vec.second.values):
        bad = 0.5 * (comp - comp[::-1]) if even else 0.5 * (comp + comp[::-1])
        if np.linalg.norm(bad) > PARITY_TOL * max(1.0, np.linalg.norm(comp)):
            raise RuntimeError(f"parity violation in {label}")


def _w1_pair(a0, u1: VectorProfile):
    p1, q1 = u1.first.values, u1.second.values
    return a0 * p1 + q1, -p1 + a0 * q1


def _w2_pair(ws, mu, beta, a0, u1: VectorProfile, u2: VectorProfile):
    """Termwise assembly of the kappa^3 solvability vector W2 (even in z).

    The z^2 phi' entry is the two-dimensional third-order curvature term of
    the normal-coordinate Laplacian (coefficient kappa^3 z^2 d_z).
    """
    p1, q1 = u1.first.values, u1.second.values
    p2, q2 = u2.first.values, u2.second.values
    phiv, fp, z = ws.phi.values, ws.dphi.values, ws.grid.nodes
    u1sq = p1**2 + q1**2
    first = (a0 * (ws.Dz @ p2 + p1) + ws.Dz @ q2 - 4.0 * phiv * p1 * q2
             - z * (ws.Dz @ q1) - 2.0 * u1sq * q1)
    second = (a0 * (ws.Dz @ q2 + q1) - ws.Dz @ p2 + 4.0 * phiv * p1 * p2
              + z * (ws.Dz @ p1) + 2.0 * u1sq * p1 - z**2 * fp
              + 4.0 * (p1 * p2 + q1 * q2) * phiv)
    return first, second


def nu(mu: float, beta: float, grid: LineGrid | None = None) -> float:
    """Surface-diffusion coefficient, computed two independent ways.

    Route (i) assembles W1 = (a0 p1 + q1, -p1 + a0 q1) and pairs it with the
    adjoint kernel; route (ii) is the closed form in terms of C/D inverses.
    Disagreement beyond 1e-6 flags an assembly bug.
    """
    ws = _workspace(grid)
    u1 = ubar1(mu, beta, ws.grid)
    a0 = alpha0(mu, beta, ws.grid)
    d1, d2 = adjoint_kernel_pair(mu, beta, ws.grid)
    den = _denominator(ws, d1)
    w1a, w1b = _w1_pair(a0, u1)
    route_i = (ws.ip(w1a, d1) + ws.ip(w1b, d2)) / den
    route_ii = nu_closed_form(mu, beta, ws.grid)
    if abs(route_i - route_ii) > ROUTE_AGREEMENT_TOL * max(1.0, abs(route_i)):
        raise RuntimeError(
            f"nu route disagreement at mu={mu}, beta={beta}: "
            f"{route_i!r} vs {route_ii!r}"
        )
    return route_i


def nu_closed_form(mu: float, beta: float, grid: LineGrid | None = None) -> float:
    """nu via the expanded inner products (independent of W1 assembly).

    nu = -||phi'||^4 <C^-1 P g, P g> / (beta <g, phi'>^3)
         + ||phi'||^2 ||g||^2 / (beta <g, phi'>^2)
         + ||phi'||^4 / (beta^3 <g, phi'>^2),

    g = D^-1 phi', P the projector off phi'.  At mu = 0 this limits to
    ||phi'||^2 ||psi||^2 / (beta <phi', psi>^2).
    """
    ws = _workspace(grid)
    fp = ws.dphi.values
    if abs(mu) < MU_BRANCH_TOL:
        return ws.norm_fp2 * line1d.inner(ws.psi, ws.psi) / (beta * ws.ip_fp_psi**2)
    g = ws.dsolve(mu, beta, fp)
    gp = ws.ip(g, fp)
    pg = g - fp * ws.ip(g, fp) / ws.norm_fp2
    cinv_pg = ws.csolve(pg)
    return (-(ws.norm_fp2**2) * ws.ip(cinv_pg, pg) / (beta * gp**3)
            + ws.norm_fp2 * ws.ip(g, g) / (beta * gp**2)
            + ws.norm_fp2**2 / (beta**3 * gp**2))


def zeta(mu: float, beta: float, grid: LineGrid | None = None) -> float:
    """Cubic-curvature coefficient <W2, Psi0+> / <phi', Psi0+_1>."""
    ws = _workspace(grid)
    u1 = ubar1(mu, beta, ws.grid)
    u2 = ubar2(mu, beta, u1)
    a0 = alpha0(mu, beta, ws.grid)
    d1, d2 = adjoint_kernel_pair(mu, beta, ws.grid)
    w2a, w2b = _w2_pair(ws, mu, beta, a0, u1, u2)
    return (ws.ip(w2a, d1) + ws.ip(w2b, d2)) / _denominator(ws, d1)


def zeta_small_mu_limit(beta: float, grid: LineGrid | None = None) -> float:
    """Closed-form mu -> 0 limit of zeta.

    zeta(0) = ||phi'||^2 / (beta <phi', psi>^2) *
              ( -<D0^-1 psi', psi'> + 16 <D0^-1 (phi p1 psi), phi p1 psi>
                + ||psi||^2 / 2 - 2 <|U1|^2, psi^2> ),

    with all D0 solves on the odd complement of the sech kernel.  The first
    inner product is exactly 1/2 (D0 maps z*psi to -2 psi').
    """
    ws = _workspace(grid)
    u1 = ubar1(0.0, beta, ws.grid)
    p1, q1 = u1.first.values, u1.second.values
    psi = ws.psi.values
    psip = ws.Dz @ psi
    u = ws.phi.values * p1 * psi
    d_psip = ws.dsolve(0.0, beta, psip)
    d_u = ws.dsolve(0.0, beta, u)
    bracket = (-ws.ip(d_psip, psip) + 16.0 * ws.ip(d_u, u)
               + 0.5 * ws.ip(psi, psi) - 2.0 * ws.ip(p1**2 + q1**2, psi**2))
    return ws.norm_fp2 / (beta * ws.ip_fp_psi**2) * bracket


def compute_record(mu: float, beta: float, grid: LineGrid | None = None) -> CoefficientRecord:
    """All three coefficients plus assembly diagnostics at one (mu, beta)."""
    ws = _workspace(grid)
    u1 = ubar1(mu, beta, ws.grid)
    u2 = ubar2(mu, beta, u1)
    a0 = alpha0(mu, beta, ws.grid)
    d1, d2 = adjoint_kernel_pair(mu, beta, ws.grid)
    den = _denominator(ws, d1)
    w1a, w1b = _w1_pair(a0, u1)
    nu_val = (ws.ip(w1a, d1) + ws.ip(w1b, d2)) / den
    nu_check = nu_closed_form(mu, beta, ws.grid)
    if abs(nu_val - nu_check) > ROUTE_AGREEMENT_TOL * max(1.0, abs(nu_val)):
        raise RuntimeError(f"nu route disagreement at mu={mu}, beta={beta}")
    w2a, w2b = _w2_pair(ws, mu, beta, a0, u1, u2)
    zeta_val = (ws.ip(w2a, d1) + ws.ip(w2b, d2)) / den
    # residual of the defining system L U1 = (alpha0 phi', -phi')
    L = line1d.assemble("L", mu, beta, ws.grid)
    res1 = L.apply(u1)
    res1 = np.concatenate([
        res1.first.values - a0 * ws.dphi.values,
        res1.second.values + ws.dphi.values,
    ])
    res1_norm = float(np.sqrt(np.sum(np.tile(ws.grid.weights, 2) * res1**2)))
    diag = {
        "u1_norm": u1.norm(),
        "u2_norm": u2.norm(),
        "u1_residual": res1_norm,
        "nu_route_gap": abs(nu_val - nu_check),
        "denominator": den,
    }
    return CoefficientRecord(mu=mu, beta=beta, alpha0=a0, nu=nu_val,
                             zeta=zeta_val, diagnostics=diag)


CSV_HEADER = "mu,beta,alpha0,nu,zeta,rho_star,lambda_ess,gap,n,Z"


def coefficient_table(mu_values, beta_rule="path", grid: LineGrid | None = None,
                      with_spectrum: bool = False) -> list[CoefficientRecord]:
    """Sweep mu; beta_rule is a fixed number or "path" for beta = 3 - mu.

    Per-point failures are recorded in the diagnostics and the sweep
    continues.  With with_spectrum=True each record also gets rho_star,
    lambda_ess and the certified gap (dense eigensolve; much slower).
    """
    ws = _workspace(grid)
    records = []
    for mu in np.atleast_1d(np.asarray(mu_values, dtype=float)):
        beta = figure_path_beta(mu) if beta_rule == "path" else float(beta_rule)
        try:
            rec = compute_record(float(mu), beta, ws.grid)
        except Exception as exc:  # noqa: BLE001 - sweep must survive bad points
            rec = CoefficientRecord(mu=float(mu), beta=beta, alpha0=np.nan,
                                    nu=np.nan, zeta=np.nan,
                                    diagnostics={"error": str(exc)})
        if with_spectrum and np.isfinite(rec.alpha0):
            from . import spectra

            report = spectra.point_spectrum(float(mu), beta, ws.grid)
            rec.rho_star = report.rho_star
            rec.lambda_ess = report.lambda_ess
            rec.gap = report.gap
        records.append(rec)
    return records


def table_to_csv(records, path, grid: LineGrid | None = None) -> None:
    ws = _workspace(grid)
    lines = [CSV_HEADER]
    for r in records:
        fields = [r.mu, r.beta, r.alpha0, r.nu, r.zeta]
        fields += [x if x is not None else np.nan
                   for x in (r.rho_star, r.lambda_ess, r.gap)]
        lines.append(",".join(f"{x:.12g}" for x in fields)
                     + f",{ws.grid.n},{ws.grid.half_width:g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
