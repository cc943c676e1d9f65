"""Line discretization and the 1D operators of the front problem.

The front phi(z) = tanh(z) and its companions live on a truncated symmetric
interval [-Z, Z], discretized with cell-centered uniform nodes (no node at
z = 0, nodes come in exact +/- pairs).  Sixth-order centered finite
differences give banded symmetric operators

    C = -d^2/dz^2 - 6 sech^2 + 4,
    D = -d^2/dz^2 - 2 sech^2 + mu + 1,

and the block operator L = [[0, D], [-C, -beta]].  Quadrature is the midpoint
rule, which is superalgebraically accurate for the analytic, exponentially
decaying integrands that occur here.

Operator assembly truncates the stencil at the interval ends (zero
extension), which keeps the matrices exactly symmetric; profile
differentiation uses the same stencils with mirror closure so that constant
tails (tanh at +/-Z) are handled correctly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

DEFAULT_HALF_WIDTH = 20.0
DEFAULT_N = 2048

# 6th-order centered stencils: f'' and f' weights on offsets -3..3
_D2_W = np.array([1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0])
_D1_W = np.array([-1.0 / 60.0, 3.0 / 20.0, -0.75, 0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0])
_STENCIL_HALF = 3

SOLVER_TOL = 1e-10
MU_BRANCH_TOL = 1e-6


@dataclass(frozen=True)
class LineGrid:
    """Cell-centered uniform grid on [-Z, Z] with midpoint quadrature."""

    half_width: float
    n: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    spacing: float

    def same_as(self, other: "LineGrid") -> bool:
        return self.n == other.n and self.half_width == other.half_width


@dataclass
class ScalarProfile:
    """A real function of z sampled on a LineGrid."""

    grid: LineGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError("profile values must match the grid size")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.grid.weights * self.values**2)))


@dataclass
class VectorProfile:
    """Two-component profile (first, second) on a shared grid."""

    first: ScalarProfile
    second: ScalarProfile

    def __post_init__(self):
        if not self.first.grid.same_as(self.second.grid):
            raise ValueError("vector profile components must share one grid")

    @property
    def grid(self) -> LineGrid:
        return self.first.grid

    def stack(self) -> np.ndarray:
        return np.concatenate([self.first.values, self.second.values])

    def norm(self) -> float:
        return float(np.sqrt(self.first.norm() ** 2 + self.second.norm() ** 2))


def build_grid(half_width: float = DEFAULT_HALF_WIDTH, n: int = DEFAULT_N) -> LineGrid:
    """Build the symmetric cell-centered grid.

    Nodes z_j = -Z + (j + 1/2) h with h = 2Z/n, so z -> -z maps node j to
    node n-1-j exactly.
    """
    if half_width < 10.0 or n < 256 or n % 2 != 0:
        raise ValueError(
            "truncation/resolution too coarse: need half_width >= 10 "
            f"and even n >= 256, got half_width={half_width}, n={n}"
        )
    h = 2.0 * half_width / n
    j = np.arange(n)
    nodes = -half_width + (j + 0.5) * h
    weights = np.full(n, h)
    return LineGrid(half_width=float(half_width), n=int(n), nodes=nodes,
                    weights=weights, spacing=h)


def front_profiles(grid: LineGrid) -> tuple[ScalarProfile, ScalarProfile, ScalarProfile]:
    """Return (phi, psi, dphi) = (tanh, sech, sech^2) sampled on the grid."""
    z = grid.nodes
    phi = np.tanh(z)
    psi = 1.0 / np.cosh(z)
    dphi = psi * psi
    return (ScalarProfile(grid, phi), ScalarProfile(grid, psi),
            ScalarProfile(grid, dphi))


def inner(a, b) -> float:
    """Quadrature-weighted inner product of two profiles (scalar or vector)."""
    if isinstance(a, VectorProfile) and isinstance(b, VectorProfile):
        return inner(a.first, b.first) + inner(a.second, b.second)
    if not a.grid.same_as(b.grid):
        raise ValueError("inner product requires matching grids")
    return float(np.sum(a.grid.weights * a.values * b.values))


def parity_split(p: ScalarProfile) -> tuple[ScalarProfile, ScalarProfile]:
    """Split into even and odd parts; even + odd == p exactly."""
    flipped = p.values[::-1]
    even = 0.5 * (p.values + flipped)
    odd = p.values - even
    return ScalarProfile(p.grid, even), ScalarProfile(p.grid, odd)


def _flip(values: np.ndarray) -> np.ndarray:
    return values[::-1]


# ---------------------------------------------------------------------------
# differentiation matrices for profiles (mirror closure at the ends)
# ---------------------------------------------------------------------------

def _banded_with_mirror(weights: np.ndarray, n: int, scale: float) -> sparse.csr_matrix:
    """Banded stencil matrix with mirror closure across the interval faces.

    Ghost node -1-k is folded onto node k, ghost n+k onto n-1-k.  The mirror
    (even) extension is exact for constant tails and accurate to the tail
    amplitude for decaying ones.
    """
    m = _STENCIL_HALF
    mat = sparse.lil_matrix((n, n))
    for off in range(-m, m + 1):
        w = weights[off + m]
        if w == 0.0:
            continue
        for i in range(n):
            j = i + off
            if j < 0:
                j = -1 - j
            elif j >= n:
                j = 2 * n - 1 - j
            mat[i, j] += w * scale
    return mat.tocsr()


_DERIV_CACHE: dict[tuple[float, int, int], sparse.csr_matrix] = {}


def deriv_matrix(grid: LineGrid, order: int = 1) -> sparse.csr_matrix:
    """First or second derivative matrix (6th order, mirror closure)."""
    key = (grid.half_width, grid.n, order)
    mat = _DERIV_CACHE.get(key)
    if mat is None:
        if order == 1:
            mat = _banded_with_mirror(_D1_W, grid.n, 1.0 / grid.spacing)
        elif order == 2:
            mat = _banded_with_mirror(_D2_W, grid.n, 1.0 / grid.spacing**2)
        else:
            raise ValueError("order must be 1 or 2")
        _DERIV_CACHE[key] = mat
    return mat


def differentiate(p: ScalarProfile, order: int = 1) -> ScalarProfile:
    return ScalarProfile(p.grid, deriv_matrix(p.grid, order) @ p.values)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

class LineOperator:
    """One of the operators C, D (banded symmetric) or L (block).

    C and D are stored as a main diagonal plus constant off-diagonal stencil
    weights; L keeps references to its C and D blocks.
    """

    def __init__(self, kind: str, mu: float, beta: float, grid: LineGrid):
        if kind not in ("C", "D", "L"):
            raise ValueError(f"unknown operator kind {kind!r}")
        self.kind = kind
        self.mu = float(mu)
        self.beta = float(beta)
        self.grid = grid
        self._bordered_lu = None
        if kind == "L":
            if not beta > 0.0:
                raise ValueError("L requires beta > 0")
            self.C = assemble("C", mu, beta, grid)
            self.D = assemble("D", mu, beta, grid)
            return
        psi2 = 1.0 / np.cosh(grid.nodes) ** 2
        if kind == "C":
            potential = -6.0 * psi2 + 4.0
        else:
            potential = -2.0 * psi2 + self.mu + 1.0
        h2 = grid.spacing**2
        # -d^2/dz^2 with zero extension: negated stencil, truncated at ends
        self._off = -_D2_W / h2            # offsets -3..3, center replaced below
        self._diag = -_D2_W[_STENCIL_HALF] / h2 + potential

    # -- banded representation helpers ------------------------------------

    def banded_ab(self) -> np.ndarray:
        """LAPACK band storage (7 x n) for solve_banded, kinds C and D."""
        m = _STENCIL_HALF
        n = self.grid.n
        ab = np.zeros((2 * m + 1, n))
        ab[m, :] = self._diag
        for off in range(1, m + 1):
            ab[m - off, off:] = self._off[off + m]
            ab[m + off, : n - off] = self._off[m - off]
        return ab

    def sparse(self) -> sparse.csr_matrix:
        m = _STENCIL_HALF
        n = self.grid.n
        if self.kind == "L":
            zero = sparse.csr_matrix((n, n))
            return sparse.bmat(
                [[zero, self.D.sparse()],
                 [-self.C.sparse(), -self.beta * sparse.identity(n)]]
            ).tocsr()
        offsets = list(range(-m, m + 1))
        diags = []
        for off in offsets:
            if off == 0:
                diags.append(self._diag)
            else:
                diags.append(np.full(n - abs(off), self._off[off + m]))
        return sparse.diags(diags, offsets).tocsr()

    def dense(self) -> np.ndarray:
        if self.kind == "L":
            n = self.grid.n
            out = np.zeros((2 * n, 2 * n))
            out[:n, n:] = self.D.dense()
            out[n:, :n] = -self.C.dense()
            out[n:, n:] -= self.beta * np.eye(n)
            return out
        return self.sparse().toarray()

    # -- application -------------------------------------------------------

    def apply(self, rhs):
        """Apply the operator to a profile (Scalar for C/D, Vector for L)."""
        if self.kind == "L":
            first, second = _vector_parts(rhs)
            top = self.D.apply_values(second)
            bottom = -self.C.apply_values(first) - self.beta * second
            return _wrap_vector(rhs, self.grid, top, bottom)
        values = rhs.values if isinstance(rhs, ScalarProfile) else np.asarray(rhs)
        out = self.apply_values(values)
        if isinstance(rhs, ScalarProfile):
            return ScalarProfile(self.grid, out)
        return out

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        if self.kind == "L":
            n = self.grid.n
            first, second = values[:n], values[n:]
            return np.concatenate([
                self.D.apply_values(second),
                -self.C.apply_values(first) - self.beta * second,
            ])
        m = _STENCIL_HALF
        out = self._diag * values
        for off in range(1, m + 1):
            w = self._off[off + m]
            out[:-off] += w * values[off:]
            out[off:] += w * values[:-off]
        return out

    def apply_adjoint(self, rhs):
        """Apply the transpose; only distinct from apply() for kind L."""
        if self.kind != "L":
            return self.apply(rhs)
        first, second = _vector_parts(rhs)
        top = -self.C.apply_values(second)
        bottom = self.D.apply_values(first) - self.beta * second
        return _wrap_vector(rhs, self.grid, top, bottom)


def _vector_parts(rhs):
    if isinstance(rhs, VectorProfile):
        return rhs.first.values, rhs.second.values
    arr = np.asarray(rhs)
    n = arr.size // 2
    return arr[:n], arr[n:]


def _wrap_vector(template, grid, top, bottom):
    if isinstance(template, VectorProfile):
        return VectorProfile(ScalarProfile(grid, top), ScalarProfile(grid, bottom))
    return np.concatenate([top, bottom])


def assemble(kind: str, mu: float, beta: float, grid: LineGrid) -> LineOperator:
    """Assemble C, D, or the block operator L on the given grid."""
    return LineOperator(kind, mu, beta, grid)


# ---------------------------------------------------------------------------
# solves
# ---------------------------------------------------------------------------

def solve_D(op: LineOperator, rhs: ScalarProfile) -> ScalarProfile:
    """Solve D x = rhs (banded LU).

    Near mu = 0 the generic inverse blows up along the sech ground state;
    callers should switch to the constrained mu = 0 branch below.
    """
    if op.kind != "D":
        raise ValueError("solve_D expects a D operator")
    if abs(op.mu) < MU_BRANCH_TOL:
        warnings.warn(
            f"D is near-singular at mu = {op.mu}; use the mu = 0 closed-form branch",
            RuntimeWarning,
        )
    m = _STENCIL_HALF
    x = solve_banded((m, m), op.banded_ab(), rhs.values)
    return ScalarProfile(op.grid, x)


def solve_D_values(op: LineOperator, rhs: np.ndarray) -> np.ndarray:
    """Array variant of solve_D (also accepts matrix right-hand sides)."""
    m = _STENCIL_HALF
    return solve_banded((m, m), op.banded_ab(), rhs)


def _bordered_lu(op: LineOperator, border: np.ndarray):
    mat = op.sparse().tolil()
    n = op.grid.n
    big = sparse.lil_matrix((n + 1, n + 1))
    big[:n, :n] = mat
    big[:n, n] = border[:, None]
    big[n, :n] = border[None, :]
    return splu(big.tocsc())


def solve_C(op: LineOperator, rhs: ScalarProfile) -> ScalarProfile:
    """Pseudo-inverse solve C x = rhs with x orthogonal to the kernel phi'.

    rhs must be (numerically) in the range of C: its phi' component is
    required to be below 1e-8 relative.  The bordered system
    [[C, k], [k^T, 0]] pins the kernel direction; the Lagrange multiplier
    absorbs the residual kernel component of rhs.
    """
    if op.kind != "C":
        raise ValueError("solve_C expects a C operator")
    kernel = 1.0 / np.cosh(op.grid.nodes) ** 2
    kernel = kernel / np.linalg.norm(kernel)
    overlap = abs(np.dot(kernel, rhs.values))
    scale = np.linalg.norm(rhs.values)
    if scale > 0 and overlap / scale > 1e-8:
        raise ValueError(
            "Fredholm solvability violated: rhs has phi' component "
            f"{overlap / scale:.2e} relative"
        )
    if op._bordered_lu is None:
        op._bordered_lu = _bordered_lu(op, kernel)
    aug = np.concatenate([rhs.values, [0.0]])
    sol = op._bordered_lu.solve(aug)
    return ScalarProfile(op.grid, sol[:-1])


def solve_D_constrained(op: LineOperator, rhs: ScalarProfile) -> ScalarProfile:
    """mu = 0 branch: solve D x = rhs on the complement of the sech kernel.

    Used when |mu| < 1e-6; rhs must be orthogonal to sech (odd rhs always is).
    """
    if op.kind != "D":
        raise ValueError("solve_D_constrained expects a D operator")
    kernel = 1.0 / np.cosh(op.grid.nodes)
    kernel = kernel / np.linalg.norm(kernel)
    if op._bordered_lu is None:
        op._bordered_lu = _bordered_lu(op, kernel)
    aug = np.concatenate([rhs.values, [0.0]])
    sol = op._bordered_lu.solve(aug)
    return ScalarProfile(op.grid, sol[:-1])


def profile_to_csv(p: ScalarProfile, path) -> None:
    """Two-column CSV dump (z, value) for plotting/debugging."""
    data = np.column_stack([p.grid.nodes, p.values])
    np.savetxt(path, data, delimiter=",", header="z,value", comments="")
