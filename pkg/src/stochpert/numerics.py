"""Dense linear-algebra and linear-programming substrate.

Everything here is domain-agnostic: a two-phase dense simplex solver with
Bland's anti-cycling rule, invariant-subspace splitting via an ordered real
Schur form, a matrix exponential, and the Kronecker matrix of the Sylvester
map ``X -> AX - XB``.  All operations are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalError

__all__ = [
    "Tolerances",
    "DEFAULT_TOLS",
    "LinearProgram",
    "LpResult",
    "lp_solve",
    "Disk",
    "SubspaceSplit",
    "eigen_split",
    "expm",
    "sylvester_kron_matrix",
    "as_square",
]


@dataclass(frozen=True)
class Tolerances:
    """Central tolerance record.

    solve
        target residual for iterative correctors and linear solves.
    cluster
        eigenvalue clustering / rank decision threshold.
    test
        generic verification threshold for contract post-checks.
    """

    solve: float = 1e-12
    cluster: float = 1e-8
    test: float = 1e-9


DEFAULT_TOLS = Tolerances()


def as_square(a, name: str = "matrix") -> np.ndarray:
    """Validate and return a finite square float matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} has non-finite entries")
    return a


# ---------------------------------------------------------------------------
# Linear programming: dense two-phase simplex with Bland's rule
# ---------------------------------------------------------------------------

@dataclass
class LinearProgram:
    """max/min ``objective @ x`` subject to ``lhs @ x (sense) rhs`` and bounds.

    ``senses`` holds one of ``"<="``, ``"="``, ``">="`` per row.  ``bounds``
    holds one ``(lo, hi)`` pair per variable; ``None`` means unbounded on
    that side.
    """

    objective: np.ndarray
    lhs: np.ndarray
    senses: Sequence[str]
    rhs: np.ndarray
    bounds: Sequence[tuple[float | None, float | None]]
    maximize: bool = True

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.lhs = np.atleast_2d(np.asarray(self.lhs, dtype=float))
        self.rhs = np.asarray(self.rhs, dtype=float)
        n = self.objective.size
        m = self.rhs.size
        if n < 1:
            raise DomainError("linear program needs at least one variable")
        if self.lhs.shape != (m, n):
            raise DomainError(
                f"constraint matrix shape {self.lhs.shape} inconsistent with "
                f"{m} rows and {n} variables")
        if len(self.senses) != m:
            raise DomainError("one sense required per constraint row")
        for s in self.senses:
            if s not in ("<=", "=", ">="):
                raise DomainError(f"unknown constraint sense {s!r}")
        if len(self.bounds) != n:
            raise DomainError("one (lo, hi) bound pair required per variable")
        for lo, hi in self.bounds:
            if lo is not None and hi is not None and lo > hi:
                raise DomainError(f"empty bound interval ({lo}, {hi})")
        for arr in (self.objective, self.lhs, self.rhs):
            if not np.all(np.isfinite(arr)):
                raise DomainError("linear program data must be finite")


@dataclass(frozen=True)
class LpResult:
    status: str                      # "optimal" | "infeasible" | "unbounded"
    value: float | None = None
    x: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _bland_minimize(tab, basis, allowed, pivot_tol, max_iter):
    """Run Bland-rule simplex on a tableau whose last row holds reduced costs.

    Returns "optimal" or "unbounded".  ``allowed`` is a boolean mask of
    columns eligible to enter the basis.
    """
    m = tab.shape[0] - 1
    for _ in range(max_iter):
        enter = -1
        cost = tab[-1, :-1]
        for j in np.flatnonzero(allowed):
            if cost[j] < -pivot_tol:
                enter = j
                break
        if enter < 0:
            return "optimal"
        leave = -1
        best = np.inf
        for i in range(m):
            a = tab[i, enter]
            if a > pivot_tol:
                ratio = tab[i, -1] / a
                # Bland tie-break: smallest basic-variable index
                if ratio < best - 1e-12 or (
                        ratio <= best + 1e-12
                        and (leave < 0 or basis[i] < basis[leave])):
                    best = min(best, ratio)
                    leave = i
        if leave < 0:
            return "unbounded"
        _pivot(tab, basis, leave, enter)
    raise NumericalError("simplex iteration cap exceeded")


def lp_solve(lp: LinearProgram, *, feas_tol: float = 1e-9,
             pivot_tol: float = 1e-11, max_iter: int = 50_000) -> LpResult:
    """Solve a dense linear program exactly (two-phase simplex, Bland's rule).

    Optimal points are feasible and optimal to within ``feas_tol``.
    Infeasible and unbounded programs are reported as statuses, not raised.
    """
    n = lp.objective.size
    cmin = -lp.objective if lp.maximize else lp.objective.copy()

    # substitute every variable by nonnegative ones: x = shift + sum sign * u
    shift = np.zeros(n)
    umap: list[tuple[int, float]] = []
    box_rows: list[tuple[int, float]] = []
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo is not None:
            shift[j] = lo
            umap.append((j, 1.0))
            if hi is not None:
                box_rows.append((len(umap) - 1, hi - lo))
        elif hi is not None:
            shift[j] = hi
            umap.append((j, -1.0))
        else:
            umap.append((j, 1.0))
            umap.append((j, -1.0))
    nu = len(umap)

    rows = [lp.lhs[i] for i in range(lp.rhs.size)]
    senses = list(lp.senses)
    rhs = list(lp.rhs - lp.lhs @ shift)

    a_u = np.zeros((len(rows) + len(box_rows), nu))
    for k, (j, sgn) in enumerate(umap):
        a_u[:len(rows), k] = sgn * np.array([r[j] for r in rows])
    for extra, (ucol, ub) in enumerate(box_rows):
        a_u[len(rows) + extra, ucol] = 1.0
        senses.append("<=")
        rhs.append(ub)
    m = a_u.shape[0]
    rhs = np.asarray(rhs, dtype=float)

    # slack/surplus columns, one per inequality row
    ineq = [i for i in range(m) if senses[i] != "="]
    a_s = np.zeros((m, len(ineq)))
    for k, i in enumerate(ineq):
        a_s[i, k] = 1.0 if senses[i] == "<=" else -1.0
    body = np.hstack([a_u, a_s])

    # flip rows so the right-hand side is nonnegative
    neg = rhs < 0
    body[neg] *= -1.0
    rhs = np.where(neg, -rhs, rhs)

    # artificial basis; reuse a +1 slack column where one survived the flip
    ncols = body.shape[1]
    basis = np.full(m, -1, dtype=int)
    need_art = []
    for k, i in enumerate(ineq):
        if body[i, nu + k] > 0.5 and basis[i] < 0:
            basis[i] = nu + k
    for i in range(m):
        if basis[i] < 0:
            need_art.append(i)
    a_art = np.zeros((m, len(need_art)))
    for k, i in enumerate(need_art):
        a_art[i, k] = 1.0
        basis[i] = ncols + k
    full = np.hstack([body, a_art])
    total = full.shape[1]

    tab = np.zeros((m + 1, total + 1))
    tab[:m, :total] = full
    tab[:m, -1] = rhs

    if need_art:
        # phase 1: minimize the artificial sum
        for i in need_art:
            tab[-1, :] -= tab[i, :]
        tab[-1, ncols:total] = 0.0
        allowed = np.ones(total, dtype=bool)
        status = _bland_minimize(tab, basis, allowed, pivot_tol, max_iter)
        if status != "optimal" or -tab[-1, -1] > feas_tol:
            return LpResult("infeasible")
        # drive artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= ncols:
                j = next((c for c in range(ncols)
                          if abs(tab[i, c]) > pivot_tol), -1)
                if j >= 0:
                    _pivot(tab, basis, i, j)
                else:
                    keep[i] = False
        if not np.all(keep):
            tab = np.vstack([tab[:m][keep], tab[-1:]])
            basis = basis[keep]
            m = int(keep.sum())

    # phase 2: original objective
    tab[-1, :] = 0.0
    tab[-1, :nu] = [sgn * cmin[j] for j, sgn in umap]
    for i in range(m):
        cb = tab[-1, basis[i]]
        if cb != 0.0:
            tab[-1, :] -= cb * tab[i, :]
    allowed = np.zeros(tab.shape[1] - 1, dtype=bool)
    allowed[:ncols] = True
    status = _bland_minimize(tab, basis, allowed, pivot_tol, max_iter)
    if status == "unbounded":
        return LpResult("unbounded")

    u = np.zeros(tab.shape[1] - 1)
    u[basis] = tab[:m, -1]
    x = shift.copy()
    for k, (j, sgn) in enumerate(umap):
        x[j] += sgn * u[k]
    return LpResult("optimal", float(lp.objective @ x), x)


# ---------------------------------------------------------------------------
# Spectral regions and invariant-subspace splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    """Open disk ``|z - center| < radius`` in the complex plane."""

    center: complex
    radius: float

    def contains(self, z: complex) -> bool:
        return abs(z - self.center) < self.radius

    def boundary_distance(self, z: complex) -> float:
        return abs(abs(z - self.center) - self.radius)


class _Predicate:
    """Adapter for a bare callable region (no boundary information)."""

    def __init__(self, fn: Callable[[complex], bool]):
        self._fn = fn

    def contains(self, z: complex) -> bool:
        return bool(self._fn(z))


def _as_region(region):
    if hasattr(region, "contains"):
        return region
    if callable(region):
        return _Predicate(region)
    raise DomainError("region must be a Disk or a predicate on complex numbers")


@dataclass(frozen=True)
class SubspaceSplit:
    """Orthonormal bases of complementary invariant subspaces.

    ``inside`` spans the invariant subspace for eigenvalues in the region,
    ``outside`` the complementary one.  ``cond`` is the condition number of
    the combined basis ``[inside outside]``.
    """

    inside: np.ndarray
    outside: np.ndarray
    eigenvalues_inside: np.ndarray
    eigenvalues_outside: np.ndarray
    cond: float


def eigen_split(a, region, *, tols: Tolerances = DEFAULT_TOLS) -> SubspaceSplit:
    """Split R^n into the invariant subspace for eigenvalues inside ``region``
    and its complement.

    Implemented through an ordered real Schur form followed by one Sylvester
    solve to block-diagonalize, so defective matrices are handled.  Raises
    :class:`DomainError` when an eigenvalue sits within ``tols.cluster`` of
    the region boundary (only checkable when the region exposes
    ``boundary_distance``).
    """
    a = as_square(a, "A")
    n = a.shape[0]
    reg = _as_region(region)
    eigs = np.linalg.eigvals(a)
    if hasattr(reg, "boundary_distance"):
        dist = np.array([reg.boundary_distance(z) for z in eigs])
        k = int(np.argmin(dist))
        if dist[k] < tols.cluster:
            raise DomainError(
                f"eigenvalue {eigs[k]:.12g} lies within {tols.cluster:g} "
                "of the region boundary")

    t, z, sdim = scipy.linalg.schur(
        a, output="real",
        sort=lambda re, im: bool(reg.contains(complex(re, im))))
    n_inside = int(sum(reg.contains(lam) for lam in eigs))
    if sdim != n_inside:
        raise NumericalError(
            f"Schur reordering selected {sdim} eigenvalues but the region "
            f"contains {n_inside}; region may split a conjugate pair")

    if sdim == 0:
        v = np.zeros((n, 0))
        w = z
    elif sdim == n:
        v = z
        w = np.zeros((n, 0))
    else:
        s11 = t[:sdim, :sdim]
        s12 = t[:sdim, sdim:]
        s22 = t[sdim:, sdim:]
        k = sylvester_kron_matrix(s11, s22)
        x = np.linalg.solve(k, (-s12).flatten(order="F"))
        x = x.reshape(s12.shape, order="F")
        v = z[:, :sdim]
        w_raw = z @ np.vstack([x, np.eye(n - sdim)])
        w, _ = np.linalg.qr(w_raw)

    lam_in = np.linalg.eigvals(t[:sdim, :sdim]) if sdim else np.zeros(0, complex)
    lam_out = (np.linalg.eigvals(t[sdim:, sdim:])
               if sdim < n else np.zeros(0, complex))
    combined = np.hstack([v, w])
    cond = float(np.linalg.cond(combined)) if combined.size else 1.0
    return SubspaceSplit(v, w, lam_in, lam_out, cond)


# ---------------------------------------------------------------------------
# Matrix exponential and the Sylvester map in Kronecker form
# ---------------------------------------------------------------------------

def expm(a) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring with Pade approximants)."""
    return scipy.linalg.expm(as_square(a, "A"))


def sylvester_kron_matrix(a, b) -> np.ndarray:
    """Matrix of ``X -> AX - XB`` acting on column-stacked ``vec(X)``.

    For ``A`` m-by-m and ``B`` n-by-n the result is the (mn)-by-(mn) matrix
    ``I_n (x) A - B^T (x) I_m``.
    """
    a = as_square(a, "A")
    b = as_square(b, "B")
    m, n = a.shape[0], b.shape[0]
    return np.kron(np.eye(n), a) - np.kron(b.T, np.eye(m))
