"""Spectral projections and their smooth continuation.

A projection ``P`` (idempotent matrix) splits the space into its image and
kernel; a transition operator ``T`` commuting with ``P`` block-diagonalizes
in that frame with diagonal blocks ``T_P`` and ``T_Q``.  The commutation
constraint ``[P, T] = 0`` defines an implicit manifold over the operator:
its linearization in tangent coordinates (the off-diagonal blocks) is a
pair of Sylvester equations, solvable exactly when the block spectra are
disjoint.  That yields

* :func:`derivative` -- the tangent response ``P'`` to a change ``T'``,
* :func:`continue_projection` -- a predictor-corrector path following the
  projection along a one-parameter operator family, with the idempotent
  retraction ``P <- 3P^2 - 2P^3`` handling the normal directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalError
from .numerics import DEFAULT_TOLS, Disk, Tolerances, as_square, eigen_split
from .sylvester import sep_brute, solve_dense

__all__ = [
    "phi",
    "Projection",
    "BlockFrame",
    "spectral_projection",
    "tangent_split",
    "derivative",
    "ContinuationResult",
    "PathPoint",
    "continue_projection",
    "GapReport",
    "gap_report",
    "retract",
]


def phi(p) -> np.ndarray:
    """Manifold residual ``P^2 - P`` (zero exactly on projections)."""
    p = np.asarray(p, dtype=float)
    return p @ p - p


def retract(p) -> np.ndarray:
    """One step of the idempotent refinement ``P <- 3P^2 - 2P^3``.

    Contracts the residual quadratically for ``||phi(P)||`` below about
    one tenth.
    """
    p = np.asarray(p, dtype=float)
    p2 = p @ p
    return 3.0 * p2 - 2.0 * p2 @ p


def _rank_basis(mat: np.ndarray, rank: int) -> np.ndarray:
    """Orthonormal basis of the leading column space via pivoted QR."""
    if rank == 0:
        return np.zeros((mat.shape[0], 0))
    q, _, _ = scipy.linalg.qr(mat, mode="economic", pivoting=True)
    return q[:, :rank]


@dataclass(frozen=True)
class BlockFrame:
    """Change of basis adapted to an image/kernel splitting."""

    w: np.ndarray
    w_inv: np.ndarray
    rank: int

    def to_frame(self, op) -> np.ndarray:
        return self.w_inv @ np.asarray(op, dtype=float) @ self.w

    def from_frame(self, op) -> np.ndarray:
        return self.w @ np.asarray(op, dtype=float) @ self.w_inv

    def blocks(self, op):
        """2x2 block decomposition (image, kernel) of an operator."""
        f = self.to_frame(op)
        r = self.rank
        return f[:r, :r], f[:r, r:], f[r:, :r], f[r:, r:]

    def from_offdiagonal(self, upper, lower) -> np.ndarray:
        n = self.w.shape[0]
        r = self.rank
        f = np.zeros((n, n))
        f[:r, r:] = upper
        f[r:, :r] = lower
        return self.from_frame(f)


def _frame_of(p: np.ndarray, rank: int) -> BlockFrame:
    n = p.shape[0]
    image = _rank_basis(p, rank)
    kernel = _rank_basis(np.eye(n) - p, n - rank)
    w = np.hstack([image, kernel])
    try:
        w_inv = np.linalg.inv(w)
    except np.linalg.LinAlgError as e:
        raise NumericalError("image and kernel bases do not span") from e
    return BlockFrame(w, w_inv, rank)


class Projection:
    """Idempotent operator with cached image/kernel frame.

    ``submanifold`` records how the projection acts on the constant
    function: ``"fixes_one"`` (``P 1 = 1``), ``"kills_one"`` (``P 1 = 0``)
    or ``None`` when neither holds.
    """

    def __init__(self, matrix, *, tols: Tolerances = DEFAULT_TOLS,
                 idem_tol: float = 1e-10):
        p = as_square(matrix, "P")
        scale = max(np.linalg.norm(p, "fro"), 1.0)
        resid = np.linalg.norm(phi(p), "fro")
        if resid > idem_tol * scale:
            raise DomainError(f"matrix is not idempotent: |P^2-P| = "
                              f"{resid:.3e} (scale {scale:.3g})")
        self.matrix = p
        self.rank = int(round(np.trace(p)))
        if not 0 <= self.rank <= p.shape[0]:
            raise DomainError(f"trace {np.trace(p):.6g} is not a valid rank")
        self.frame = _frame_of(p, self.rank)
        ones = np.ones(p.shape[0])
        img = p @ ones
        if np.abs(img - ones).max() <= 1e-10:
            self.submanifold = "fixes_one"
        elif np.abs(img).max() <= 1e-10:
            self.submanifold = "kills_one"
        else:
            self.submanifold = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def complement(self) -> np.ndarray:
        return np.eye(self.n) - self.matrix

    @property
    def image_basis(self) -> np.ndarray:
        return self.frame.w[:, :self.rank]

    @property
    def kernel_basis(self) -> np.ndarray:
        return self.frame.w[:, self.rank:]


def spectral_projection(t, region=Disk(1.0, 0.5), *,
                        tols: Tolerances = DEFAULT_TOLS) -> Projection:
    """Projection onto the invariant subspace for eigenvalues in ``region``,
    along the complementary invariant subspace."""
    t = as_square(t, "T")
    split = eigen_split(t, region, tols=tols)
    n = t.shape[0]
    r = split.inside.shape[1]
    w = np.hstack([split.inside, split.outside])
    d = np.zeros((n, n))
    d[:r, :r] = np.eye(r)
    p = w @ d @ np.linalg.inv(w)
    comm = np.linalg.norm(p @ t - t @ p, "fro")
    if comm > 1e-9 * max(1.0, np.linalg.norm(t, "fro")):
        raise NumericalError(f"projection does not commute: {comm:.3e}")
    return Projection(p, tols=tols)


def tangent_split(p: Projection, pi) -> tuple[np.ndarray, np.ndarray]:
    """Split an operator into its tangent part (off-diagonal blocks in the
    image/kernel frame; satisfies ``P pi + pi P = pi``) and normal part
    (diagonal blocks).  The parts sum back to the input exactly."""
    pi = as_square(pi, "pi")
    if pi.shape[0] != p.n:
        raise DomainError("dimension mismatch")
    d11, d12, d21, d22 = p.frame.blocks(pi)
    tangent = p.frame.from_offdiagonal(d12, d21)
    return tangent, pi - tangent


def derivative(p: Projection, t, tp, *, tols: Tolerances = DEFAULT_TOLS,
               sep_floor: float = 1e-8) -> np.ndarray:
    """Tangent response of the projection to an operator change.

    Solves the linearized commutation equation ``[P', T] + [P, T'] = 0``
    for ``P'`` in tangent form: in the image/kernel frame this is the pair
    of Sylvester equations

        T_P U - U T_Q = G12,      T_Q V - V T_P = -G21,

    where ``G`` is ``T'`` in the frame.  Requires ``[P, T]`` to vanish and
    the block spectra to be separated; a collapsed gap raises
    :class:`DomainError`.
    """
    t = as_square(t, "T")
    tp = as_square(tp, "T'")
    scale = max(1.0, np.linalg.norm(t, "fro"))
    comm = np.linalg.norm(p.matrix @ t - t @ p.matrix, "fro")
    if comm > 1e-8 * scale:
        raise DomainError(f"P and T do not commute: |[P,T]| = {comm:.3e}")
    t_p, _, _, t_q = p.frame.blocks(t)
    if 0 < p.rank < p.n:
        gap = min(sep_brute(t_p, t_q).value, sep_brute(t_q, t_p).value)
        if gap < sep_floor:
            raise DomainError(
                f"spectral gap collapsed: sep(T_P, T_Q) = {gap:.3e}")
    g11, g12, g21, g22 = p.frame.blocks(tp)
    if p.rank == 0 or p.rank == p.n:
        return np.zeros_like(t)
    u = solve_dense(t_p, t_q, g12, tols=tols)
    v = solve_dense(t_q, t_p, -g21, tols=tols)
    pp = p.frame.from_offdiagonal(u, v)

    resid = np.linalg.norm((pp @ t - t @ pp) + (p.matrix @ tp - tp @ p.matrix),
                           "fro")
    if resid > 1e-9 * max(1.0, np.linalg.norm(tp, "fro")) + comm:
        raise NumericalError(f"linearized equation residual {resid:.3e}")
    return pp


# ---------------------------------------------------------------------------
# continuation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathPoint:
    eps: float
    phi_residual: float
    comm_residual: float
    rank: int
    gap: float
    sep: float


@dataclass(frozen=True)
class ContinuationResult:
    projection: Projection
    path: tuple[PathPoint, ...]
    projections: tuple[Projection, ...]   # one per recorded grid point


def _newton_correct(p_mat, t, rank, ones_target, tols, max_iter=50):
    """Correct an approximate projection onto ``[P,T]=0`` at fixed rank.

    Newton steps live in the tangent space (two small Sylvester solves per
    iteration); the idempotent retraction handles the normal defect and a
    rank-one update re-imposes the action on the constant function.
    Returns the corrected matrix with its final residuals.
    """
    n = p_mat.shape[0]
    ones = np.ones(n)
    history = []
    for it in range(max_iter):
        phi_r = np.linalg.norm(phi(p_mat), "fro")
        frame = _frame_of(p_mat, rank)
        t_p, t12, t21, t_q = frame.blocks(t)
        comm_r = np.linalg.norm(p_mat @ t - t @ p_mat, "fro")
        history.append((phi_r, comm_r))
        if phi_r <= tols.solve and comm_r <= tols.solve:
            return p_mat, phi_r, comm_r, it
        u = solve_dense(t_p, t_q, t12)
        v = solve_dense(t_q, t_p, -t21)
        p_mat = p_mat + frame.from_offdiagonal(u, v)
        p_mat = retract(p_mat)
        if ones_target is not None:
            defect = p_mat @ ones - ones_target
            p_mat = p_mat - np.outer(defect, ones) / n
    raise NumericalError(
        f"corrector did not reach {tols.solve:g} in {max_iter} iterations; "
        f"residual history {history[-3:]}")


def continue_projection(p0: Projection, family, eps_target: float,
                        n_steps: int = 8, *,
                        tols: Tolerances = DEFAULT_TOLS,
                        accept_tol: float = 1e-11) -> ContinuationResult:
    """Continue a projection along the operator family up to ``eps_target``.

    Euler predictor with :func:`derivative`, Newton corrector in tangent
    coordinates, idempotent retraction, and a rank-one fix of the action on
    the constant function.  Steps are halved on corrector failure down to
    ``eps_target / 2**10``; the rank is monitored and a jump aborts the
    continuation.  The result records one :class:`PathPoint` (and the
    projection) per uniform grid node.
    """
    if eps_target < 0:
        raise DomainError("eps_target must be nonnegative")
    ones_target = None
    if p0.submanifold == "fixes_one":
        ones_target = np.ones(p0.n)
    elif p0.submanifold == "kills_one":
        ones_target = np.zeros(p0.n)

    def record(eps, proj, t):
        rep = gap_report(t, proj)
        return PathPoint(eps, float(np.linalg.norm(phi(proj.matrix), "fro")),
                         float(np.linalg.norm(proj.matrix @ t - t @ proj.matrix,
                                              "fro")),
                         proj.rank, rep.gap, rep.sep)

    t0 = family.at(0.0)
    path = [record(0.0, p0, t0)]
    projections = [p0]
    if eps_target == 0 or n_steps < 1:
        return ContinuationResult(p0, tuple(path), tuple(projections))

    floor = eps_target / 2 ** 10
    grid = np.linspace(0.0, eps_target, n_steps + 1)
    current = p0
    eps = 0.0
    for target in grid[1:]:
        while eps < target - 1e-15:
            step = target - eps
            while True:
                try:
                    pred = current.matrix + step * derivative(
                        current, family.at(eps), family.derivative(eps),
                        tols=tols)
                    corrected, phi_r, comm_r, _ = _newton_correct(
                        pred, family.at(eps + step), current.rank,
                        ones_target, tols)
                    break
                except (NumericalError, DomainError):
                    step *= 0.5
                    if step < floor:
                        raise NumericalError(
                            f"continuation stalled near eps={eps:.6g}: step "
                            f"fell below {floor:.3g}")
            proj = Projection(corrected, tols=tols, idem_tol=accept_tol)
            if proj.rank != p0.rank:
                raise DomainError(
                    f"rank jumped from {p0.rank} to {proj.rank} at "
                    f"eps={eps + step:.6g}: spectral gap lost")
            if max(phi_r, comm_r) > accept_tol:
                raise NumericalError(
                    f"accepted-step residuals above {accept_tol:g}")
            current = proj
            eps += step
        path.append(record(target, current, family.at(target)))
        projections.append(current)
    return ContinuationResult(current, tuple(path), tuple(projections))


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapReport:
    eigenvalues_image: np.ndarray
    eigenvalues_kernel: np.ndarray
    gap: float
    sep: float


def gap_report(t, p: Projection) -> GapReport:
    """Block spectra of ``T`` in the frame of ``P``, their distance, and the
    brute-force separation of the diagonal blocks."""
    t = as_square(t, "T")
    t_p, _, _, t_q = p.frame.blocks(t)
    lam_p = np.linalg.eigvals(t_p) if t_p.size else np.zeros(0, complex)
    lam_q = np.linalg.eigvals(t_q) if t_q.size else np.zeros(0, complex)
    if lam_p.size == 0 or lam_q.size == 0:
        return GapReport(lam_p, lam_q, np.inf, np.inf)
    gap = float(np.abs(lam_p[:, None] - lam_q[None, :]).min())
    sep = min(sep_brute(t_p, t_q).value, sep_brute(t_q, t_p).value)
    return GapReport(lam_p, lam_q, gap, sep)
