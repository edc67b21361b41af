"""Second-order reduced dynamics of a stochastic operator family.

Along a continued spectral projection ``P(eps)`` one can pick an invertible
transport ``psi(eps)`` with ``P(eps) = psi P(0) psi^-1``; fixing its
logarithmic derivative to ``S = P'(P - Q)`` (which satisfies
``[S, P] = P'``) makes the transport, and hence the reduced operator

    That = psi^-1 T psi   restricted to the image of P(0),

well-defined.  Taylor expansion of That at 0 gives the closed second-order
form

    P0 T_eps P0 + Q0 T_eps Q0 + eps^2/2 [[T0, P0'], P0'],

whose restriction is computed by :func:`effective_operator` alongside the
exact transported reduction.  For the 3-state models the image of ``P(0)``
carries a natural near-delta basis indexed by the frozen +/- patterns, in
which all reductions are row-stochastic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .numerics import DEFAULT_TOLS, Tolerances, as_square
from .projection import Projection, continue_projection, derivative
from .model import MINUS, PLUS, PcaModel, config_index

__all__ = [
    "gauge_generator",
    "commutator_identity_defect",
    "GaugePath",
    "integrate_gauge",
    "reduced_first_order",
    "block_diagonal_part",
    "second_order_term",
    "ReducedOperator",
    "reduced_basis",
    "effective_operator",
    "two_state_row",
]


def gauge_generator(p: Projection, pp, *, tangent_tol: float = 1e-8,
                    ) -> np.ndarray:
    """Transport generator ``S = P'(P - Q)`` for a tangent direction ``P'``.

    Satisfies ``[S, P] = P'`` and sends the constant function to zero
    whenever ``P'`` does.
    """
    pp = as_square(pp, "P'")
    pm = p.matrix
    tangency = np.linalg.norm(pm @ pp + pp @ pm - pp, "fro")
    if tangency > tangent_tol * max(1.0, np.linalg.norm(pp, "fro")):
        raise DomainError(f"P' is not tangent at P: defect {tangency:.3e}")
    s = pp @ (2.0 * pm - np.eye(p.n))
    check = np.linalg.norm((s @ pm - pm @ s) - pp, "fro")
    if check > 1e-10 * max(1.0, np.linalg.norm(pp, "fro")):
        raise NumericalError(f"[S,P] = P' violated by {check:.3e}")
    return s


def commutator_identity_defect(t, tp, p: Projection, pp) -> float:
    """Residual of the linearized invariance equation,
    ``|| [T, P'] - [P, T'] ||_F``; vanishes for the exact tangent ``P'``."""
    t = as_square(t, "T")
    tp = as_square(tp, "T'")
    pp = as_square(pp, "P'")
    pm = p.matrix
    lhs = t @ pp - pp @ t
    rhs = pm @ tp - tp @ pm
    return float(np.linalg.norm(lhs - rhs, "fro"))


@dataclass(frozen=True)
class GaugePath:
    """Transport along the family on a uniform grid.

    At each grid node: ``psis[k] P0 psi_invs[k] = P(grid[k])`` and
    ``psis[k] @ 1 = 1``.
    """

    grid: np.ndarray
    psis: tuple[np.ndarray, ...]
    psi_invs: tuple[np.ndarray, ...]
    generators: tuple[np.ndarray, ...]
    projections: tuple[Projection, ...]


def integrate_gauge(family, eps_target: float, n_steps: int = 64, *,
                    tols: Tolerances = DEFAULT_TOLS,
                    conjugation_tol: float = 1e-8) -> GaugePath:
    """Integrate ``d psi / d eps = S(eps) psi`` with classical fourth-order
    steps on a uniform grid.

    The projection path (and with it ``S``) is evaluated on the half-step
    grid by continuation.  The conjugation identity and the preservation of
    the constant function are verified at every node.
    """
    t0 = family.t0
    p0 = Projection(t0, tols=tols)
    if eps_target == 0:
        eye = np.eye(p0.n)
        return GaugePath(np.array([0.0]), (eye,), (eye,),
                         (np.zeros_like(eye),), (p0,))

    fine = continue_projection(p0, family, eps_target, 2 * n_steps, tols=tols)
    fine_eps = np.linspace(0.0, eps_target, 2 * n_steps + 1)
    s_nodes = []
    for eps, proj in zip(fine_eps, fine.projections):
        pp = derivative(proj, family.at(eps), family.derivative(eps),
                        tols=tols)
        s_nodes.append(gauge_generator(proj, pp))

    h = eps_target / n_steps
    psi = np.eye(p0.n)
    psis = [psi.copy()]
    for k in range(n_steps):
        s0, sh, s1 = s_nodes[2 * k], s_nodes[2 * k + 1], s_nodes[2 * k + 2]
        k1 = s0 @ psi
        k2 = sh @ (psi + 0.5 * h * k1)
        k3 = sh @ (psi + 0.5 * h * k2)
        k4 = s1 @ (psi + h * k3)
        psi = psi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        psis.append(psi.copy())

    grid = np.linspace(0.0, eps_target, n_steps + 1)
    psi_invs = tuple(np.linalg.inv(m) for m in psis)
    coarse_projs = tuple(fine.projections[2 * k] for k in range(n_steps + 1))
    ones = np.ones(p0.n)
    for k, (m, m_inv, proj) in enumerate(zip(psis, psi_invs, coarse_projs)):
        conj = np.abs(m @ p0.matrix @ m_inv - proj.matrix).max()
        if conj > conjugation_tol:
            raise NumericalError(
                f"transport defect {conj:.3e} at node {k} exceeds "
                f"{conjugation_tol:g}")
        if np.abs(m @ ones - ones).max() > 1e-9:
            raise NumericalError(f"transport moved the constant function "
                                 f"at node {k}")
    return GaugePath(grid, tuple(psis), psi_invs,
                     tuple(s_nodes[::2]), coarse_projs)


def block_diagonal_part(op, p: Projection) -> np.ndarray:
    """``P op P + Q op Q``: the part of an operator preserving the
    image/kernel splitting."""
    op = as_square(op, "operator")
    pm = p.matrix
    q = p.complement
    return pm @ op @ pm + q @ op @ q


def reduced_first_order(tp, p: Projection) -> np.ndarray:
    """First-order reduced generator ``J = P T' P + Q T' Q``."""
    return block_diagonal_part(tp, p)


def second_order_term(t0, p0_prime) -> np.ndarray:
    """Coefficient of ``eps^2`` in the reduced expansion:
    ``[[T0, P0'], P0'] / 2`` (insensitive to the overall sign of ``P0'``)."""
    t0 = as_square(t0, "T0")
    p0_prime = as_square(p0_prime, "P0'")
    inner = t0 @ p0_prime - p0_prime @ t0
    return 0.5 * (inner @ p0_prime - p0_prime @ inner)


# ---------------------------------------------------------------------------
# reduced operator in the frozen +/- basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReducedOperator:
    """Reduction of an operator to the image of the reference projection.

    ``basis`` holds the near-delta basis columns (the projection applied to
    the frozen +/- configuration indicators, scaled to value 1 at the
    defining configuration); ``matrix`` is the operator in that basis.
    """

    basis: np.ndarray
    matrix: np.ndarray
    eps: float
    order: str
    offblock_residual: float
    row_sum_defect: float

    @property
    def stochastic(self) -> bool:
        return self.row_sum_defect <= 1e-8


def frozen_configs(n_sites: int):
    """Configurations with every site in {+, -}, ordered little-endian by
    the +/- pattern (+ first)."""
    out = []
    for bits in itertools.product((PLUS, MINUS), repeat=n_sites):
        # itertools.product varies the LAST position fastest; flip so that
        # site 0 is fastest, matching the configuration indexing convention
        out.append(tuple(reversed(bits)))
    return out


def reduced_basis(p0: Projection, n_sites: int) -> np.ndarray:
    """Near-delta basis of the image: ``P0`` applied to each frozen +/-
    indicator, scaled to evaluate to 1 at its own configuration."""
    cfgs = frozen_configs(n_sites)
    if p0.rank != len(cfgs):
        raise DomainError(f"projection rank {p0.rank} does not match "
                          f"{len(cfgs)} frozen configurations")
    cols = []
    for cfg in cfgs:
        ind = np.zeros(p0.n)
        ind[config_index(cfg)] = 1.0
        col = p0.matrix @ ind
        pivot = col[config_index(cfg)]
        if abs(pivot) < 1e-8:
            raise NumericalError("basis column vanishes at its own "
                                 "configuration")
        cols.append(col / pivot)
    return np.stack(cols, axis=1)


def _restrict(op: np.ndarray, basis: np.ndarray) -> tuple[np.ndarray, float]:
    image = op @ basis
    m, *_ = np.linalg.lstsq(basis, image, rcond=None)
    resid = float(np.abs(basis @ m - image).max())
    return m, resid


def effective_operator(model: PcaModel, eps: float, order="2", *,
                       n_steps: int = 64,
                       tols: Tolerances = DEFAULT_TOLS) -> ReducedOperator:
    """Reduced slow dynamics of the model at ``eps``.

    ``order`` selects the closed-form truncation ("1" keeps the
    block-diagonal part of the operator, "2" adds the second-order double
    commutator) or the exact transported reduction ("exact").  All three
    are expressed in the frozen +/- basis of the reference projection and
    are row-stochastic up to the reported defect.
    """
    order = str(order)
    if order not in ("1", "2", "exact"):
        raise DomainError(f"order must be '1', '2' or 'exact', got {order!r}")
    family = model.family()
    t0 = family.t0
    p0 = Projection(t0, tols=tols)     # the zero-eps operator is idempotent
    basis = reduced_basis(p0, model.n_sites)
    t_eps = family.at(eps)

    if order == "exact":
        path = integrate_gauge(family, eps, n_steps, tols=tols)
        op = path.psi_invs[-1] @ t_eps @ path.psis[-1]
    else:
        op = block_diagonal_part(t_eps, p0)
        if order == "2":
            p0p = derivative(p0, t0, family.t0_prime, tols=tols)
            op = op + eps**2 * second_order_term(t0, p0p)

    m, resid = _restrict(op, basis)
    if resid > 1e-8:
        raise NumericalError(f"reduction is not well-defined: the operator "
                             f"leaks out of the image by {resid:.3e}")
    row_defect = float(np.abs(m.sum(axis=1) - 1.0).max())
    return ReducedOperator(basis, m, float(eps), order, resid, row_defect)


def two_state_row(beta_minus: float, beta_plus: float, eps: float,
                  ) -> np.ndarray:
    """Closed-form per-site 2x2 reduced kernel in basis ``(+, -)``:
    transitions fire at rate ``eps * beta -/+ 2`` with a second-order
    correction ``eps^2 beta (beta_- - beta_+) / 4``."""
    c = eps**2 / 4.0
    a = eps * beta_minus / 2.0 - c * beta_minus * (beta_minus - beta_plus)
    b = eps * beta_plus / 2.0 - c * beta_plus * (beta_plus - beta_minus)
    return np.array([[1.0 - a, a], [b, 1.0 - b]])
