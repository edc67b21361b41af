"""Probabilistic cellular automata on finite graphs.

A model is a finite undirected site graph together with a 3-state local
update rule (states ``+, 0, -`` encoded ``0, 1, 2``).  All sites update
synchronously and independently given the current configuration, so the
global transition operator over the ``3^N`` configurations factorizes row
by row into per-site probability rows.

Configuration indexing is mixed-radix little-endian: site 0 varies fastest,
``index = sum_s x_s * 3**s``.  Matrices built here are bit-reproducible.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "PLUS", "ZERO", "MINUS",
    "SiteGraph",
    "three_state_row",
    "PcaModel",
    "PerturbationFamily",
    "assemble_operator",
    "family_at_zero",
    "config_index", "index_config", "all_configs",
    "delta_measure", "apply_measure", "apply_function",
    "validate_stochastic",
    "model_from_json",
]

PLUS, ZERO, MINUS = 0, 1, 2

#: hard size cap: 3**8 = 6561 configurations
MAX_SITES = 8


@dataclass(frozen=True)
class SiteGraph:
    """Finite undirected graph: ``n_sites`` nodes and an edge list."""

    n_sites: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n_sites < 1:
            raise DomainError("graph needs at least one node")
        seen = set()
        for (u, v) in self.edges:
            if u == v:
                raise DomainError(f"self-loop at node {u}")
            if not (0 <= u < self.n_sites and 0 <= v < self.n_sites):
                raise DomainError(f"edge ({u},{v}) out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DomainError(f"duplicate edge ({u},{v})")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @staticmethod
    def path(n: int) -> "SiteGraph":
        return SiteGraph(n, tuple((i, i + 1) for i in range(n - 1)))

    def neighbors(self, s: int) -> tuple[int, ...]:
        out = [v for (u, v) in self.edges if u == s]
        out += [u for (u, v) in self.edges if v == s]
        return tuple(sorted(out))

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(self.neighbors(s)) for s in range(self.n_sites))

    @property
    def max_degree(self) -> int:
        return max(self.degrees) if self.n_sites else 0


def three_state_row(own: int, n_plus: int, n_minus: int, alpha: float,
                    eps: float, beta_override: tuple[float, float] | None = None,
                    ) -> np.ndarray:
    """One row of the local update kernel in basis ``(+, 0, -)``.

    The ``+`` state decays to ``0`` with probability ``beta_minus * eps``
    and the ``-`` state with ``beta_plus * eps``, where by default
    ``beta_minus = 1 + alpha * n_minus`` and ``beta_plus = 1 + alpha * n_plus``
    are driven by the neighbour counts.  The ``0`` state resolves to ``+``
    or ``-`` with probability one half each.  ``beta_override`` replaces the
    count-driven rates by fixed constants ``(beta_plus, beta_minus)``.
    """
    if alpha < 0:
        raise DomainError(f"alpha must be nonnegative, got {alpha}")
    if n_plus < 0 or n_minus < 0:
        raise DomainError("neighbour counts must be nonnegative")
    if beta_override is None:
        beta_plus = 1.0 + alpha * n_plus
        beta_minus = 1.0 + alpha * n_minus
    else:
        beta_plus, beta_minus = beta_override
    if not 0.0 <= eps * max(beta_plus, beta_minus) <= 1.0 or eps < 0:
        raise DomainError(
            f"epsilon={eps} outside [0, {1.0 / max(beta_plus, beta_minus):g}] "
            "for these rates")
    if own == PLUS:
        return np.array([1.0 - beta_minus * eps, beta_minus * eps, 0.0])
    if own == ZERO:
        return np.array([0.5, 0.0, 0.5])
    if own == MINUS:
        return np.array([0.0, beta_plus * eps, 1.0 - beta_plus * eps])
    raise DomainError(f"unknown local state {own}")


def _three_state_row_deriv(own: int, n_plus: int, n_minus: int, alpha: float,
                           beta_override=None) -> np.ndarray:
    """d/d(eps) of :func:`three_state_row`; independent of eps (rows affine)."""
    if beta_override is None:
        beta_plus = 1.0 + alpha * n_plus
        beta_minus = 1.0 + alpha * n_minus
    else:
        beta_plus, beta_minus = beta_override
    if own == PLUS:
        return np.array([-beta_minus, beta_minus, 0.0])
    if own == ZERO:
        return np.zeros(3)
    return np.array([0.0, beta_plus, -beta_plus])


# ---------------------------------------------------------------------------
# configuration indexing (site 0 fastest)
# ---------------------------------------------------------------------------

def config_index(cfg) -> int:
    idx = 0
    for s, x in enumerate(cfg):
        idx += int(x) * 3 ** s
    return idx


def index_config(idx: int, n_sites: int) -> tuple[int, ...]:
    out = []
    for _ in range(n_sites):
        out.append(idx % 3)
        idx //= 3
    return tuple(out)


def all_configs(n_sites: int) -> Iterator[tuple[int, ...]]:
    """Configurations in index order (site 0 fastest)."""
    for idx in range(3 ** n_sites):
        yield index_config(idx, n_sites)


def _kron_row(site_rows: list[np.ndarray]) -> np.ndarray:
    """Tensor a list of per-site rows so that site 0 varies fastest."""
    out = site_rows[-1]
    for r in reversed(site_rows[:-1]):
        out = np.kron(out, r)
    return out if len(site_rows) > 1 else site_rows[0]


# ---------------------------------------------------------------------------
# model and global operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaModel:
    """Immutable model: graph plus local-rule parameters."""

    graph: SiteGraph
    alpha: float
    epsilon: float
    beta_override: tuple[float, float] | None = None

    def __post_init__(self):
        if self.graph.n_sites > MAX_SITES:
            raise DomainError(
                f"{self.graph.n_sites} sites exceeds the desk-scale cap of "
                f"{MAX_SITES} (3^{self.graph.n_sites} configurations)")
        if self.alpha < 0:
            raise DomainError("alpha must be nonnegative")
        if self.beta_override is None:
            cap = 1.0 / (1.0 + self.alpha * self.graph.max_degree)
        else:
            cap = 1.0 / max(self.beta_override)
        if not 0.0 <= self.epsilon <= cap + 1e-15:
            raise DomainError(
                f"epsilon={self.epsilon} outside [0, {cap:g}] for this model")

    @property
    def n_sites(self) -> int:
        return self.graph.n_sites

    @property
    def n_configs(self) -> int:
        return 3 ** self.graph.n_sites

    def neighbor_counts(self, cfg, s: int) -> tuple[int, int]:
        nbrs = self.graph.neighbors(s)
        n_plus = sum(1 for t in nbrs if cfg[t] == PLUS)
        n_minus = sum(1 for t in nbrs if cfg[t] == MINUS)
        return n_plus, n_minus

    def local_row(self, s: int, cfg, eps: float | None = None) -> np.ndarray:
        """Update row for site ``s`` given the pre-update configuration."""
        n_plus, n_minus = self.neighbor_counts(cfg, s)
        e = self.epsilon if eps is None else eps
        return three_state_row(cfg[s], n_plus, n_minus, self.alpha, e,
                               self.beta_override)

    def operator(self, eps: float | None = None) -> np.ndarray:
        """Global synchronous transition operator at ``eps``."""
        e = self.epsilon if eps is None else eps
        return assemble_operator(self.graph, self.alpha, e, self.beta_override)

    def family(self) -> "PerturbationFamily":
        """The operator family parameterized by eps, with exact derivatives."""
        return _pca_family(self.graph, self.alpha, self.beta_override)

    def product_metric_sizes(self) -> tuple[int, ...]:
        return (3,) * self.graph.n_sites


def assemble_operator(graph: SiteGraph, alpha: float, eps: float,
                      beta_override=None) -> np.ndarray:
    """Dense ``3^N x 3^N`` row-stochastic operator of the synchronous update.

    ``T[x, y]`` is the product over sites of the local row probabilities,
    with neighbour counts read from the pre-update configuration ``x``.
    """
    if graph.n_sites > MAX_SITES:
        raise DomainError(f"site count exceeds cap {MAX_SITES}")
    n = 3 ** graph.n_sites
    t = np.empty((n, n))
    for idx in range(n):
        cfg = index_config(idx, graph.n_sites)
        rows = []
        for s in range(graph.n_sites):
            n_plus = sum(1 for v in graph.neighbors(s) if cfg[v] == PLUS)
            n_minus = sum(1 for v in graph.neighbors(s) if cfg[v] == MINUS)
            rows.append(three_state_row(cfg[s], n_plus, n_minus, alpha, eps,
                                        beta_override))
        t[idx] = _kron_row(rows)
    return t


@dataclass(frozen=True)
class PerturbationFamily:
    """eps-parameterized operator family with exact derivatives.

    ``at(eps)`` evaluates the operator, ``derivative(eps)`` its first
    eps-derivative and ``second_derivative(eps)`` the second one.  The
    cached ``t0``/``t0_prime`` give the operator and its derivative at 0.
    Tangent directions satisfy ``T' @ 1 = 0`` (rows of the derivative sum
    to zero) because every member is row-stochastic.
    """

    at: Callable[[float], np.ndarray]
    derivative: Callable[[float], np.ndarray]
    second_derivative: Callable[[float], np.ndarray]
    t0: np.ndarray
    t0_prime: np.ndarray


def _pca_family(graph: SiteGraph, alpha: float, beta_override) -> PerturbationFamily:
    n_sites = graph.n_sites
    n = 3 ** n_sites

    def site_data(cfg, eps):
        rows, drows = [], []
        for s in range(n_sites):
            n_plus = sum(1 for v in graph.neighbors(s) if cfg[v] == PLUS)
            n_minus = sum(1 for v in graph.neighbors(s) if cfg[v] == MINUS)
            rows.append(three_state_row(cfg[s], n_plus, n_minus, alpha, eps,
                                        beta_override))
            drows.append(_three_state_row_deriv(cfg[s], n_plus, n_minus, alpha,
                                                beta_override))
        return rows, drows

    def at(eps: float) -> np.ndarray:
        return assemble_operator(graph, alpha, eps, beta_override)

    def derivative(eps: float) -> np.ndarray:
        # product rule over sites; per-site rows are affine in eps
        out = np.zeros((n, n))
        for idx in range(n):
            cfg = index_config(idx, n_sites)
            rows, drows = site_data(cfg, eps)
            for s in range(n_sites):
                parts = rows[:s] + [drows[s]] + rows[s + 1:]
                out[idx] += _kron_row(parts)
        return out

    def second_derivative(eps: float) -> np.ndarray:
        out = np.zeros((n, n))
        for idx in range(n):
            cfg = index_config(idx, n_sites)
            rows, drows = site_data(cfg, eps)
            for s, t in itertools.combinations(range(n_sites), 2):
                parts = list(rows)
                parts[s] = drows[s]
                parts[t] = drows[t]
                out[idx] += 2.0 * _kron_row(parts)
        return out

    return PerturbationFamily(at, derivative, second_derivative,
                              t0=at(0.0), t0_prime=derivative(0.0))


def family_at_zero(graph: SiteGraph, alpha: float, beta_override=None,
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Operator and exact eps-derivative at eps = 0."""
    fam = _pca_family(graph, alpha, beta_override)
    return fam.t0, fam.t0_prime


# ---------------------------------------------------------------------------
# measures and functions over configurations
# ---------------------------------------------------------------------------

def delta_measure(cfg, n_sites: int) -> np.ndarray:
    """Unit point mass at a configuration, as a dense row vector."""
    if len(cfg) != n_sites:
        raise DomainError("configuration length mismatch")
    mu = np.zeros(3 ** n_sites)
    mu[config_index(cfg)] = 1.0
    return mu


def apply_measure(mu, t) -> np.ndarray:
    """Left action ``mu T`` of an operator on a measure (row vector)."""
    mu = np.asarray(mu, dtype=float)
    t = np.asarray(t, dtype=float)
    if mu.shape[0] != t.shape[0]:
        raise DomainError(f"measure length {mu.shape[0]} vs operator {t.shape}")
    return mu @ t


def apply_function(t, f) -> np.ndarray:
    """Right action ``T f`` of an operator on a function (column vector)."""
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.shape[0] != t.shape[1]:
        raise DomainError(f"function length {f.shape[0]} vs operator {t.shape}")
    return t @ f


def validate_stochastic(t: np.ndarray, tol: float = 1e-12) -> None:
    """Check row sums equal 1 within ``tol`` and entries are nonnegative."""
    t = np.asarray(t, dtype=float)
    rs = np.abs(t.sum(axis=1) - 1.0).max()
    if rs > tol:
        raise DomainError(f"row sums deviate from 1 by {rs:.3e}")
    if t.min() < -1e-15:
        raise DomainError(f"negative entry {t.min():.3e}")


# ---------------------------------------------------------------------------
# JSON configuration ingestion
# ---------------------------------------------------------------------------

def _expect(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise ConfigError(f"{path}.{key}: missing required field")
    val = doc[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise ConfigError(
            f"{path}.{key}: expected {getattr(kind, '__name__', kind)}, "
            f"got {type(val).__name__}")
    return val


def model_from_json(doc) -> PcaModel:
    """Build a model from a JSON document (text, path content, or dict).

    Schema::

        {"graph": {"nodes": int, "edges": [[int, int], ...]},
         "alpha": float, "epsilon": float,
         "beta_override": null | {"plus": float, "minus": float}}
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON at line {e.lineno}, column "
                              f"{e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError("$: expected a JSON object")

    graph_doc = _expect(doc, "graph", dict, "$")
    nodes = _expect(graph_doc, "nodes", int, "$.graph")
    raw_edges = _expect(graph_doc, "edges", list, "$.graph")
    edges = []
    for i, e in enumerate(raw_edges):
        if (not isinstance(e, list) or len(e) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool)
                           for v in e)):
            raise ConfigError(f"$.graph.edges[{i}]: expected a pair of ints")
        edges.append((e[0], e[1]))
    alpha = _expect(doc, "alpha", float, "$")
    epsilon = _expect(doc, "epsilon", float, "$")
    beta = None
    if doc.get("beta_override") is not None:
        bo = _expect(doc, "beta_override", dict, "$")
        beta = (_expect(bo, "plus", float, "$.beta_override"),
                _expect(bo, "minus", float, "$.beta_override"))
    unknown = set(doc) - {"graph", "alpha", "epsilon", "beta_override"}
    if unknown:
        raise ConfigError(f"$.{sorted(unknown)[0]}: unknown field")
    try:
        graph = SiteGraph(nodes, tuple(edges))
        return PcaModel(graph, alpha, epsilon, beta)
    except DomainError as e:
        raise ConfigError(f"$: {e}") from e
