"""Command-line interface.

Subcommands: ``spectrum | ergodicity | dobrushin | sep | sylvester |
continue | effective | verify``.  Every command reads its input from a JSON
config file, resolves all defaults, and emits a JSON report embedding the
resolved config, the library version, the seed and the wall-clock duration,
so runs are reproducible from the report alone.  Path-like results
(continuation paths, eps sweeps) are additionally written as CSV next to
the JSON output.

Exit codes: 0 success, 1 domain error, 2 numerical failure, 3 config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__, dobrushin, model, perturb, projection, sylvester
from .acceptance import format_table, run_acceptance
from .errors import ConfigError, DomainError, NumericalError
from .numerics import Disk

DEFAULT_SEED = 20240601

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """Argument errors are config errors (exit code 3), not usage exits."""

    def error(self, message):
        raise ConfigError(message)


def _load_config(path: str) -> dict:
    if path is None:
        raise ConfigError("--config PATH is required for this command")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON at line {e.lineno}, "
                          f"column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return doc


def _matrix_from(doc: dict, key: str) -> np.ndarray:
    if key not in doc:
        raise ConfigError(f"$.{key}: missing matrix")
    try:
        arr = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"$.{key}: not a numeric matrix: {e}") from e
    if arr.ndim != 2:
        raise ConfigError(f"$.{key}: expected a 2-d array")
    return arr


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_atomic(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".stochpert-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating))
                         else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands: each takes (config dict, argparse args) and returns
# (result dict, optional (header, rows) CSV table)
# ---------------------------------------------------------------------------

def _resolve_eps(cfg: dict, args) -> float:
    if getattr(args, "eps", None) is not None:
        return float(args.eps.split(",")[0]) if isinstance(args.eps, str) \
            else float(args.eps)
    return float(cfg.get("epsilon", 0.0))


def _eps_list(args, cfg) -> list[float]:
    if getattr(args, "eps", None) is None:
        return [float(cfg.get("epsilon", 0.0))]
    if isinstance(args.eps, str):
        return [float(v) for v in args.eps.split(",") if v]
    return [float(args.eps)]


_MODEL_KEYS = ("graph", "alpha", "epsilon", "beta_override")


def _model_of(cfg: dict, eps: float | None = None,
              extra_allowed: tuple[str, ...] = ()) -> model.PcaModel:
    unknown = set(cfg) - set(_MODEL_KEYS) - set(extra_allowed)
    if unknown:
        raise ConfigError(f"$.{sorted(unknown)[0]}: unknown field")
    mdl = model.model_from_json({k: cfg[k] for k in _MODEL_KEYS if k in cfg})
    if eps is None or eps == mdl.epsilon:
        return mdl
    return model.PcaModel(mdl.graph, mdl.alpha, eps, mdl.beta_override)


def _cluster(eigs: np.ndarray, tol: float = 1e-8):
    clusters: list[list[complex]] = []
    for lam in sorted(eigs, key=lambda z: (z.real, z.imag)):
        for members in clusters:
            center = sum(members) / len(members)
            if abs(lam - center) <= tol:
                members.append(lam)
                break
        else:
            clusters.append([lam])
    out = []
    for members in clusters:
        center = sum(members) / len(members)
        out.append({"center_re": center.real, "center_im": center.imag,
                    "count": len(members)})
    out.sort(key=lambda c: (-c["count"], c["center_re"]))
    return out


def cmd_spectrum(cfg, args):
    eps = _resolve_eps(cfg, args)
    mdl = _model_of(cfg, eps)
    eigs = np.linalg.eigvals(mdl.operator())
    clusters = _cluster(eigs)
    gap = np.inf
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            zi = complex(clusters[i]["center_re"], clusters[i]["center_im"])
            zj = complex(clusters[j]["center_re"], clusters[j]["center_im"])
            gap = min(gap, abs(zi - zj))
    order = np.lexsort((eigs.imag, eigs.real))
    return {
        "epsilon": eps,
        "eigenvalues": [{"re": z.real, "im": z.imag} for z in eigs[order]],
        "clusters": clusters,
        "gap": gap if np.isfinite(gap) else None,
    }, None


def cmd_ergodicity(cfg, args):
    eps = _resolve_eps(cfg, args)
    mdl = _model_of(cfg, eps)
    rep = dobrushin.dependency_matrix(mdl)
    m = mdl.graph.max_degree
    return {
        "epsilon": eps,
        "gamma": rep.gamma.tolist(),
        "linf_norm": rep.linf_norm,
        "closed_form_bound": 1.0 - (1.0 - m * mdl.alpha) * eps,
        "geometrically_ergodic": rep.geometrically_ergodic,
    }, None


def cmd_dobrushin(cfg, args):
    eps = _resolve_eps(cfg, args)
    mdl = _model_of(cfg, eps, extra_allowed=("measure",))
    pm = dobrushin.ProductMetric.discrete(mdl.product_metric_sizes())
    measure = cfg.get("measure")
    if measure is not None:
        if "values" in measure:
            mu = np.asarray(measure["values"], dtype=float)
        elif "point_masses" in measure:
            pair = measure["point_masses"]
            if len(pair) != 2:
                raise ConfigError("$.measure.point_masses: expected two "
                                  "configurations")
            mu = (model.delta_measure(pair[0], mdl.n_sites)
                  - model.delta_measure(pair[1], mdl.n_sites))
        else:
            raise ConfigError("$.measure: expected 'values' or 'point_masses'")
        zn = dobrushin.z_norm(mu, pm)
        return {"epsilon": eps, "z_norm_primal": zn.primal,
                "z_norm_dual": zn.dual}, None
    tp = mdl.family().derivative(eps)
    sn = dobrushin.star_norm(tp, pm)
    return {
        "epsilon": eps,
        "z_operator_norm": sn.z_operator,
        "simplex_image_norm": sn.simplex_image,
        "tangent_norm": sn.value,
    }, None


def cmd_sep(cfg, args):
    a = _matrix_from(cfg, "A")
    b = _matrix_from(cfg, "B")
    method = cfg.get("method", "brute")
    norm = cfg.get("norm", "frobenius")
    if method == "brute":
        rep = sylvester.sep_brute(a, b, norm=norm,
                                  seed=args.seed)
    elif method == "series":
        rep = sylvester.sep_bound_discrete(a, b, float(cfg.get("lam", 1.05)),
                                           norm=norm)
    elif method == "ct":
        rep = sylvester.sep_bound_ct(
            a, b, r=cfg.get("r"),
            eps_margin=float(cfg.get("eps_margin", 1e-6)), norm=norm)
    else:
        raise ConfigError(f"$.method: unknown sep method {method!r}")
    return {
        "sep": rep.value,
        "norm": rep.norm,
        "method": rep.method,
        "constants": _jsonable(rep.constants),
        "interval": list(rep.interval) if rep.interval else None,
    }, None


def cmd_sylvester(cfg, args):
    a = _matrix_from(cfg, "A")
    b = _matrix_from(cfg, "B")
    c = _matrix_from(cfg, "C")
    method = cfg.get("method", "kron")
    if method in ("kron", "schur"):
        x = sylvester.solve_dense(a, b, c, method=method)
    elif method == "series":
        x = sylvester.solve_series(a, b, c)
    elif method == "integral":
        if "r" not in cfg:
            raise ConfigError("$.r: required for the integral solver")
        x = sylvester.solve_integral(a, b, c, float(cfg["r"]))
    else:
        raise ConfigError(f"$.method: unknown solver {method!r}")
    resid = float(np.linalg.norm(a @ x - x @ b - c, "fro"))
    return {"X": x.tolist(), "residual_fro": resid, "method": method}, None


def cmd_continue(cfg, args):
    eps = _resolve_eps(cfg, args)
    if eps <= 0:
        raise ConfigError("a positive --eps (or config epsilon) is required")
    mdl = _model_of(cfg, eps)
    fam = mdl.family()
    p0 = projection.Projection(fam.t0)
    res = projection.continue_projection(p0, fam, eps, args.steps or 8)
    rows = [(pt.eps, pt.phi_residual, pt.comm_residual, pt.rank, pt.gap,
             pt.sep) for pt in res.path]
    result = {
        "epsilon": eps,
        "steps": args.steps or 8,
        "rank": res.projection.rank,
        "projection": res.projection.matrix.tolist(),
        "path": [dict(zip(("eps", "phi_residual", "comm_residual", "rank",
                           "gap", "sep"), row)) for row in rows],
    }
    return result, (("eps", "phi_residual", "comm_residual", "rank", "gap",
                     "sep"), rows)


def cmd_effective(cfg, args):
    eps_values = _eps_list(args, cfg)
    order = args.order or "2"
    mdl = _model_of(cfg, eps_values[0])
    steps = args.steps or 64
    if len(eps_values) == 1:
        red = perturb.effective_operator(mdl, eps_values[0], order,
                                         n_steps=steps)
        return {
            "epsilon": eps_values[0],
            "order": order,
            "matrix": red.matrix.tolist(),
            "basis": red.basis.tolist(),
            "row_sum_defect": red.row_sum_defect,
            "offblock_residual": red.offblock_residual,
        }, None
    sweep = []
    rows = []
    for eps in eps_values:
        exact = perturb.effective_operator(mdl, eps, "exact", n_steps=steps)
        o1 = perturb.effective_operator(mdl, eps, "1")
        o2 = perturb.effective_operator(mdl, eps, "2")
        e1 = float(np.abs(o1.matrix - exact.matrix).max())
        e2 = float(np.abs(o2.matrix - exact.matrix).max())
        sweep.append({"eps": eps, "order1_error": e1, "order2_error": e2,
                      "exact": exact.matrix.tolist()})
        rows.append((eps, e1, e2,
                     *[float(v) for v in exact.matrix.ravel()]))
    k = int(np.sqrt(len(rows[0]) - 3))
    header = ("eps", "order1_error", "order2_error",
              *[f"exact_{i}{j}" for i in range(k) for j in range(k)])
    return {"order": order, "sweep": sweep}, (header, rows)


def cmd_verify(cfg, args):
    results = run_acceptance(seed=args.seed)
    print(format_table(results))
    ok = all(r.passed for r in results)
    return {
        "criteria": [{"id": r.cid, "title": r.title, "passed": r.passed,
                      "detail": r.detail} for r in results],
        "all_passed": ok,
    }, None


_COMMANDS = {
    "spectrum": (cmd_spectrum, True),
    "ergodicity": (cmd_ergodicity, True),
    "dobrushin": (cmd_dobrushin, True),
    "sep": (cmd_sep, True),
    "sylvester": (cmd_sylvester, True),
    "continue": (cmd_continue, True),
    "effective": (cmd_effective, True),
    "verify": (cmd_verify, False),
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="stochpert",
                     description="stochastic-operator perturbation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (fn, needs_config) in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config path",
                       required=False)
        p.add_argument("--out", help="write the JSON report here "
                                     "(atomically); table results also get "
                                     "a sibling .csv")
        p.add_argument("--eps", help="epsilon value, or comma list for "
                                     "sweeps", default=None)
        p.add_argument("--order", choices=["1", "2", "exact"], default=None)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--steps", type=int, default=None)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        fn, needs_config = _COMMANDS[args.command]
        cfg = _load_config(args.config) if needs_config or args.config else {}
        start = time.perf_counter()
        result, table = fn(cfg, args)
        duration = time.perf_counter() - start
        report = {
            "command": args.command,
            "meta": {
                "config": cfg,
                "options": {
                    "eps": args.eps, "order": args.order, "seed": args.seed,
                    "steps": args.steps,
                },
                "version": __version__,
                "seed": args.seed,
                "duration_s": duration,
            },
            "result": _jsonable(result),
        }
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
        if args.out:
            _write_atomic(args.out, text)
            if table is not None:
                header, rows = table
                root, _ = os.path.splitext(args.out)
                _write_atomic(root + ".csv", _csv_text(header, rows))
        if args.command != "verify":
            sys.stdout.write(text)
        if args.command == "verify" and not result["all_passed"]:
            return 1
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    except DomainError as e:
        print(f"domain error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
