"""Command-line surface: config files, seeding, persistence wiring.

Subcommands map one-to-one onto library operations:

    sample | chi | tails | find-pc | sweep | diam | mix | oracle | fit | audit

Configuration can come from an INI file (sections [config]/[graph]/[run]/
[sweep]) and/or flags; flags override file values, unknown keys and unknown
schema versions are rejected.  Exit codes: 0 success, 2 validation error,
3 budget/convergence failure (partial results are still persisted), and 1
for an audit that ran but found violations.  Errors are emitted as one JSON
object on stderr with a machine-readable ``error`` code.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import estimators, geometry, harness, oracle, records, rwalk
from .critical import TargetUnreachable, find_pc
from .graphs import Family, GraphSpec, InvalidSpec, VertexOutOfRange, edge_list
from .harness import (
    InsufficientPoints,
    InsufficientSamples,
    PPolicy,
    SweepPlan,
    WindowTooNarrow,
    fit_exponent,
    fit_from_sweep,
    run_sweep,
)
from .percolate import InvalidProbability, RankOutOfRange, cluster, extract_cluster, sample_bonds
from .rwalk import NoConvergence, SingletonCluster

CONFIG_VERSION = 1
OUTPUT_DIR_ENV = "PERCOLAB_OUTPUT_DIR"


class ConfigError(ValueError):
    def __init__(self, message: str, code: str = "config_error"):
        super().__init__(message)
        self.code = code


_GRAPH_KEYS = {"family": str, "d": int, "r": int, "L": int, "n": int}
_RUN_KEYS = {
    "p": float,
    "lambda": float,
    "seed": int,
    "replicates": int,
    "budget": int,
    "tolerance": float,
    "output": str,
    "workers": int,
    "ks": str,
    "x": int,
    "rank": int,
    "k": int,
    "kmin": float,
    "kmax": float,
    "max-steps": int,
    "exact-threshold": int,
    "method": str,
    "dump-config": bool,
    "m-ranks": int,
    "replicate": int,
}
_SWEEP_KEYS = {
    "sizes": str,
    "policy": str,
    "statistics": str,
    "half-width": float,
    "points": int,
}


@dataclass
class ExperimentConfig:
    """Flat key-value experiment description; round-trips through INI."""

    version: int = CONFIG_VERSION
    graph: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path!r}")
        known_sections = {"config", "graph", "run", "sweep"}
        unknown = set(parser.sections()) - known_sections
        if unknown:
            raise ConfigError(
                f"unknown config sections: {sorted(unknown)}", "unknown_config_key"
            )
        cfg = cls()
        if parser.has_section("config"):
            extra = set(parser["config"]) - {"version"}
            if extra:
                raise ConfigError(
                    f"unknown [config] keys: {sorted(extra)}", "unknown_config_key"
                )
            cfg.version = parser.getint("config", "version", fallback=CONFIG_VERSION)
        if cfg.version != CONFIG_VERSION:
            raise ConfigError(
                f"unsupported config version {cfg.version}; this build reads"
                f" version {CONFIG_VERSION}",
                "unsupported_config_version",
            )
        for section, keys, target in (
            ("graph", _GRAPH_KEYS, cfg.graph),
            ("run", _RUN_KEYS, cfg.run),
            ("sweep", _SWEEP_KEYS, cfg.sweep),
        ):
            if not parser.has_section(section):
                continue
            for key, raw in parser[section].items():
                if key not in keys:
                    raise ConfigError(
                        f"unknown [{section}] key {key!r}", "unknown_config_key"
                    )
                target[key] = _parse_value(keys[key], raw, f"[{section}] {key}")
        return cfg

    def to_file(self, path: str) -> None:
        parser = configparser.ConfigParser()
        parser["config"] = {"version": str(self.version)}
        for name, section in (("graph", self.graph), ("run", self.run), ("sweep", self.sweep)):
            if section:
                parser[name] = {
                    k: str(v).lower() if isinstance(v, bool) else str(v)
                    for k, v in section.items()
                }
        with open(path, "w") as fh:
            parser.write(fh)


def _parse_value(typ, raw: str, where: str):
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {where} value {raw!r} as {typ.__name__}") from None


def _build_spec(graph: dict) -> GraphSpec:
    if "family" not in graph:
        raise ConfigError("graph family is required (flag --family or [graph] family)")
    data = {k: v for k, v in graph.items() if v is not None}
    try:
        data["family"] = Family(data["family"])
    except ValueError:
        raise InvalidSpec(f"unknown family {data['family']!r}") from None
    return GraphSpec(**data)


def _sized_spec(base: dict, size: int) -> GraphSpec:
    family = Family(base["family"])
    data = dict(base)
    if family in (Family.COMPLETE, Family.ERDOS_RENYI):
        data["n"] = size
    elif family is Family.HYPERCUBE:
        data["d"] = size
    else:
        data["r"] = size
    return _build_spec(data)


def _resolve_output(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _emit(out) -> None:
    sys.stdout.write(records.canonical_json(out) + "\n")


def _persist(recs: list[dict], output: str | None) -> None:
    output = _resolve_output(output)
    if output is None:
        return
    records.write_jsonl(recs, output)
    _, meta = records.sidecar_paths(output)
    records.write_meta(meta)


def _parse_ks(run: dict, V: int) -> np.ndarray:
    if run.get("ks"):
        return np.array(sorted({int(x) for x in str(run["ks"]).split(",")}), dtype=np.int64)
    return estimators.default_k_grid(V)


def _base_record(spec, statistic, value, se, run, record_type="estimate", **extra):
    row = {
        "record_type": record_type,
        "spec": spec.to_dict(),
        "p": run.get("p"),
        "lambda": run.get("lambda"),
        "seed": run.get("seed", 0),
        "replicates": run.get("replicates"),
        "statistic": statistic,
        "value": value,
        "std_error": se,
        "flags": list(spec.flags()),
    }
    row.update(extra)
    return row


# ---------------------------------------------------------------------------
# subcommands


def _cmd_sample(cfg: ExperimentConfig) -> int:
    spec = _build_spec(cfg.graph)
    run = cfg.run
    config = sample_bonds(spec, run.get("p", 0.5), run.get("seed", 0), run.get("replicate", 0))
    out = {
        "spec": spec.to_dict(),
        "p": config.p,
        "seed": config.seed,
        "replicate": config.replicate,
        "edges": edge_list(spec).count,
        "open_count": config.open_count,
    }
    if run.get("dump-config"):
        out["hex_mask"] = config.hex_mask()
    _emit(out)
    return 0


def _cmd_chi(cfg: ExperimentConfig) -> int:
    spec = _build_spec(cfg.graph)
    run = cfg.run
    est = estimators.estimate_chi(
        spec, run.get("p", 0.5), run.get("replicates", 100), run.get("seed", 0),
        workers=run.get("workers", 1),
    )
    _emit({"spec": spec.to_dict(), "p": run.get("p", 0.5), "chi": est.value,
           "std_error": est.std_error, "replicates": est.replicates})
    _persist([_base_record(spec, "chi", est.value, est.std_error, run)], run.get("output"))
    return 0


def _cmd_tails(cfg: ExperimentConfig) -> int:
    spec = _build_spec(cfg.graph)
    run = cfg.run
    ks = _parse_ks(run, spec.vertex_count)
    curve = estimators.tail_probability(
        spec, run.get("p", 0.5), ks, run.get("replicates", 100), run.get("seed", 0),
        workers=run.get("workers", 1),
    )
    _emit({
        "spec": spec.to_dict(),
        "p": run.get("p", 0.5),
        "ks": ks.tolist(),
        "probs": [e.value for e in curve.probs],
        "std_errors": [e.std_error for e in curve.probs],
    })
    _persist(
        [
            _base_record(spec, "tail", e.value, e.std_error, run, k=int(k))
            for k, e in zip(ks, curve.probs)
        ],
        run.get("output"),
    )
    return 0


def _cmd_find_pc(cfg: ExperimentConfig) -> int:
    spec = _build_spec(cfg.graph)
    run = cfg.run
    pc = find_pc(
        spec,
        lam=run.get("lambda", 1.0),
        tolerance=run.get("tolerance"),
        budget=run.get("budget", 20000),
        seed=run.get("seed", 0),
        workers=run.get("workers", 1),
    )
    _emit({
        "spec": spec.to_dict(), "p_hat": pc.p_hat, "ci": list(pc.ci),
        "lambda": pc.lam, "target_chi": pc.target_chi,
        "budget_used": pc.budget_used, "flags": list(pc.flags),
    })
    rec = _base_record(
        spec, "p_hat", pc.p_hat, (pc.ci[1] - pc.ci[0]) / 2.0, run,
        record_type="critical_point",
    )
    rec["lambda"] = pc.lam
    rec["flags"] = sorted(set(rec["flags"]) | set(pc.flags))
    _persist([rec], run.get("output"))
    return 3 if not pc.converged else 0


_FIT_BY_STATISTIC = {"cmax": "cmax", "diam": "diam", "tmix": "tmix"}


def _cmd_sweep(cfg: ExperimentConfig) -> int:
    run, sweep = cfg.run, cfg.sweep
    if "sizes" not in sweep:
        raise ConfigError("sweep requires sizes (flag --sizes or [sweep] sizes)")
    sizes = [int(x) for x in str(sweep["sizes"]).split(",")]
    specs = tuple(_sized_spec(cfg.graph, s) for s in sizes)
    statistics = tuple(
        s.strip() for s in sweep.get("statistics", "chi,cmax,ranks,tail").split(",")
    )
    policy_name = sweep.get("policy", "find-pc").replace("-", "_")
    policy = PPolicy(
        mode=policy_name,
        p=run.get("p"),
        lam=run.get("lambda", 1.0),
        tolerance=run.get("tolerance"),
        budget=run.get("budget", 20000),
    )
    plan = SweepPlan(
        specs=specs,
        policy=policy,
        statistics=statistics,
        replicates=run.get("replicates", 100),
        seed=run.get("seed", 0),
        m_ranks=run.get("m-ranks", 3),
        diameter_exact_threshold=run.get("exact-threshold", 5000),
        mixing_max_steps=run.get("max-steps", 1 << 22),
        workers=run.get("workers", 1),
    )
    result = run_sweep(plan)
    recs = result.records()
    if len(specs) >= 3:
        for stat in ("cmax", "diam", "tmix"):
            if stat == "cmax" and "cmax" not in plan.statistics:
                continue
            if stat == "diam" and "diameter" not in plan.statistics:
                continue
            if stat == "tmix" and "mixing" not in plan.statistics:
                continue
            fit = fit_from_sweep(result, stat)
            recs.append(harness.fit_record(fit, result, f"{stat}_median"))
    output = _resolve_output(run.get("output"))
    if output:
        records.write_jsonl(recs, output)
        samples_path, meta_path = records.sidecar_paths(output)
        records.write_samples(result.samples_payload(), samples_path)
        records.write_meta(meta_path)
    _emit({
        "sizes": [s.V for s in result.sizes],
        "p": [s.p for s in result.sizes],
        "records": len(recs),
        "output": output,
    })
    unresolved = any(
        s.pc is not None and not s.pc.converged for s in result.sizes
    )
    return 3 if unresolved else 0


def _select_cluster(cfg: ExperimentConfig):
    spec = _build_spec(cfg.graph)
    run = cfg.run
    config = sample_bonds(spec, run.get("p", 0.5), run.get("seed", 0), run.get("replicate", 0))
    labeling = cluster(config)
    if run.get("x") is not None:
        sub = extract_cluster(config, vertex=run["x"], labeling=labeling)
    else:
        sub = extract_cluster(config, rank=run.get("rank", 1), labeling=labeling)
    return spec, run, sub


def _cmd_diam(cfg: ExperimentConfig) -> int:
    spec, run, sub = _select_cluster(cfg)
    result = geometry.diameter(sub, run.get("exact-threshold", 5000))
    _emit({
        "spec": spec.to_dict(), "p": run.get("p", 0.5),
        "cluster_vertices": sub.n_vertices, "cluster_edges": sub.n_edges,
        "diameter": result.value, "exact": result.exact, "method": result.method,
    })
    return 0


def _cmd_mix(cfg: ExperimentConfig) -> int:
    spec, run, sub = _select_cluster(cfg)
    method = run.get("method", "exact")
    if method == "exact":
        res = rwalk.mixing_time_exact(sub, run.get("max-steps", 1 << 22))
    elif method == "upper":
        res = rwalk.mixing_time_upper_edge_diam(
            sub, exact_threshold=run.get("exact-threshold", 5000)
        )
    elif method == "spectral":
        res = rwalk.mixing_time_spectral(sub)
    else:
        raise ConfigError(f"unknown mix method {method!r}")
    out = {
        "spec": spec.to_dict(), "p": run.get("p", 0.5),
        "cluster_vertices": sub.n_vertices, "cluster_edges": sub.n_edges,
        "t_mix": res.t_mix, "exact": res.exact, "method": res.method,
        "flags": list(res.flags),
    }
    if res.bracket is not None:
        out["bracket"] = list(res.bracket)
    _emit(out)
    return 3 if "step_budget_exceeded" in res.flags else 0


def _cmd_oracle(cfg: ExperimentConfig) -> int:
    spec = _build_spec(cfg.graph)
    run = cfg.run
    report = oracle.enumerate_exact(spec, run.get("p", 0.5), run.get("m-ranks", 3))
    doc = report.to_json_dict()
    output = _resolve_output(run.get("output"))
    if output:
        with open(output, "w") as fh:
            fh.write(records.canonical_json(doc) + "\n")
    _emit(doc)
    return 0


def _cmd_fit(cfg: ExperimentConfig, input_path: str, statistic: str, summary: str) -> int:
    payload = records.read_samples(input_path)
    sizes, samples = [], []
    for entry in payload["sizes"]:
        stats = entry["statistics"]
        if statistic not in stats:
            raise ConfigError(f"statistic {statistic!r} not in samples file")
        values = [v for v in stats[statistic] if v is not None]
        sizes.append(entry["V"])
        samples.append(np.asarray(values, dtype=np.float64))
    fit = fit_exponent(sizes, samples, summary=summary, seed=payload.get("seed", 0))
    _emit({
        "statistic": statistic, "summary": summary, "slope": fit.slope,
        "intercept": fit.intercept, "r_squared": fit.r_squared,
        "slope_ci": list(fit.slope_ci), "points_used": fit.points_used,
    })
    return 0


def _cmd_audit(cfg: ExperimentConfig) -> int:
    spec = _build_spec(cfg.graph)
    run = cfg.run
    p = run.get("p", 0.5)
    if edge_list(spec).count <= oracle.MAX_EDGES:
        checks = estimators.inequality_audit_exact(oracle.enumerate_exact(spec, p))
        mode = "exact"
    else:
        ks = _parse_ks(run, spec.vertex_count)
        checks = estimators.inequality_audit_mc(
            spec, p, ks, run.get("replicates", 2000), run.get("seed", 0),
            workers=run.get("workers", 1),
        )
        mode = "monte_carlo"
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} "
              f"(n={c.n_checked}, worst_margin={c.worst_margin:.3g})")
    _emit({
        "spec": spec.to_dict(), "p": p, "mode": mode,
        "passed": all(c.passed for c in checks),
        "checks": [
            {"name": c.name, "passed": c.passed, "n": c.n_checked,
             "worst_margin": None if c.n_checked == 0 else c.worst_margin}
            for c in checks
        ],
    })
    return 0 if all(c.passed for c in checks) else 1


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI experiment config; flags override it")
    g = sub.add_argument_group("graph")
    g.add_argument("--family", choices=[f.value for f in Family])
    for name in ("d", "r", "L", "n"):
        g.add_argument(f"--{name}", type=int)
    r = sub.add_argument_group("run")
    r.add_argument("--p", type=float)
    r.add_argument("--lambda", dest="lambda_", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--replicates", "--reps", dest="replicates", type=int)
    r.add_argument("--budget", type=int)
    r.add_argument("--tolerance", type=float)
    r.add_argument("--output", "-o")
    r.add_argument("--workers", type=int)
    r.add_argument("--ks")
    r.add_argument("--x", type=int)
    r.add_argument("--rank", type=int)
    r.add_argument("--k", type=int)
    r.add_argument("--replicate", type=int)
    r.add_argument("--max-steps", dest="max_steps", type=int)
    r.add_argument("--exact-threshold", dest="exact_threshold", type=int)
    r.add_argument("--method", choices=["exact", "upper", "spectral"])
    r.add_argument("--dump-config", dest="dump_config", action="store_true", default=None)
    r.add_argument("--m-ranks", dest="m_ranks", type=int)


_FLAG_TO_RUN_KEY = {
    "p": "p", "lambda_": "lambda", "seed": "seed", "replicates": "replicates",
    "budget": "budget", "tolerance": "tolerance", "output": "output",
    "workers": "workers", "ks": "ks", "x": "x", "rank": "rank", "k": "k",
    "replicate": "replicate", "max_steps": "max-steps",
    "exact_threshold": "exact-threshold", "method": "method",
    "dump_config": "dump-config", "m_ranks": "m-ranks",
}
_FLAG_TO_SWEEP_KEY = {
    "sizes": "sizes", "policy": "policy", "statistics": "statistics",
    "half_width": "half-width", "points": "points",
}


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = (
        ExperimentConfig.from_file(args.config)
        if getattr(args, "config", None)
        else ExperimentConfig()
    )
    for name in ("family", "d", "r", "L", "n"):
        value = getattr(args, name, None)
        if value is not None:
            cfg.graph[name] = value
    for flag, key in _FLAG_TO_RUN_KEY.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg.run[key] = value
    for flag, key in _FLAG_TO_SWEEP_KEY.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg.sweep[key] = value
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percolab",
        description="critical bond-percolation laboratory",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sample", "sample one bond configuration"),
        ("chi", "Monte Carlo susceptibility E|C(0)|"),
        ("tails", "cluster-size tail probabilities P(|C| >= k)"),
        ("find-pc", "locate p_c from chi(p) = lambda V^(1/3)"),
        ("sweep", "run a multi-size sweep with per-size statistics"),
        ("diam", "diameter of a sampled cluster"),
        ("mix", "mixing time of lazy walk on a sampled cluster"),
        ("oracle", "exact enumeration report for a tiny graph"),
        ("fit", "log-log exponent fit from a samples file"),
        ("audit", "run the five-inequality suite"),
    ):
        sub = subs.add_parser(name, help=help_text)
        _add_common(sub)
        if name == "sweep":
            s = sub.add_argument_group("sweep")
            s.add_argument("--sizes")
            s.add_argument("--policy", choices=["fixed", "inverse-n", "find-pc"])
            s.add_argument("--statistics")
            s.add_argument("--half-width", dest="half_width", type=float)
            s.add_argument("--points", type=int)
        if name == "fit":
            sub.add_argument("--input", required=True)
            sub.add_argument("--statistic", default="cmax")
            sub.add_argument("--summary", default="median", choices=["median", "mean"])
    return parser


_VALIDATION_ERRORS = (
    InvalidSpec,
    InvalidProbability,
    VertexOutOfRange,
    RankOutOfRange,
    oracle.TooManyEdges,
    TargetUnreachable,
    InsufficientPoints,
    InsufficientSamples,
    WindowTooNarrow,
    SingletonCluster,
    ConfigError,
    ValueError,
)

_ERROR_CODES = {
    InvalidSpec: "invalid_spec",
    InvalidProbability: "invalid_probability",
    VertexOutOfRange: "vertex_out_of_range",
    RankOutOfRange: "rank_out_of_range",
    oracle.TooManyEdges: "too_many_edges",
    TargetUnreachable: "target_unreachable",
    InsufficientPoints: "insufficient_points",
    InsufficientSamples: "insufficient_samples",
    WindowTooNarrow: "window_too_narrow",
    SingletonCluster: "singleton_cluster",
    NoConvergence: "no_convergence",
}


def _error_code(exc: Exception) -> str:
    if isinstance(exc, ConfigError):
        return exc.code
    for cls, code in _ERROR_CODES.items():
        if isinstance(exc, cls):
            return code
    return "invalid_argument"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "sample":
            return _cmd_sample(cfg)
        if args.command == "chi":
            return _cmd_chi(cfg)
        if args.command == "tails":
            return _cmd_tails(cfg)
        if args.command == "find-pc":
            return _cmd_find_pc(cfg)
        if args.command == "sweep":
            return _cmd_sweep(cfg)
        if args.command == "diam":
            return _cmd_diam(cfg)
        if args.command == "mix":
            return _cmd_mix(cfg)
        if args.command == "oracle":
            return _cmd_oracle(cfg)
        if args.command == "fit":
            return _cmd_fit(cfg, args.input, args.statistic, args.summary)
        if args.command == "audit":
            return _cmd_audit(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except NoConvergence as exc:
        sys.stderr.write(
            records.canonical_json({"error": "no_convergence", "message": str(exc)}) + "\n"
        )
        return 3
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(
            records.canonical_json({"error": _error_code(exc), "message": str(exc)}) + "\n"
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
