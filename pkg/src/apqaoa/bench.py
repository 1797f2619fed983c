"""Suite generation, execution and aggregation.

Results are JSON lines, one run per line, in canonical ``(n, index, strategy)``
order.  Figure data are plain CSV files.  Field-by-field schemas are listed in
the README.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable

import numpy as np
import yaml

from . import __version__
from .models import MAX_VARS, ModelSpec, generate, instance_seed, m_star, make_rng
from .optimize import OptimizerConfig, grid_scan
from .sat import CnfFormula, parse_dimacs, write_dimacs
from .schedules import _linear_raw
from .simulator import expectation, run_circuit, target_probability
from .spectrum import build_spectrum, normalize
from .strategies import (
    StrategyConfig,
    StrategyKind,
    TqaPrior,
    prepare_problem,
    run_strategy,
    tqa_precompute,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
OUT_ENV = "APQAOA_OUT"
STRATEGY_ORDER = [k.value for k in StrategyKind]
# config keys that cannot change any record content
_HASH_EXCLUDED = ("output_dir", "workers")
# salt separating TQA pre-computation instances from the measured suite
_TQA_SALT = 0x7A9


def default_output_dir() -> str:
    return os.environ.get(OUT_ENV, "apqaoa_out")


@dataclass
class ExperimentConfig:
    model: str = "F_s"
    k: int = 3
    n_values: list[int] = field(default_factory=lambda: [4, 8])
    m_rule: str = "m_star"
    m_fixed: int | None = None
    suite_size: int = 10
    base_seed: int = 0
    strategies: list[str] = field(default_factory=lambda: ["QaaInit", "QaaSetting", "ApBased"])
    depth_rule: str = "n"
    depth: int | None = None
    normalization: str = "estimated"
    c0: float = 3.0
    optimizer: dict = field(default_factory=lambda: OptimizerConfig().to_dict())
    ap_rescale_2pi: bool = True
    normalize_heuristics: bool = True
    tqa_samples: int = 20
    output_dir: str = field(default_factory=default_output_dir)
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.n_values:
            raise ValueError("n_values must not be empty")
        ModelSpec(self.model, max(self.n_values), 0, self.k)
        for n in self.n_values:
            if not self.k <= n <= MAX_VARS:
                raise ValueError(f"n={n} outside [{self.k}, {MAX_VARS}]")
        if self.suite_size < 1:
            raise ValueError("suite_size must be >= 1")
        if self.m_rule not in ("m_star", "fixed"):
            raise ValueError(f"unknown m_rule {self.m_rule!r}")
        if self.m_rule == "fixed" and (self.m_fixed is None or self.m_fixed < 0):
            raise ValueError("m_rule=fixed needs a non-negative m_fixed")
        if self.depth_rule not in ("n", "fixed"):
            raise ValueError(f"unknown depth_rule {self.depth_rule!r}")
        if self.depth_rule == "fixed" and (self.depth is None or self.depth < 1):
            raise ValueError("depth_rule=fixed needs depth >= 1")
        if self.normalization not in ("estimated", "exact"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        self.strategies = [StrategyKind(s).value for s in self.strategies]
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.optimizer_config()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "optimizer" in data:
            data["optimizer"] = {**OptimizerConfig().to_dict(), **(data["optimizer"] or {})}
        return cls(**data)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh) or {})

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def config_hash(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in _HASH_EXCLUDED}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(**self.optimizer)

    def strategy_config(self) -> StrategyConfig:
        return StrategyConfig(
            optimizer=self.optimizer_config(),
            ap_rescale_2pi=self.ap_rescale_2pi,
            normalize_heuristics=self.normalize_heuristics,
        )

    def m_for(self, n: int) -> int:
        return m_star(n) if self.m_rule == "m_star" else int(self.m_fixed)

    def p_for(self, n: int) -> int:
        return n if self.depth_rule == "n" else int(self.depth)

    def instance_specs(self) -> list[tuple[int, ModelSpec]]:
        out = []
        for n in self.n_values:
            for index in range(self.suite_size):
                seed = instance_seed(self.base_seed, n, index)
                out.append((index, ModelSpec(self.model, n, self.m_for(n), self.k, seed)))
        return out

    def tqa_seeds(self, n: int) -> list[int]:
        return [instance_seed(self.base_seed ^ _TQA_SALT, n, r) for r in range(self.tqa_samples)]


def instance_path(out_dir: str | os.PathLike, n: int, index: int) -> Path:
    return Path(out_dir) / "instances" / f"n{n:02d}" / f"inst_{index:04d}.cnf"


def cmd_gen(cfg: ExperimentConfig) -> list[Path]:
    """Write every suite instance as DIMACS plus a JSON sidecar."""
    written = []
    for index, spec in cfg.instance_specs():
        res = generate(spec)
        path = instance_path(cfg.output_dir, spec.n, index)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(write_dimacs(res.formula, [f"model={spec.kind.value} seed={spec.seed}"]))
        meta = {
            "model": spec.kind.value,
            "n": spec.n,
            "m": spec.m,
            "k": spec.k,
            "index": index,
            "seed": spec.seed,
            "hidden_t0": res.hidden_t0,
            "interpretations": res.n_interpretations,
            "satisfiable": res.n_interpretations > 0,
        }
        path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
        written.append(path)
    return written


def _load_or_generate(cfg: ExperimentConfig, index: int, spec: ModelSpec) -> CnfFormula:
    path = instance_path(cfg.output_dir, spec.n, index)
    if path.exists():
        formula = parse_dimacs(path.read_bytes(), k=spec.k)
        if formula.n != spec.n or formula.m != spec.m:
            raise ValueError(f"{path} does not match the configured suite")
        return formula
    return generate(spec).formula


def _prior_to_dict(prior: TqaPrior) -> dict:
    return asdict(prior)


def cmd_precompute_tqa(cfg: ExperimentConfig, write: bool = True) -> dict[int, TqaPrior]:
    """TQA statistical optimum per ``n`` from fresh instances outside the suite."""
    priors = {}
    scfg = cfg.strategy_config()
    for n in cfg.n_values:
        template = ModelSpec(cfg.model, n, cfg.m_for(n), cfg.k)
        priors[n] = tqa_precompute(
            template, cfg.tqa_samples, cfg.tqa_seeds(n), cfg.normalization, cfg.c0, cfg.p_for(n), scfg
        )
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        doc = {"config_hash": cfg.config_hash(), "priors": {str(n): _prior_to_dict(p) for n, p in priors.items()}}
        (out / "tqa_priors.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return priors


def _load_priors(cfg: ExperimentConfig) -> dict[int, TqaPrior] | None:
    path = Path(cfg.output_dir) / "tqa_priors.json"
    if not path.exists():
        return None
    doc = json.loads(path.read_text())
    if doc.get("config_hash") != cfg.config_hash():
        log.warning("ignoring %s: computed under a different config", path)
        return None
    return {int(n): TqaPrior(**p) for n, p in doc["priors"].items()}


def strategy_rng_seed(instance_seed_: int, strategy: str) -> int:
    return instance_seed(instance_seed_, zlib.crc32(strategy.encode()))


def _run_task(task: dict) -> dict:
    """One (instance, strategy) run; never raises."""
    cfg = ExperimentConfig.from_dict(task["config"])
    spec = ModelSpec(**task["spec"])
    index, strategy = task["index"], task["strategy"]
    instance = {"model": spec.kind.value, "n": spec.n, "m": spec.m, "k": spec.k, "index": index, "seed": spec.seed}
    base = {
        "schema_version": SCHEMA_VERSION,
        "artifact_version": __version__,
        "config_hash": cfg.config_hash(),
        "strategy": strategy,
        "instance": instance,
    }
    try:
        formula = _load_or_generate(cfg, index, spec)
        problem = prepare_problem(formula, cfg.normalization, cfg.c0, instance)
        prior = TqaPrior(**task["prior"]) if task.get("prior") else None
        rng = make_rng(strategy_rng_seed(spec.seed, strategy))
        report = run_strategy(strategy, problem, cfg.p_for(spec.n), cfg.strategy_config(), rng, prior)
        record = report.to_record()
        record.update(base)
        record["status"] = "ok"
        return record
    except Exception as exc:  # recorded, the suite continues
        return {**base, "status": "error", "error": f"{type(exc).__name__}: {exc}"}


def record_sort_key(rec: dict) -> tuple:
    inst = rec["instance"]
    strategy = rec["strategy"]
    order = STRATEGY_ORDER.index(strategy) if strategy in STRATEGY_ORDER else len(STRATEGY_ORDER)
    return (inst["n"], inst["index"], order, strategy)


def canonical(records: Iterable[dict]) -> list[dict]:
    """Records in canonical order with the machine-dependent wall time removed."""
    out = []
    for rec in sorted(records, key=record_sort_key):
        rec = dict(rec)
        rec.pop("wall_time", None)
        out.append(rec)
    return out


def cmd_run(cfg: ExperimentConfig, results_name: str = "results.jsonl") -> tuple[Path, list[dict], int]:
    """Execute every (instance, strategy) pair; returns (path, records, failures)."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    priors: dict[int, TqaPrior] = {}
    if StrategyKind.TQA.value in cfg.strategies:
        priors = _load_priors(cfg) or cmd_precompute_tqa(cfg)

    cfg_dict = cfg.to_dict()
    tasks = []
    for index, spec in cfg.instance_specs():
        spec_dict = {"kind": spec.kind.value, "n": spec.n, "m": spec.m, "k": spec.k, "seed": spec.seed}
        for strategy in cfg.strategies:
            prior = priors.get(spec.n) if strategy == StrategyKind.TQA.value else None
            tasks.append({
                "config": cfg_dict, "spec": spec_dict, "index": index, "strategy": strategy,
                "prior": _prior_to_dict(prior) if prior else None,
            })

    partial = out / (results_name + ".partial")
    records = []
    with open(partial, "w") as fh:
        if cfg.workers == 1:
            stream = map(_run_task, tasks)
            for rec in stream:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                records.append(rec)
        else:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                for rec in pool.map(_run_task, tasks, chunksize=1):
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
                    records.append(rec)

    records.sort(key=record_sort_key)
    final = out / results_name
    with open(final, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    partial.unlink()
    failures = sum(rec["status"] != "ok" for rec in records)
    return final, records, failures


def read_records(paths: Iterable[str | os.PathLike]) -> list[dict]:
    records = []
    for path in paths:
        with open(path) as fh:
            records.extend(json.loads(line) for line in fh if line.strip())
    return records


@dataclass
class AggregateRow:
    n: int
    strategy: str
    count: int
    cost_mean: float
    cost_median: float
    cost_q1: float
    cost_q3: float
    prob_mean: float
    prob_median: float


def aggregate(records: Iterable[dict]) -> list[AggregateRow]:
    groups: dict[tuple[int, str], list[dict]] = {}
    for rec in records:
        if rec.get("status", "ok") != "ok":
            continue
        groups.setdefault((rec["instance"]["n"], rec["strategy"]), []).append(rec)
    if not groups:
        raise ValueError("no successful records to aggregate")
    rows = []
    for (n, strategy), recs in sorted(groups.items(), key=lambda kv: (kv[0][0], _strategy_rank(kv[0][1]))):
        cost = np.array([r["cost_evals"] for r in recs], dtype=float)
        prob = np.array([r["target_prob"] for r in recs], dtype=float)
        q1, med, q3 = np.percentile(cost, [25, 50, 75])
        rows.append(AggregateRow(
            n, strategy, len(recs), float(cost.mean()), float(med), float(q1), float(q3),
            float(prob.mean()), float(np.median(prob)),
        ))
    return rows


def _strategy_rank(name: str) -> int:
    return STRATEGY_ORDER.index(name) if name in STRATEGY_ORDER else len(STRATEGY_ORDER)


def _write_csv(path: Path, header: list[str], rows: Iterable[Iterable]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_aggregate(paths: Iterable[str | os.PathLike], out_dir: str | os.PathLike) -> list[AggregateRow]:
    """Summary table plus per-figure CSVs."""
    records = [r for r in read_records(paths) if r.get("status", "ok") == "ok"]
    rows = aggregate(records)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = [f.name for f in fields(AggregateRow)]
    _write_csv(out / "table.csv", header, ([getattr(r, h) for h in header] for r in rows))

    records.sort(key=record_sort_key)
    _write_csv(
        out / "runs.csv",
        ["n", "index", "seed", "strategy", "cost_evals", "target_prob", "expectation"],
        ([r["instance"]["n"], r["instance"]["index"], r["instance"]["seed"], r["strategy"],
          r["cost_evals"], r["target_prob"], r["expectation"]] for r in records),
    )
    trace_rows = []
    stage_sums: dict[tuple[int, str, int, str], list[int]] = {}
    for r in records:
        params = r.get("params", {})
        if params.get("space") == "theta_tau":
            for d, (th, ta) in enumerate(zip(params["theta"], params["tau"]), start=1):
                trace_rows.append([r["instance"]["n"], r["instance"]["index"], d, th, ta])
        for pos, st in enumerate(r.get("stages", [])):
            stage_sums.setdefault((r["instance"]["n"], r["strategy"], pos, st["label"]), []).append(st["evals"])
    _write_csv(out / "params_trace.csv", ["n", "index", "layer", "theta", "tau"], trace_rows)

    stage_rows = []
    cumulative: dict[tuple[int, str], float] = {}
    for (n, strategy, pos, label), evals in sorted(stage_sums.items(), key=lambda kv: (kv[0][0], _strategy_rank(kv[0][1]), kv[0][2])):
        mean = float(np.mean(evals))
        cumulative[(n, strategy)] = cumulative.get((n, strategy), 0.0) + mean
        stage_rows.append([n, strategy, pos, label, len(evals), mean, cumulative[(n, strategy)]])
    _write_csv(out / "stage_costs.csv", ["n", "strategy", "stage", "label", "count", "evals_mean", "cumulative_mean"], stage_rows)
    return rows


def scan_surface(
    formula: CnfFormula,
    p: int,
    mode: str = "probability",
    resolution: int = 33,
    theta_range: tuple[float, float] = (0.0, math.pi / 2),
    rho_range: tuple[float, float] = (0.125, 4.0),
    c0: float = 3.0,
):
    """Grid over the linear ramp ``(theta, rho)``.

    ``probability`` uses exact spectral-spread normalization and reports the
    target probability; ``expectation`` uses the estimated normalization and
    reports the normalized expectation.
    """
    table = build_spectrum(formula)
    if mode == "probability":
        norm = normalize(table, "exact")

        def value(theta, rho):
            return target_probability(run_circuit(table, norm, _linear_raw(theta, rho, p)), table)
    elif mode == "expectation":
        norm = normalize(table, "estimated", c0)

        def value(theta, rho):
            state = run_circuit(table, norm, _linear_raw(theta, rho, p))
            return expectation(state, table, norm.phase_scale)
    else:
        raise ValueError(f"unknown scan mode {mode!r}")
    return grid_scan(value, theta_range, rho_range, resolution)


def cmd_scan(formula: CnfFormula, out_path: str | os.PathLike, p: int | None = None, mode: str = "probability",
             resolution: int = 33, theta_range=(0.0, math.pi / 2), rho_range=(0.125, 4.0), c0: float = 3.0):
    scan = scan_surface(formula, p or formula.n, mode, resolution, theta_range, rho_range, c0)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out,
        ["theta", "rho", "value"],
        ([float(t), float(r), float(scan.values[i, j])]
         for i, t in enumerate(scan.thetas) for j, r in enumerate(scan.rhos)),
    )
    return scan


def spectrum_summary(formula: CnfFormula, c0: float = 3.0) -> dict:
    table = build_spectrum(formula)
    info = {
        "n": table.n, "m": table.m, "k": table.k,
        "c_max": table.c_max, "c_min": table.c_min,
        "G_0": float(table.c_max - table.c_min),
        "maximizers": int(table.maximizers.size),
        "satisfiable": table.c_max == table.m,
    }
    if table.m >= 1:
        info["G_E"] = normalize(table, "estimated", c0).G_E
    return info

