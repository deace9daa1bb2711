"""Command-line front end: ``gateprune gsi|scan|bench|report``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import jsonschema

from .data import DataError, ingest_csv, resolve_dataset
from .featuremap import FeatureMapSpec, build_zz_map
from .gsi import HardwareEstimatorConfig, metrics_to_csv, metrics_to_json
from .pipeline import (
    BENCH_CONFIGS,
    CANDIDATE_COLUMNS,
    RANKING_COLUMNS,
    ScanConfig,
    ScanError,
    bench_scalability,
    binding_vector,
    candidate_rows,
    compute_gsi,
    ranking_rows,
    rows_to_csv,
    run_scan,
    split_dataset,
)
from .qml import accuracy_from_counts
from .simcore import NoiseSpec, derive_seed

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTEGRITY = 0, 1, 2, 3
BENCH_COLUMNS = ("config", "entanglement", "reps", "qubits", "gates", "engine", "seconds")


class ConfigError(ValueError):
    pass


class IntegrityError(RuntimeError):
    pass


@dataclass
class RunConfig:
    dataset: str = "fixture:separable"
    label_column: str = "last"
    entanglement: str = "linear"
    reps: int = 1
    engine: str = "exact"
    shots: int = 10_000
    noise: dict | None = None
    seed: int = 0
    C: float = 5000.0
    num_steps: int = 500
    step: float = 0.02
    tolerance: float = 0.15
    time_rule: str = "relative_drop"
    delta: float = 0.1
    ent_qubit: int | None = None
    bind: str | int = "mean"
    kernel_shots: int | None = None
    timing: str = "wall"
    workers: int = field(default_factory=lambda: min(4, os.cpu_count() or 1))
    out: str = "out"
    bench: dict = field(default_factory=lambda: {"configs": ["S1", "S2", "S3"], "qubits": [4, 6, 8, 10], "max_qubits": 16})
    base_dir: Path = field(default=Path("."), repr=False)

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        data = {}
        base = Path(".")
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file not found: {p}")
            try:
                data = json.loads(p.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise ConfigError(f"{p}: invalid JSON ({e})") from None
            if not isinstance(data, dict):
                raise ConfigError(f"{p}: top level must be an object")
            base = p.parent
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(**data, base_dir=base)
        cfg.validate()
        return cfg

    def validate(self):
        try:
            self.scan_config()
            FeatureMapSpec(1, self.entanglement, self.reps)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None
        if self.num_steps < 0:
            raise ConfigError("num_steps must be >= 0")
        if not self.C > 0:
            raise ConfigError("C must be positive")
        for name in self.bench.get("configs", []):
            if name not in BENCH_CONFIGS:
                raise ConfigError(f"unknown bench configuration {name!r}")

    def noise_spec(self) -> NoiseSpec | None:
        if not self.noise:
            return None
        return NoiseSpec(**self.noise)

    def scan_config(self) -> ScanConfig:
        return ScanConfig(
            entanglement=self.entanglement,
            reps=int(self.reps),
            engine=self.engine,
            shots=int(self.shots),
            noise=self.noise_spec(),
            seed=int(self.seed),
            step=float(self.step),
            C=float(self.C),
            num_steps=int(self.num_steps),
            tolerance=float(self.tolerance),
            time_rule=self.time_rule,
            delta=float(self.delta),
            ent_qubit=self.ent_qubit,
            bind=self.bind,
            kernel_shots=self.kernel_shots,
            timing=self.timing,
            workers=max(1, int(self.workers)),
        )

    def dataset_path(self) -> Path:
        return resolve_dataset(self.dataset, self.base_dir)

    def out_dir(self) -> Path:
        return Path(self.out)


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_all(out: Path, files: dict[str, str]) -> None:
    # everything is rendered before the first write
    for name, text in files.items():
        atomic_write(out / name, text)


def _load_data(cfg: RunConfig):
    return ingest_csv(cfg.dataset_path(), cfg.label_column)


def cmd_gsi(cfg: RunConfig) -> list[Path]:
    X, y = _load_data(cfg)
    sc = cfg.scan_config()
    split = split_dataset(X, y, sc.seed)
    fmap = FeatureMapSpec(X.shape[1], sc.entanglement, sc.reps)
    bound = build_zz_map(fmap, binding_vector(split.X_train, sc.bind))
    metrics = compute_gsi(bound, sc)
    files = {"gsi.csv": metrics_to_csv(metrics), "gsi.json": metrics_to_json(metrics) + "\n"}
    _write_all(cfg.out_dir(), files)
    return [cfg.out_dir() / f for f in files]


def cmd_scan(cfg: RunConfig) -> list[Path]:
    X, y = _load_data(cfg)
    report = run_scan(X, y, cfg.scan_config())
    doc = report.to_dict()
    doc["config"]["dataset"] = cfg.dataset
    doc["config"]["label_column"] = cfg.label_column
    _check_report(doc)
    files = {
        "gsi.csv": metrics_to_csv(report.gsi_table),
        "candidates.csv": rows_to_csv(candidate_rows(report), CANDIDATE_COLUMNS),
        "rankings.csv": rows_to_csv(ranking_rows(report), RANKING_COLUMNS),
        "report.json": json.dumps(doc, indent=2, sort_keys=True) + "\n",
    }
    _write_all(cfg.out_dir(), files)
    return [cfg.out_dir() / f for f in files]


def cmd_bench(cfg: RunConfig) -> list[Path]:
    b = cfg.bench
    hw = HardwareEstimatorConfig(
        shots=int(cfg.shots), delta=float(cfg.delta), noise=cfg.noise_spec(), seed=derive_seed(cfg.seed, 2)
    )
    try:
        rows = bench_scalability(
            b.get("configs", ["S1", "S2", "S3"]),
            b.get("qubits", [4, 6, 8, 10]),
            cfg.engine,
            int(b.get("max_qubits", 16)),
            hw,
            int(cfg.seed),
        )
    except MemoryError as e:
        raise ConfigError(str(e)) from None
    atomic_write(cfg.out_dir() / "bench.csv", rows_to_csv(rows, BENCH_COLUMNS))
    return [cfg.out_dir() / "bench.csv"]


def report_schema() -> dict:
    return json.loads((resources.files("gateprune") / "report.schema.json").read_text(encoding="utf-8"))


def _check_report(doc: dict) -> None:
    """Integrity checks beyond the schema."""
    cands = doc["candidates"]
    if not cands:
        raise IntegrityError("report has no candidates")
    k = len(cands)
    for key in ("R_A", "R_T", "R_B"):
        if sorted(c["ranks"][key] for c in cands) != list(range(1, k + 1)):
            raise IntegrityError(f"{key} is not a permutation of 1..{k}")
    for c in cands:
        if c["kept_gates"] != sum(c["mask"]):
            raise IntegrityError(f"candidate {c['threshold']}: kept_gates != popcount(mask)")
        v = c["validation"]
        if v["accuracy"] != accuracy_from_counts(v["tp"], v["tn"], v["fp"], v["fn"]):
            raise IntegrityError(f"candidate {c['threshold']}: accuracy does not match confusion counts")
    thresholds = {c["threshold"] for c in cands}
    for key, t in doc["selections"].items():
        if t not in thresholds:
            raise IntegrityError(f"selection {key} is not a candidate")


def load_report(path: Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"report not found: {path}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: malformed JSON ({e})") from None
    try:
        jsonschema.validate(doc, report_schema())
    except jsonschema.ValidationError as e:
        loc = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise DataError(f"{path}: schema error at {loc}: {e.message}") from None
    return doc


def _fmt_time(t: float) -> str:
    return f"{t:.4g}"


def render_report(doc: dict) -> str:
    _check_report(doc)
    base = doc["baseline"]
    rows = [("GSI", "#Gates", "Acc.", "Time", "R_ATB")]
    rows.append(
        (f"{base['threshold']:.3f}", str(base["kept_gates"]), f"{base['validation']['accuracy']:.3f}",
         _fmt_time(base["validation"]["time"]), "--")
    )
    for c in doc["candidates"]:
        r = c["ranks"]
        rows.append(
            (f"{c['threshold']:.3f}", str(c["kept_gates"]), f"{c['validation']['accuracy']:.3f}",
             _fmt_time(c["validation"]["time"]), f"{r['R_A']}-{r['R_T']}-{r['R_B']}")
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    lines.append("")
    lines.append("Test set:")
    for key in ("baseline", "best_A", "best_T", "best_B"):
        tr = doc["test_results"].get(key)
        if tr is None:
            continue
        lines.append(
            f"  {key:<8} GSI {tr['threshold']:.3f}  gates {tr['kept_gates']:>3}  "
            f"acc {tr['accuracy']:.3f}  time {_fmt_time(tr['time'])}"
        )
    return "\n".join(lines)


def cmd_report(path: Path) -> str:
    return render_report(load_report(path))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--dataset", help="CSV path or fixture:<separable|xor|corral>")
    common.add_argument("--seed", type=int)
    common.add_argument("--engine", choices=("exact", "hardware"))
    common.add_argument("--shots", type=int)
    common.add_argument("--step", type=float)
    common.add_argument("--serial", action="store_true", help="single-threaded execution")
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="gateprune", description="GSI-based feature-map pruning")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gsi", parents=[common], help="score every gate, write gsi.csv/gsi.json")
    sub.add_parser("scan", parents=[common], help="run the threshold scan, write report.json + CSVs")
    sub.add_parser("bench", parents=[common], help="time GSI over S1/S2/S3 maps, write bench.csv")
    rep = sub.add_parser("report", parents=[common], help="print a summary of report.json")
    rep.add_argument("path", nargs="?", help="report.json (default: <out>/report.json)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    overrides = {
        "dataset": args.dataset,
        "seed": args.seed,
        "engine": args.engine,
        "shots": args.shots,
        "step": args.step,
        "out": args.out,
    }
    if args.serial:
        overrides["workers"] = 1
    try:
        cfg = RunConfig.load(args.config, overrides)
        if args.command == "report":
            path = Path(args.path) if args.path else cfg.out_dir() / "report.json"
            print(cmd_report(path))
            return EXIT_OK
        written = {"gsi": cmd_gsi, "scan": cmd_scan, "bench": cmd_bench}[args.command](cfg)
        for p in written:
            print(p)
        return EXIT_OK
    except ConfigError as e:
        print(f"gateprune: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ScanError) as e:
        print(f"gateprune: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (IntegrityError, AssertionError) as e:
        print(f"gateprune: integrity error: {e}", file=sys.stderr)
        return EXIT_INTEGRITY


if __name__ == "__main__":
    sys.exit(main())
