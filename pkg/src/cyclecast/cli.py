"""Command-line interface: reproducible ingest/fit/predict/evaluate/synth runs.

Every command writes its outputs plus a run manifest (the resolved
configuration, sha256 digests of the inputs, and the output names) so a run
can be reproduced and diffed byte-for-byte. File paths inside manifests are
recorded by name only; reruns into different directories stay identical.

Exit codes: 0 on success, 2 for usage or configuration problems, 1 for data
problems (missing or malformed files).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .evaluation import (
    config_id,
    evaluate_records,
    sweep,
    write_plot_data,
    write_reports,
)
from .forecaster import ForecastConfig, read_records, run, write_records
from .llr import KernelFamily, KernelSpec
from .poisson import poisson_mle
from .store import snapshot
from .synthetic import RNG_NAME, SyntheticSpec, generate, write_truth
from .trace import (
    ColumnMapping,
    MetricKind,
    aggregate_span,
    parse_trace,
    read_observations,
    span_tps,
    write_observations,
    write_trace,
)

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2

_DEFAULTS: dict[str, object] = {
    "tp_min": 30,
    "pp_tps": 336,
    "up_tps": 50,
    "cycles": 4,
    "kernel": "epanechnikov",
    "bandwidth_k": 20,
    "bandwidth_h": None,
    "metric": "arrivals",
    "sub_bin_sec": 60,
    "scale": 100.0,
    "seed": 0,
}


class DataError(Exception):
    """Unreadable or malformed data files (exit code 1)."""


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


class _Resolver:
    """Merge layer: command-line flag > config file entry > built-in default."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.file_values = _read_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, key: str, cast):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        if key in self.file_values:
            return cast(self.file_values[key])
        return _DEFAULTS.get(key)

    def kernel_spec(self) -> KernelSpec:
        family = KernelFamily(str(self.get("kernel", str)).lower())
        flag_h = getattr(self.args, "bandwidth_h", None)
        flag_k = getattr(self.args, "bandwidth_k", None)
        if flag_h is not None and flag_k is not None:
            raise ValueError("--bandwidth-h and --bandwidth-k are mutually exclusive")
        if flag_h is not None:
            return KernelSpec(family=family, h=flag_h)
        if flag_k is not None:
            return KernelSpec(family=family, k=flag_k)
        if "bandwidth_h" in self.file_values:
            return KernelSpec(family=family, h=float(self.file_values["bandwidth_h"]))
        if "bandwidth_k" in self.file_values:
            return KernelSpec(family=family, k=int(self.file_values["bandwidth_k"]))
        return KernelSpec(family=family, k=int(_DEFAULTS["bandwidth_k"]))  # type: ignore[arg-type]

    def forecast_config(self, metric: MetricKind) -> ForecastConfig:
        return ForecastConfig(
            tp_minutes=int(self.get("tp_min", int)),
            pp_tps=int(self.get("pp_tps", int)),
            up_tps=int(self.get("up_tps", int)),
            cycles=int(self.get("cycles", int)),
            kernel=self.kernel_spec(),
            metric=metric,
            sub_bin_seconds=int(self.get("sub_bin_sec", int)),
            scale=float(self.get("scale", float)),
        )


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    out_dir: Path,
    command: str,
    config: dict[str, object],
    inputs: Sequence[Path],
    outputs: Sequence[str],
    seed: int | None,
) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": [{"name": p.name, "sha256": _sha256(p)} for p in inputs],
        "outputs": sorted(outputs),
        "seed": seed,
        "version": __version__,
    }
    path = out_dir / f"{command}.manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _metric_list(value: str) -> list[MetricKind]:
    if value == "all":
        return [MetricKind.ARRIVALS, MetricKind.CPU, MetricKind.MEMORY]
    return [MetricKind(value)]


def _column(value: str | None) -> int | str | None:
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        return value


def _data_read(fn, *fnargs):
    try:
        return fn(*fnargs)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def cmd_synth(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    seed = int(res.get("seed", int))
    spec = SyntheticSpec(
        pp_tps=int(res.get("pp_tps", int)),
        tps=args.tps,
        base_rate=args.base_rate,
        daily_amplitude=args.daily_amp,
        weekly_amplitude=args.weekly_amp,
        noise_sigma=args.noise_sigma,
        seed=seed,
        tp_minutes=int(res.get("tp_min", int)),
        sub_bin_seconds=int(res.get("sub_bin_sec", int)),
    )
    out = _out_dir(args)
    events, truths = generate(spec)
    write_trace(out / "trace.csv", events)
    write_truth(out / "truth.csv", truths)
    _write_manifest(
        out,
        "synth",
        {
            "pp_tps": spec.pp_tps,
            "tps": spec.tps,
            "base_rate": spec.base_rate,
            "daily_amplitude": spec.daily_amplitude,
            "weekly_amplitude": spec.weekly_amplitude,
            "noise_sigma": spec.noise_sigma,
            "tp_minutes": spec.tp_minutes,
            "sub_bin_seconds": spec.sub_bin_seconds,
            "rng": RNG_NAME,
        },
        inputs=[],
        outputs=["trace.csv", "truth.csv"],
        seed=seed,
    )
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    metrics = _metric_list(str(res.get("metric", str)))
    tp_min = int(res.get("tp_min", int))
    pp_tps = int(res.get("pp_tps", int))
    sub_bin_sec = int(res.get("sub_bin_sec", int))
    scale = float(res.get("scale", float))
    mapping = ColumnMapping(
        timestamp=_column(args.col_ts) if args.col_ts is not None else 0,
        job=_column(args.col_job),
        task=_column(args.col_task),
        cpu=_column(args.col_cpu) if args.col_cpu is not None else 3,
        mem=_column(args.col_mem) if args.col_mem is not None else 4,
        delimiter=args.delimiter,
        has_header=args.header,
    )
    out = _out_dir(args)

    parsed = parse_trace(args.trace, mapping)
    if not parsed.events:
        raise DataError(f"{args.trace}: no usable events ({parsed.rejected} rows rejected)")
    start_us = args.start_sec * 1_000_000
    num_tps = span_tps(parsed.events, start_us, tp_min)
    if num_tps == 0:
        raise DataError(f"{args.trace}: no events at or after start offset {args.start_sec}s")

    outputs: list[str] = []
    for metric in metrics:
        observations = aggregate_span(
            parsed.events, start_us, num_tps, tp_min, pp_tps, metric, sub_bin_sec, scale
        )
        if args.split_tp is not None:
            if not 1 <= args.split_tp < len(observations):
                raise ValueError(
                    f"--split-tp {args.split_tp} outside [1, {len(observations) - 1}] "
                    f"for a {len(observations)}-period span"
                )
            parts = {
                f"observations_{metric.value}_train.csv": observations[: args.split_tp],
                f"observations_{metric.value}_test.csv": observations[args.split_tp :],
            }
        else:
            parts = {f"observations_{metric.value}.csv": observations}
        for name, obs in parts.items():
            write_observations(out / name, obs, scale)
            outputs.append(name)

    print(f"parsed {len(parsed.events)} events ({parsed.rejected} rejected), {num_tps} target periods")
    _write_manifest(
        out,
        "ingest",
        {
            "tp_minutes": tp_min,
            "pp_tps": pp_tps,
            "sub_bin_seconds": sub_bin_sec,
            "scale": scale,
            "metrics": [m.value for m in metrics],
            "start_sec": args.start_sec,
            "split_tp": args.split_tp,
            "delimiter": mapping.delimiter,
            "has_header": mapping.has_header,
            "columns": {
                "timestamp": mapping.timestamp,
                "job": mapping.job,
                "task": mapping.task,
                "cpu": mapping.cpu,
                "mem": mapping.mem,
            },
            "rejected_rows": parsed.rejected,
        },
        inputs=[Path(args.trace)],
        outputs=outputs,
        seed=None,
    )
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    by_metric: dict[MetricKind, list] = {}
    for path in args.observations:
        for obs in _data_read(read_observations, path):
            by_metric.setdefault(obs.metric, []).append(obs)
    outputs = []
    for metric, observations in by_metric.items():
        name = f"lambdas_{metric.value}.csv"
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("seq,tp_index,cycle_index,metric,lambda,empty\n")
            for seq, obs in enumerate(observations, start=1):
                rate = poisson_mle(obs.samples)
                empty = int(sum(obs.samples) == 0)
                fh.write(
                    f"{seq},{obs.tp_index},{obs.cycle_index},{metric.value},{rate!r},{empty}\n"
                )
        outputs.append(name)
    _write_manifest(
        out,
        "fit",
        {"metrics": sorted(m.value for m in by_metric)},
        inputs=[Path(p) for p in args.observations],
        outputs=outputs,
        seed=None,
    )
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    metric = MetricKind(str(res.get("metric", str)))
    cfg = res.forecast_config(metric)

    train = _data_read(read_observations, args.train)
    test = _data_read(read_observations, args.test)
    for obs in (train + test)[:1]:
        if obs.metric is not cfg.metric:
            raise DataError(
                f"observations carry metric {obs.metric.value!r} but the run is configured "
                f"for {cfg.metric.value!r}"
            )
    out = _out_dir(args)
    ds = cfg.new_store()
    records = run(train + test, cfg, ds)
    write_records(out / "records.csv", records)
    outputs = ["records.csv"]
    if args.save_store:
        (out / "store.snapshot").write_text(snapshot(ds), encoding="utf-8")
        outputs.append("store.snapshot")
    _write_manifest(
        out,
        "predict",
        _config_echo(cfg) | {"train_tps": len(train), "test_tps": len(test)},
        inputs=[Path(args.train), Path(args.test)],
        outputs=outputs,
        seed=None,
    )
    return EXIT_OK


def _config_echo(cfg: ForecastConfig) -> dict[str, object]:
    return {
        "tp_minutes": cfg.tp_minutes,
        "pp_tps": cfg.pp_tps,
        "up_tps": cfg.up_tps,
        "cycles": cfg.cycles,
        "kernel": cfg.kernel.family.value,
        "bandwidth_k": cfg.kernel.k,
        "bandwidth_h": cfg.kernel.h,
        "metric": cfg.metric.value,
        "sub_bin_seconds": cfg.sub_bin_seconds,
        "scale": cfg.scale,
    }


def _int_grid(text: str, what: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"{what} must be a comma-separated integer list, got {text!r}") from None
    if not values:
        raise ValueError(f"{what} is empty")
    return values


def cmd_evaluate(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    out = _out_dir(args)
    if args.records is not None:
        if args.train or args.test:
            raise ValueError("--records and --train/--test are mutually exclusive")
        records = _data_read(read_records, args.records)
        report = evaluate_records(
            records,
            test_from_t=args.test_from_t,
            cid="records",
            with_baselines=args.baselines,
            baseline_window=args.baseline_window,
        )
        write_reports(out / "report.csv", [report])
        with open(out / "errors.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("seq,absolute_percentage_error\n")
            for seq, err in enumerate(report.errors, start=1):
                fh.write(f"{seq},{err!r}\n")
        _write_manifest(
            out,
            "evaluate",
            {
                "mode": "records",
                "test_from_t": args.test_from_t,
                "baselines": args.baselines,
                "baseline_window": args.baseline_window,
            },
            inputs=[Path(args.records)],
            outputs=["report.csv", "errors.csv"],
            seed=None,
        )
        return EXIT_OK

    if not (args.train and args.test):
        raise ValueError("evaluate needs either --records or both --train and --test")
    metric = MetricKind(str(res.get("metric", str)))
    kernel = res.kernel_spec()
    up_grid = (
        _int_grid(args.up_tps_grid, "--up-tps-grid")
        if args.up_tps_grid
        else [int(res.get("up_tps", int))]
    )
    k_grid = (
        _int_grid(args.bandwidth_grid, "--bandwidth-grid")
        if args.bandwidth_grid
        else [kernel.k or 20]
    )
    configs = []
    for up in up_grid:
        for k in k_grid:
            configs.append(
                ForecastConfig(
                    tp_minutes=int(res.get("tp_min", int)),
                    pp_tps=int(res.get("pp_tps", int)),
                    up_tps=up,
                    cycles=int(res.get("cycles", int)),
                    kernel=KernelSpec(family=kernel.family, k=k),
                    metric=metric,
                    sub_bin_seconds=int(res.get("sub_bin_sec", int)),
                    scale=float(res.get("scale", float)),
                )
            )
    train = _data_read(read_observations, args.train)
    test = _data_read(read_observations, args.test)
    reports = sweep(configs, train, test, with_baselines=args.baselines)
    write_reports(out / "reports.csv", reports)
    write_plot_data(out / "sweep_mape.csv", reports)
    _write_manifest(
        out,
        "evaluate",
        {
            "mode": "sweep",
            "up_tps_grid": up_grid,
            "bandwidth_grid": k_grid,
            "kernel": kernel.family.value,
            "metric": metric.value,
            "pp_tps": configs[0].pp_tps,
            "cycles": configs[0].cycles,
            "baselines": args.baselines,
            "configs": [config_id(c) for c in configs],
        },
        inputs=[Path(args.train), Path(args.test)],
        outputs=["reports.csv", "sweep_mape.csv"],
        seed=None,
    )
    return EXIT_OK


def _add_shared_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tp-min", type=int, help="target-period length in minutes (default 30)")
    p.add_argument("--pp-tps", type=int, help="target periods per pattern period (default 336)")
    p.add_argument("--up-tps", type=int, help="utilization-window length in target periods (default 50)")
    p.add_argument("--cycles", type=int, help="pattern-period cycles kept in the store (default 4)")
    p.add_argument(
        "--kernel",
        choices=[f.value for f in KernelFamily],
        help="kernel family (default epanechnikov)",
    )
    p.add_argument("--bandwidth-k", type=int, help="k-nearest bandwidth (default 20)")
    p.add_argument("--bandwidth-h", type=float, help="fixed-radius bandwidth (overrides --bandwidth-k)")
    p.add_argument("--metric", help="arrivals, cpu, memory (ingest also accepts all)")
    p.add_argument("--sub-bin-sec", type=int, help="sample sub-bin width in seconds (default 60)")
    p.add_argument("--scale", type=float, help="count scale for cpu/memory requests (default 100)")
    p.add_argument("--seed", type=int, help="random seed (synth)")
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--out-dir", required=True, help="directory for outputs and the run manifest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclecast",
        description="Cyclic-window workload forecasting: rate fitting, prediction, evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"cyclecast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic trace with known rates")
    p.add_argument("--tps", type=int, default=1008, help="total target periods to generate")
    p.add_argument("--base-rate", type=float, default=20.0, help="base events per sub-bin")
    p.add_argument("--daily-amp", type=float, default=0.4, help="daily modulation amplitude [0,1)")
    p.add_argument("--weekly-amp", type=float, default=0.2, help="weekly modulation amplitude [0,1)")
    p.add_argument("--noise-sigma", type=float, default=0.0, help="lognormal noise sigma per period")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse a trace and aggregate per-period observations")
    p.add_argument("--trace", required=True, help="delimited trace file")
    p.add_argument("--col-ts", help="timestamp column (index or header name)")
    p.add_argument("--col-job", help="job id column (index or header name)")
    p.add_argument("--col-task", help="task id column (index or header name)")
    p.add_argument("--col-cpu", help="cpu request column (index or header name)")
    p.add_argument("--col-mem", help="memory request column (index or header name)")
    p.add_argument("--delimiter", default=",", help="field delimiter (default comma)")
    p.add_argument("--header", action="store_true", help="first row is a header")
    p.add_argument("--start-sec", type=int, default=0, help="aggregation start offset in seconds")
    p.add_argument("--split-tp", type=int, help="split observations into train/test after this period")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="fit per-period rates from observation files")
    p.add_argument("--observations", nargs="+", required=True, help="observation files")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="run the cyclic-window forecaster over train+test streams")
    p.add_argument("--train", required=True, help="training observations file")
    p.add_argument("--test", required=True, help="test observations file")
    p.add_argument("--save-store", action="store_true", help="also write the final store snapshot")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score prediction records, or sweep configurations")
    p.add_argument("--records", help="prediction records file (single-run mode)")
    p.add_argument("--test-from-t", type=int, default=1, help="first step counted as test")
    p.add_argument("--train", help="training observations file (sweep mode)")
    p.add_argument("--test", help="test observations file (sweep mode)")
    p.add_argument("--up-tps-grid", help="comma-separated utilization-window lengths to sweep")
    p.add_argument("--bandwidth-grid", help="comma-separated k-nearest bandwidths to sweep")
    p.add_argument("--baselines", action="store_true", help="include baseline comparator deltas")
    p.add_argument("--baseline-window", type=int, default=50, help="baseline window (records mode)")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"cyclecast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"cyclecast: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"cyclecast: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
