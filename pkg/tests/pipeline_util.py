"""Reference CLI pipeline shared by the acceptance suite and golden regen.

Runs the fixed mini pipeline (seeded synthetic trace through ingest, fit,
predict, and both evaluate modes) into a directory. The locked file list is
what the golden snapshot pins; manifests are excluded from the lock because
they embed the tool version.
"""

from __future__ import annotations

from pathlib import Path

from cyclecast.cli import EXIT_OK, main

GOLDEN_FILES = [
    "truth.csv",
    "observations_arrivals_train.csv",
    "observations_arrivals_test.csv",
    "lambdas_arrivals.csv",
    "records.csv",
    "report.csv",
    "errors.csv",
    "sweep/reports.csv",
    "sweep/sweep_mape.csv",
]


def run_reference_pipeline(out_dir: Path) -> None:
    out = str(out_dir)
    steps = [
        [
            "synth", "--out-dir", out, "--tps", "144", "--pp-tps", "48",
            "--base-rate", "8", "--daily-amp", "0.3", "--weekly-amp", "0.1",
            "--noise-sigma", "0.05", "--seed", "3",
        ],
        [
            "ingest", "--trace", f"{out}/trace.csv", "--header", "--out-dir", out,
            "--pp-tps", "48", "--split-tp", "96",
        ],
        ["fit", "--observations", f"{out}/observations_arrivals_test.csv", "--out-dir", out],
        [
            "predict", "--train", f"{out}/observations_arrivals_train.csv",
            "--test", f"{out}/observations_arrivals_test.csv", "--out-dir", out,
            "--pp-tps", "48", "--up-tps", "12", "--cycles", "2", "--bandwidth-k", "8",
        ],
        [
            "evaluate", "--records", f"{out}/records.csv", "--test-from-t", "97",
            "--baselines", "--out-dir", out,
        ],
        [
            "evaluate", "--train", f"{out}/observations_arrivals_train.csv",
            "--test", f"{out}/observations_arrivals_test.csv",
            "--pp-tps", "48", "--cycles", "2", "--up-tps-grid", "6,12",
            "--bandwidth-grid", "4,8", "--baselines", "--out-dir", f"{out}/sweep",
        ],
    ]
    for argv in steps:
        code = main(argv)
        if code != EXIT_OK:
            raise RuntimeError(f"pipeline step failed ({code}): {argv}")
