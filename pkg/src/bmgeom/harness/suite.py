"""Run every harness component once and write its artifacts to a directory."""

from __future__ import annotations

from pathlib import Path

from ..io import dumps_json
from .exhaustive import interval_oracle
from .generate import ScenarioConfig
from .invariance import run_invariance_suite
from .lemmas import run_lemma_suite
from .sweeps import run_delta_sweep, run_rotation_sweep

ARTIFACTS = (
    "lemmas.json",
    "invariance.json",
    "oracle.json",
    "delta_sweep.csv",
    "delta_sweep.json",
    "rotation_sweep.csv",
)


def run_full_suite(
    config: ScenarioConfig, outdir, *, pairs: int = 10, levels=(0.0, 0.05), oracle_n: int = 8,
    threads: int | None = None,
) -> dict:
    """Write lemma, invariance, oracle and sweep artifacts; return ``name -> bytes``.

    Artifacts contain no timings or paths, so two runs with the same
    configuration are byte-identical.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    texts = {
        "lemmas.json": run_lemma_suite(config).to_json(),
        "invariance.json": run_invariance_suite(config, pairs).to_json(),
        "oracle.json": dumps_json(interval_oracle(oracle_n).to_dict()),
    }
    sweep = run_delta_sweep(config, levels, threads)
    texts["delta_sweep.csv"] = sweep.to_csv()
    texts["delta_sweep.json"] = sweep.to_json()
    texts["rotation_sweep.csv"] = run_rotation_sweep(config, threads=threads).to_csv()
    blobs = {}
    for name in ARTIFACTS:
        data = texts[name].encode()
        (out / name).write_bytes(data)
        blobs[name] = data
    return blobs
