"""Python front end for the fpgadiag simulator and diagnosis toolkit."""

import json
from pathlib import Path

from ._core import (
    DiagError,
    RunOutput,
    Scenario,
    __version__,
    analyze as _analyze,
    classify,
    error_probability,
    load_scenario,
    parse_scenario,
    pav_nonincreasing,
    pearson,
    render,
    run as _run,
)

__all__ = [
    "DiagError",
    "RunOutput",
    "Scenario",
    "__version__",
    "analyze",
    "classify",
    "error_probability",
    "load_scenario",
    "parse_scenario",
    "pav_nonincreasing",
    "pearson",
    "render",
    "report",
    "run",
    "write_outputs",
]


def _scenario(s):
    if isinstance(s, Scenario):
        return s
    return load_scenario(str(s))


def run(scenario, threads=1):
    return _run(_scenario(scenario), threads)


def analyze(scenario, records_csv):
    return _analyze(_scenario(scenario), records_csv)


def report(result):
    """Decoded report document of a run or analyze result."""
    return json.loads(result.report_json)


def write_outputs(result, out_dir, svg=True):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.csv").write_text(result.records_csv)
    (out / "report.json").write_text(result.report_json)
    if svg:
        for name, doc in render(result.report_json):
            (out / name).write_text(doc)
    return out
