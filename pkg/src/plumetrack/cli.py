"""Command-line front end.

    plume run <scenario> --out <dir> [--seed N]
    plume sweep <scenario> --set key=v1,v2 ... --out <dir> [--jobs N]
    plume plot --kind <kind> --log <csv> --out <svg> [--c0 X] [--scenario S]
    plume validate

Exit codes are a stable contract: 0 success, 2 input error, 3 truncated
run, 4 numerical abort.  All outputs are written atomically (temp file
plus rename), diagnostics go to stderr (PLUME_LOG=debug|info raises the
verbosity), data never does.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import plotting, simulator, validate as validation
from .scenario_io import (ScenarioError, copy_doc, load_raw, load_scenario,
                          parse_sweep_value, scenario_from_dict, set_path)
from .sensing import DegenerateStencilError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TRUNCATED = 3
EXIT_NUMERIC = 4

log = logging.getLogger("plume")


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f".{path.name}.{os.getpid()}.tmp"
    tmp.write_text(text)
    os.replace(tmp, path)


def _json_value(v):
    if v is None or isinstance(v, (bool, int, str)):
        return v
    return float(v)


def _metrics_json(m: simulator.RunMetrics, seed: int) -> str:
    d = {k: _json_value(v) for k, v in m.as_dict().items()}
    d["seed"] = seed
    return json.dumps(d, indent=2) + "\n"


def _execute_run(doc: dict, out_dir: Path, origin: str) -> int:
    """Run one validated scenario document and write log/metrics."""
    scenario = scenario_from_dict(doc, origin=origin)
    log.info("running scenario %s (seed %d, %.0f s at dt=%g)",
             scenario.name, scenario.seed, scenario.duration,
             scenario.control_period)
    try:
        runlog = simulator.run(scenario)
    except DegenerateStencilError as exc:
        print(f"error: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("run complete: %d records%s", len(runlog),
             " (truncated)" if runlog.truncated else "")
    _atomic_write(out_dir / "log.csv", runlog.to_csv())
    if len(runlog) >= 2:
        m = simulator.metrics(runlog, scenario)
        _atomic_write(out_dir / "metrics.json",
                      _metrics_json(m, scenario.seed))
    else:
        stub = {"truncated": True, "seed": scenario.seed}
        _atomic_write(out_dir / "metrics.json",
                      json.dumps(stub, indent=2) + "\n")
    if runlog.truncated:
        log.warning("run left the field domain at t=%.3f; log truncated",
                    runlog.t[-1] if len(runlog) else 0.0)
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_run(args) -> int:
    doc = load_raw(args.scenario)
    if args.seed is not None:
        doc["seed"] = args.seed
    return _execute_run(doc, Path(args.out), origin=str(args.scenario))


def _sweep_worker(payload):
    """Executed in a worker process; returns (index, exit_code, metrics)."""
    index, doc, out_dir = payload
    code = _execute_run(doc, Path(out_dir), origin=f"run{index:03d}")
    metrics_path = Path(out_dir) / "metrics.json"
    m = json.loads(metrics_path.read_text()) if metrics_path.exists() else {}
    return index, code, m


def cmd_sweep(args) -> int:
    base = load_raw(args.scenario)
    axes = []
    for setting in args.set or []:
        if "=" not in setting:
            raise ScenarioError(f"--set expects key=v1,v2,..., got {setting!r}")
        key, _, values = setting.partition("=")
        vals = [parse_sweep_value(v) for v in values.split(",") if v != ""]
        if not vals:
            raise ScenarioError(f"--set {key}: no values given")
        axes.append((key, vals))
    if not axes:
        raise ScenarioError("sweep needs at least one --set key=v1,v2,...")

    combos = list(itertools.product(*[vals for _, vals in axes]))
    out_root = Path(args.out)
    jobs = []
    for index, combo in enumerate(combos):
        doc = copy_doc(base)
        for (key, _), value in zip(axes, combo):
            set_path(doc, key, value)
        # validate every combination up front so bad paths fail fast
        scenario_from_dict(doc, origin=f"run{index:03d}")
        jobs.append((index, doc, str(out_root / f"run{index:03d}")))

    results: dict[int, tuple[int, dict]] = {}
    if args.jobs <= 1:
        for payload in jobs:
            index, code, m = _sweep_worker(payload)
            results[index] = (code, m)
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for index, code, m in pool.map(_sweep_worker, jobs):
                results[index] = (code, m)

    metric_keys = ["rms_conc_error", "mean_patrol_speed", "std_patrol_speed",
                   "winding_sign", "winding_angle", "winding_backtrack",
                   "mean_level_set_error", "saturation_fraction",
                   "tracking_reached_at", "truncated", "seed"]
    header = ["run"] + [key for key, _ in axes] + metric_keys + ["exit_code"]
    lines = [",".join(header)]
    for index, combo in enumerate(combos):
        code, m = results[index]
        cells = [f"run{index:03d}"]
        cells += [str(v) for v in combo]
        for key in metric_keys:
            v = m.get(key)
            if v is None:
                cells.append("")
            elif isinstance(v, bool):
                cells.append("1" if v else "0")
            elif isinstance(v, float):
                cells.append("%.9g" % v)
            else:
                cells.append(str(v))
        cells.append(str(code))
        lines.append(",".join(cells))
    _atomic_write(out_root / "sweep_summary.csv", "\n".join(lines) + "\n")

    codes = [results[i][0] for i in range(len(combos))]
    if EXIT_NUMERIC in codes:
        return EXIT_NUMERIC
    if EXIT_TRUNCATED in codes:
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_plot(args) -> int:
    logdata = plotting.read_log(args.log)
    if args.kind == "concentration-timeseries":
        svg = plotting.timeseries_svg(logdata, args.c0)
    else:
        source_path = None
        if args.scenario is not None:
            scenario = load_scenario(args.scenario)
            source_path = np.stack(
                [simulator.field_centroid(scenario.field0, float(t))
                 for t in logdata["t"]])
        svg = plotting.trajectory_svg(logdata, source_path)
    _atomic_write(Path(args.out), svg)
    return EXIT_OK


def cmd_validate(_args) -> int:
    return EXIT_OK if validation.run_validation() else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plume",
        description="Level-curve tracking simulation: run scenarios, sweep "
                    "parameters, plot logs, and self-check the numerics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="Cartesian parameter sweep")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--set", action="append", metavar="KEY=V1,V2,...",
                         help="dotted scenario field and value list")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_plot = sub.add_parser("plot", help="render an SVG from a run log")
    p_plot.add_argument("--kind", required=True,
                        choices=["trajectory-xy", "concentration-timeseries"])
    p_plot.add_argument("--log", required=True)
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--c0", type=float, default=None,
                        help="reference concentration line")
    p_plot.add_argument("--scenario", default=None,
                        help="scenario file; adds the true source path "
                             "to trajectory plots")
    p_plot.set_defaults(fn=cmd_plot)

    p_val = sub.add_parser("validate", help="run the invariant self-checks")
    p_val.set_defaults(fn=cmd_validate)
    return parser


def _configure_logging():
    level = os.environ.get("PLUME_LOG", "").lower()
    if level in ("debug", "info"):
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.DEBUG if level == "debug" else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, plotting.PlotDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
