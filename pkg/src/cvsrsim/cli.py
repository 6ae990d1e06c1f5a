"""Command-line front end: run one configured scenario or a built-in
suite, write waveform CSVs and a summary table.

    cvsr-sim <config.yaml> [--out DIR] [--parallel N] [--summary-only]
    cvsr-sim --suite nominal [--out DIR] [--parallel N] [--summary-only]

Exit codes: 0 all scenarios passed, 1 any scenario failed, 2 invalid
configuration.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .analysis import TimeSeries
from .scenario import Scenario, ScenarioError, builtin_suite, parse_scenario
from .solver import SolverError, run as run_solver

CHANNEL_UNITS = {
    "t": "s", "v_source": "V", "i_ac": "A", "i_dc": "A",
    "flux_left": "Wb", "flux_right": "Wb", "flux_middle": "Wb",
    "b_left": "T", "b_right": "T", "b_middle": "T",
    "v_ac_winding": "V", "e_dc": "V", "p_dc_inst": "W",
}


def _column_name(channel: str) -> str:
    unit = CHANNEL_UNITS.get(channel)
    return f"{channel}_{unit}" if unit else channel


def emit_csv(series: TimeSeries, path, channels=None) -> None:
    """Write the series as decimal text at 17 significant digits.

    Header row carries unit-suffixed channel names; one row per sample;
    newline-terminated.  The format round-trips float64 exactly.
    """
    names = list(channels) if channels is not None else list(series.channels)
    missing = [n for n in names if n not in series.channels]
    if missing:
        raise analysis.AnalysisError(f"cannot emit unknown channels: {missing}")
    if len(series) == 0:
        raise analysis.AnalysisError("refusing to emit an empty series")
    arrays = [series.channels[n] for n in names]
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(_column_name(n) for n in names) + "\n")
            for k in range(len(series)):
                fh.write(",".join("%.17g" % a[k] for a in arrays) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Parse a waveform CSV back into (column names, samples array)."""
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: missing header")
        names = header.split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {data.shape[1]} columns, {len(names)} names")
    return names, data


@dataclass
class SummaryReport:
    """Per-scenario headline metrics, each produced by an analysis op."""

    name: str
    status: str = "ok"
    error: str = ""
    rms_i_ac_steady: float = float("nan")
    peak_b_left: float = float("nan")
    peak_b_right: float = float("nan")
    peak_b_middle: float = float("nan")
    rms_e_dc: float = float("nan")
    mean_p_dc: float = float("nan")
    mean_q_dc: float = float("nan")
    mean_s_dc: float = float("nan")
    dominant_e_dc_freq: float = float("nan")
    sat_fraction_left: float = float("nan")
    sat_fraction_right: float = float("nan")
    sat_fraction_middle: float = float("nan")
    first_sat_time_middle: float = float("nan")


_SUMMARY_FIELDS = [f for f in SummaryReport.__dataclass_fields__ if f != "error"]


def compute_summary(series: TimeSeries, scenario: Scenario) -> SummaryReport:
    """Steady metrics over the trailing cycle plus whole-run extremes."""
    window = int(round(scenario.period / series.dt))
    i_ac = series.channel("i_ac")
    e_dc = series.channel("e_dc")
    report = SummaryReport(name=scenario.name)
    report.rms_i_ac_steady = float(analysis.rms(i_ac[-window:], window)[0])
    report.rms_e_dc = float(analysis.rms(e_dc[-window:], window)[0])
    report.peak_b_left = float(np.max(np.abs(series.channel("b_left"))))
    report.peak_b_right = float(np.max(np.abs(series.channel("b_right"))))
    report.peak_b_middle = float(np.max(np.abs(series.channel("b_middle"))))

    i_dc = float(series.metadata.get("i_dc", scenario.dc_bias))
    triple = analysis.rolling_power(e_dc[-window:], np.full(window, i_dc), window)
    report.mean_p_dc = float(triple.p[0])
    report.mean_q_dc = float(triple.q[0])
    report.mean_s_dc = float(triple.s[0])

    tail = min(len(e_dc), 4 * window)
    freq = analysis.dominant_frequency(e_dc[-tail:], series.dt,
                                       f_max=25.0 * scenario.frequency)
    report.dominant_e_dc_freq = float("nan") if freq is None else freq

    b_sat = getattr(scenario.device.curve, "b_sat", None)
    if b_sat is not None:
        left = analysis.saturation_flags(series.channel("b_left"), b_sat, series.dt)
        right = analysis.saturation_flags(series.channel("b_right"), b_sat, series.dt)
        middle = analysis.saturation_flags(series.channel("b_middle"), b_sat, series.dt)
        report.sat_fraction_left = left.fraction
        report.sat_fraction_right = right.fraction
        report.sat_fraction_middle = middle.fraction
        if middle.first_time is not None:
            report.first_sat_time_middle = middle.first_time
    return report


def write_summary(reports: list[SummaryReport], out_dir: Path) -> None:
    csv_path = out_dir / "summary.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write(",".join(_SUMMARY_FIELDS) + ",error\n")
        for rep in reports:
            cells = []
            for name in _SUMMARY_FIELDS:
                value = getattr(rep, name)
                cells.append(value if isinstance(value, str) else "%.17g" % value)
            cells.append('"%s"' % rep.error.replace('"', "'"))
            fh.write(",".join(cells) + "\n")

    txt_path = out_dir / "summary.txt"
    with open(txt_path, "w") as fh:
        for rep in reports:
            fh.write(f"scenario {rep.name}: {rep.status}\n")
            if rep.status != "ok":
                fh.write(f"  error: {rep.error}\n")
                continue
            fh.write(f"  steady RMS i_ac        {rep.rms_i_ac_steady:12.4f} A\n")
            fh.write(f"  steady RMS e_dc        {rep.rms_e_dc:12.4f} V\n")
            fh.write(f"  peak |B| left/mid/right"
                     f"  {rep.peak_b_left:.4f} / {rep.peak_b_middle:.4f}"
                     f" / {rep.peak_b_right:.4f} T\n")
            fh.write(f"  dc-side P/Q/S          {rep.mean_p_dc:.4g} W / "
                     f"{rep.mean_q_dc:.4g} var / {rep.mean_s_dc:.4g} VA\n")
            fh.write(f"  dominant e_dc freq     {rep.dominant_e_dc_freq:.2f} Hz\n")
            fh.write(f"  saturated fraction     left {rep.sat_fraction_left:.3f}"
                     f"  middle {rep.sat_fraction_middle:.3f}"
                     f"  right {rep.sat_fraction_right:.3f}\n")


def _execute(scenario: Scenario) -> TimeSeries:
    system, config = scenario.build()
    series = run_solver(system, config)
    series.metadata["scenario"] = scenario.name
    return series


def run_suite(scenarios: list[Scenario], parallelism: int = 1,
              out_dir="out", summary_only: bool = False
              ) -> tuple[list[SummaryReport], bool]:
    """Run scenarios (optionally in parallel processes), write one CSV per
    scenario plus the combined summary.  A failing scenario is recorded
    and does not disturb the others.  Outputs are identical regardless
    of parallelism."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results: list[TimeSeries | Exception] = [None] * len(scenarios)

    if parallelism > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_execute, sc) for sc in scenarios]
            for idx, fut in enumerate(futures):
                try:
                    results[idx] = fut.result()
                except (SolverError, ScenarioError, ValueError) as exc:
                    results[idx] = exc
    else:
        for idx, sc in enumerate(scenarios):
            try:
                results[idx] = _execute(sc)
            except (SolverError, ScenarioError, ValueError) as exc:
                results[idx] = exc

    reports = []
    any_failed = False
    for scenario, result in zip(scenarios, results):
        if isinstance(result, Exception):
            any_failed = True
            reports.append(SummaryReport(name=scenario.name, status="failed",
                                         error=str(result)))
            continue
        if not summary_only:
            emit_csv(result, out / f"{scenario.name}.csv", scenario.channels)
        reports.append(compute_summary(result, scenario))
    write_summary(reports, out)
    return reports, any_failed


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cvsr-sim",
        description="Time-domain simulation of a dc-bias-controlled "
                    "saturable series reactor.")
    parser.add_argument("config", nargs="?", help="scenario YAML file")
    parser.add_argument("--suite", help="built-in suite: nominal or fault")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--parallel", type=int, default=1, metavar="N",
                        help="worker processes for independent scenarios")
    parser.add_argument("--summary-only", action="store_true",
                        help="skip waveform CSVs, write only the summary")
    args = parser.parse_args(argv)

    if bool(args.config) == bool(args.suite):
        print("error: provide exactly one of <config> or --suite",
              file=sys.stderr)
        return 2
    if args.parallel < 1:
        print("error: --parallel must be >= 1", file=sys.stderr)
        return 2

    try:
        if args.suite:
            scenarios = builtin_suite(args.suite)
        else:
            path = Path(args.config)
            scenarios = [parse_scenario(path.read_text(), name=path.stem)]
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    reports, any_failed = run_suite(scenarios, parallelism=args.parallel,
                                    out_dir=args.out,
                                    summary_only=args.summary_only)
    for rep in reports:
        print(f"{rep.name}: {rep.status}")
    print(f"summary written to {Path(args.out) / 'summary.csv'}")
    return 1 if any_failed else 0


if __name__ == "__main__":
    sys.exit(main())
