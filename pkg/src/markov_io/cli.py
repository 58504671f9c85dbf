"""Batch command line: ``markov-io {validate,analyze,sweep,tracks,forecast}``.

Every CSV output starts with ``#`` lines holding the package version and the
full run configuration as JSON.  JSON outputs carry the same data under a
``"metadata"`` key.  Exit codes: 0 success, 2 validation failure,
3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .chain import check_ergodicity, to_stochastic
from .errors import IoError, MarkovIOError, ValidationError
from .ingest import load_panel
from .network import Kind, validate
from .panel import economy_tracks, forecast, globalization_indices, steady_states
from .perturb import make_baseline, sweep
from .spectral import DEFAULT_MIXING_TOLERANCE, DEFAULT_RUNS, DEFAULT_TOLERANCE

EXCLUDE_CHOICES = ("row", "gov")


@dataclass
class RunConfig:
    command: str
    manifest: str
    out: str
    seed: int = 0
    tolerance: float = DEFAULT_TOLERANCE
    mixing_tolerance: float = DEFAULT_MIXING_TOLERANCE
    runs: int = DEFAULT_RUNS
    alpha: float = -99.0
    influence_threshold: float = 0.005
    self_loop_scaling: str = "once"
    dangling_policy: str = "error"
    exclude: list = field(default_factory=list)
    threads: int = 1
    year: int = None
    kemeny: bool = True
    horizon: int = 5
    lags: list = field(default_factory=lambda: [3, 4, 5, 6])
    target: str = "gap"

    def header(self) -> list:
        return [f"markov_io {__version__}", "config " + json.dumps(asdict(self), sort_keys=True)]


def _is_row(economy: str) -> bool:
    return economy.upper() == "ROW"


def keep_node(node, exclude) -> bool:
    if "row" in exclude and _is_row(node.economy):
        return False
    if "gov" in exclude and node.kind is Kind.GOVERNMENT:
        return False
    return True


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, config: RunConfig, header, rows) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for line in config.header():
                fh.write(f"# {line}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror}") from exc


def _outdir(config: RunConfig) -> Path:
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


def cmd_validate(config: RunConfig) -> int:
    panel = load_panel(config.manifest)
    years, ok = [], True
    for net in panel.networks:
        report = validate(net)
        entry = {"year": net.year, **report.to_dict()}
        entry["dangling_labels"] = [net.nodes[k].label for k in report.dangling_nodes]
        try:
            erg = check_ergodicity(to_stochastic(net, config.dangling_policy))
            entry.update(erg.to_dict())
            entry["passed"] = erg.ergodic
            if not erg.ergodic:
                entry["problem"] = "chain is not irreducible and aperiodic"
        except MarkovIOError as exc:
            entry["passed"] = False
            entry["problem"] = str(exc)
        if not entry["passed"]:
            ok = False
            print(f"{net.year}: {entry['problem']}", file=sys.stderr)
        years.append(entry)
    doc = {"metadata": {"version": __version__, "config": asdict(config)}, "years": years}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if config.out:
        path = _outdir(config) / "validation.json"
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc.strerror}") from exc
    sys.stdout.write(text)
    return 0 if ok else 2


def cmd_analyze(config: RunConfig) -> int:
    panel = load_panel(config.manifest)
    out = _outdir(config)
    glob = globalization_indices(
        panel, config.mixing_tolerance, config.runs, config.seed, config.dangling_policy, config.threads
    )
    rows = []
    for year in panel.years:
        if year in glob.failures:
            continue
        rows.append((year, glob.mixing.values[year], glob.mixing.std[year], glob.kemeny.values[year]))
    write_csv(out / "globalization.csv", config, ["year", "mixing_mean", "mixing_std", "kemeny"], rows)
    states = steady_states(panel, config.tolerance, config.seed, config.dangling_policy, config.threads)
    pi_rows = []
    for year, state in states.items():
        for node, value in zip(panel.nodes, state.pi):
            if keep_node(node, config.exclude):
                pi_rows.append((year, node.economy, node.sector, node.kind.value, float(value)))
    write_csv(out / "steady_state.csv", config, ["year", "economy", "sector", "kind", "pi"], pi_rows)
    for year, msg in glob.failures.items():
        print(f"{year}: {msg}", file=sys.stderr)
    return 3 if glob.failures else 0


def _progress(done, total):
    if done % 50 == 0 or done == total:
        print(f"sweep: {done}/{total}", file=sys.stderr, flush=True)


def cmd_sweep(config: RunConfig) -> int:
    panel = load_panel(config.manifest)
    year = config.year if config.year is not None else panel.years[-1]
    try:
        net = panel[year]
    except KeyError:
        raise ValidationError(f"year {year} not in panel") from None
    out = _outdir(config)
    checkpoint = out / f"sweep_{year}.checkpoint.jsonl"
    base = make_baseline(net, config.dangling_policy, config.tolerance, config.seed, config.kemeny)
    result = sweep(
        net,
        alpha=config.alpha,
        influence_threshold=config.influence_threshold,
        self_loop_scaling=config.self_loop_scaling,
        with_kemeny=config.kemeny,
        tolerance=config.tolerance,
        dangling_policy=config.dangling_policy,
        seed=config.seed,
        threads=config.threads,
        baseline=base,
        checkpoint=checkpoint,
        progress=_progress,
    )
    rows = [
        (node.economy, node.sector, sp, si, sf, kc)
        for node, sp, si, sf, kc in result.rows()
        if keep_node(node, config.exclude)
    ]
    header = [
        "node_economy",
        "node_sector",
        "structural_power",
        "systemic_influence",
        "systemic_fragility",
        "kemeny_change_pct",
    ]
    write_csv(out / f"sweep_{year}.csv", config, header, rows)
    checkpoint.unlink(missing_ok=True)
    for k, msg in result.failures.items():
        print(f"node {net.nodes[k].label}: {msg}", file=sys.stderr)
    return 3 if result.failures else 0


def _tracks(config: RunConfig, panel):
    tracks = economy_tracks(panel, config.tolerance, config.seed, config.dangling_policy, config.threads)
    if "row" in config.exclude:
        tracks = [t for t in tracks if not _is_row(t.economy)]
    return tracks


def cmd_tracks(config: RunConfig) -> int:
    panel = load_panel(config.manifest)
    out = _outdir(config)
    tracks = _tracks(config, panel)
    rows = []
    for year in panel.years:
        for track in tracks:
            p = track.points[year]
            rows.append((year, track.economy, p.pi_share, p.gdp_share, p.gap))
    write_csv(out / "tracks.csv", config, ["year", "economy", "pi_share", "gdp_share", "gap"], rows)
    return 0


def cmd_forecast(config: RunConfig) -> int:
    panel = load_panel(config.manifest)
    out = _outdir(config)
    rows = []
    for track in _tracks(config, panel):
        fc = forecast(track.series(config.target), config.lags, config.horizon, track.economy)
        for year, lag, value in fc.rows():
            rows.append((track.economy, year, lag, value))
    write_csv(out / "forecast.csv", config, ["economy", "year", "lag", "value"], rows)
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "tracks": cmd_tracks,
    "forecast": cmd_forecast,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", required=True, help="panel manifest (JSON)")
    common.add_argument("--out", default="", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE, help="steady-state L1 tolerance")
    common.add_argument("--mixing-tolerance", type=float, default=DEFAULT_MIXING_TOLERANCE)
    common.add_argument("--runs", type=int, default=DEFAULT_RUNS, help="mixing-time runs per year")
    common.add_argument("--alpha", type=float, default=-99.0, help="activity change in percent")
    common.add_argument("--influence-threshold", type=float, default=0.005)
    common.add_argument("--self-loop-scaling", choices=("once", "twice"), default="once")
    common.add_argument("--dangling-policy", choices=("error", "uniform", "self_loop"), default="error")
    common.add_argument("--exclude", action="append", choices=EXCLUDE_CHOICES, default=[])
    common.add_argument("--threads", type=int, default=1)

    parser = argparse.ArgumentParser(prog="markov-io", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"markov_io {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check every year of a panel")
    sub.add_parser("analyze", parents=[common], help="globalization indices and steady states")
    p = sub.add_parser("sweep", parents=[common], help="systemic risk sweep for one year")
    p.add_argument("--year", type=int, default=None, help="defaults to the last panel year")
    p.add_argument("--no-kemeny", dest="kemeny", action="store_false", help="skip the Kemeny column")
    sub.add_parser("tracks", parents=[common], help="economy steady-state vs GDP shares")
    p = sub.add_parser("forecast", parents=[common], help="trend projections of economy tracks")
    p.add_argument("--horizon", type=int, default=5)
    p.add_argument("--lags", type=lambda s: [int(x) for x in s.split(",")], default=[3, 4, 5, 6])
    p.add_argument("--target", choices=("gap", "pi_share", "gdp_share"), default="gap")
    return parser


def config_from_args(args) -> RunConfig:
    values = vars(args).copy()
    values["exclude"] = sorted(set(values["exclude"]))
    known = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in values.items() if k in known})


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    if args.command != "validate" and not config.out:
        config.out = os.curdir
    try:
        return COMMANDS[args.command](config)
    except MarkovIOError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
