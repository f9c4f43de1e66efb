"""``biv`` command line: simulate | validate | simstudy | summarize.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines (``#`` starts a comment), then explicit flags. Every
output file starts with ``# key=value`` lines echoing the resolved settings.

Exit codes: 0 success, 1 analysis failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
from pathlib import Path

from .datagen import DgpConfig, dataset_to_csv, generate_dataset, get_pattern, impose_missingness, read_csv
from .errors import AnalysisModelFailure, ConfigError
from .imputation import ImputationStrategy
from .numerics import RngStream
from .simstudy import build_grid, format_table, read_records, run_grid, summarize, write_records, write_summary
from .validation import REPORT_COLUMNS, ValidationConfig, validate

log = logging.getLogger("bootimpute")

DEFAULT_SEED = 20240815
EXIT_OK, EXIT_ANALYSIS, EXIT_USAGE = 0, 1, 2

# key -> (type, default) per subcommand; keys use underscores
SETTINGS = {
    "simulate": {
        "n": (int, 3500),
        "pattern": (str, "none"),
        "horizon": (float, 5.0),
        "calibrate_missingness": (bool, False),
    },
    "validate": {
        "data": (str, None),
        "approach": (str, "BI"),
        "strategy": (str, "all"),
        "n_boot": (int, 500),
        "horizon": (float, 5.0),
    },
    "simstudy": {
        "n": (str, "750,3500"),
        "patterns": (str, "A,B,C,D,E,F,G,H,I"),
        "strategies": (str, "all,high,few"),
        "approaches": (str, "CC,BI"),
        "n_sims": (int, 50),
        "n_boot": (int, 100),
        "horizon": (float, 5.0),
        "jobs": (int, 1),
        "calibrate_missingness": (bool, False),
    },
    "summarize": {
        "table": (bool, False),
    },
}
COMMON = {"seed": (int, None), "out": (str, None)}


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def _convert(key: str, typ, value):
    if value is None or typ is str:
        return value
    if typ is bool:
        if isinstance(value, bool):
            return value
        v = str(value).strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    try:
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {typ.__name__}, got {value!r}") from None


def resolve(command: str, args: argparse.Namespace) -> dict:
    spec = {**SETTINGS[command], **COMMON}
    file_values = {}
    if getattr(args, "config", None):
        try:
            file_values = parse_config_text(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    unknown = set(file_values) - set(spec)
    if unknown:
        raise ConfigError(f"unknown config key(s) for {command}: {', '.join(sorted(unknown))}")
    resolved = {}
    for key, (typ, default) in spec.items():
        value = default
        if key in file_values:
            value = file_values[key]
        flag = getattr(args, key, None)
        if flag is not None:
            value = flag
        resolved[key] = _convert(key, typ, value)
    if resolved["seed"] is None:
        env = os.environ.get("BIV_SEED")
        resolved["seed"] = _convert("BIV_SEED", int, env) if env else DEFAULT_SEED
    return resolved


def header(command: str, settings: dict) -> list[str]:
    lines = [f"biv {command}"]
    lines += [f"{k}={settings[k]}" for k in sorted(settings) if k not in ("out",)]
    return lines


def _csv_list(text: str) -> list[str]:
    return [p.strip() for p in text.replace(";", ",").split(",") if p.strip()]


def _emit(text: str, settings: dict, to_stdout: bool) -> None:
    if to_stdout or not settings.get("out"):
        sys.stdout.write(text)
        return
    path = Path(settings["out"])
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


# -- subcommands --------------------------------------------------------------

def cmd_simulate(settings: dict, to_stdout: bool) -> int:
    try:
        pattern = get_pattern(settings["pattern"])
        config = DgpConfig(n=settings["n"], horizon=settings["horizon"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    rng = RngStream(settings["seed"])
    full = generate_dataset(config, rng.child(0))
    data = impose_missingness(full, pattern, rng.child(2), calibrate=settings["calibrate_missingness"])
    _emit(dataset_to_csv(data, header("simulate", settings)), settings, to_stdout)
    log.info("simulated %d subjects, %d events, pattern %s", len(data), int(data.delta.sum()), pattern.label)
    return EXIT_OK


def cmd_validate(settings: dict, to_stdout: bool) -> int:
    if not settings["data"]:
        raise ConfigError("validate needs an input dataset (positional DATA or data= in config)")
    try:
        with open(settings["data"]) as fh:
            raw = read_csv(fh)
        config = ValidationConfig(
            n_boot=settings["n_boot"], horizon=settings["horizon"],
            strategy=ImputationStrategy.parse(settings["strategy"]),
            approach=settings["approach"].upper(), seed=settings["seed"])
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    report = validate(raw, config)
    buf = io.StringIO()
    for line in header("validate", settings):
        buf.write(f"# {line}\n")
    buf.write(",".join(REPORT_COLUMNS) + "\n")
    buf.write(report.csv_row() + "\n")
    _emit(buf.getvalue(), settings, to_stdout)
    sys.stderr.write(_human_report(report))
    return EXIT_OK


def _human_report(report) -> str:
    lines = [f"approach={report.approach} strategy={report.strategy} "
             f"bootstraps used={report.n_boot_used} failed={report.boot_failures}",
             f"{'':8}{'apparent':>10}{'boot':>10}{'.632':>10}{'.632+':>10}"]
    for m in ("auc", "brier"):
        e = getattr(report, m)
        lines.append(f"{m.upper():8}{e.apparent:10.4f}{e.boot:10.4f}{e.e632:10.4f}{e.e632plus:10.4f}")
    return "\n".join(lines) + "\n"


def cmd_simstudy(settings: dict, to_stdout: bool) -> int:
    try:
        ns = [int(v) for v in _csv_list(settings["n"])]
        specs = build_grid(
            ns=ns,
            patterns=[p.upper() for p in _csv_list(settings["patterns"])],
            strategies=_csv_list(settings["strategies"]),
            approaches=[a.upper() for a in _csv_list(settings["approaches"])],
            n_sims=settings["n_sims"], n_boot=settings["n_boot"], horizon=settings["horizon"],
            master_seed=settings["seed"], calibrate_missingness=settings["calibrate_missingness"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if not specs:
        raise ConfigError("empty scenario grid")

    def progress(done, total):
        log.info("replicate units %d/%d", done, total)

    records = run_grid(specs, jobs=max(1, settings["jobs"]), progress=progress)
    buf = io.StringIO()
    write_records(records, buf, header("simstudy", {k: v for k, v in settings.items() if k != "jobs"}))
    _emit(buf.getvalue(), settings, to_stdout)
    return EXIT_OK


def cmd_summarize(settings: dict, paths: list[str], to_stdout: bool) -> int:
    records = []
    for p in paths:
        try:
            with open(p) as fh:
                records.extend(read_records(fh))
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"{p}: {exc}") from None
    if not records:
        raise ConfigError("no bias records found in input")
    rows = summarize(records)
    buf = io.StringIO()
    write_summary(rows, buf, header("summarize", {**settings, "inputs": ";".join(paths)}))
    _emit(buf.getvalue(), settings, to_stdout)
    if settings["table"]:
        seen = sorted({(r.n, r.strategy) for r in rows if r.approach == "BI"})
        for n, strategy in seen:
            sys.stderr.write(format_table(rows, n, strategy) + "\n")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value settings file")
        p.add_argument("--seed", type=int, help="master seed (falls back to $BIV_SEED)")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--stdout", action="store_true", help="write results to stdout")

    p = sub.add_parser("simulate", help="generate a synthetic dataset CSV")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--pattern", help="none, guided or A-I")
    p.add_argument("--horizon", type=float)
    p.add_argument("--calibrate-missingness", dest="calibrate_missingness", action="store_const", const=True)

    p = sub.add_parser("validate", help="bootstrap internal validation of a dataset")
    common(p)
    p.add_argument("data", nargs="?")
    p.add_argument("--approach", choices=["BI", "CC", "bi", "cc"])
    p.add_argument("--strategy", help="all, high or few")
    p.add_argument("--n-boot", dest="n_boot", type=int)
    p.add_argument("--horizon", type=float)

    p = sub.add_parser("simstudy", help="run the scenario grid and write bias records")
    common(p)
    p.add_argument("--n", help="comma-separated sample sizes")
    p.add_argument("--patterns")
    p.add_argument("--strategies")
    p.add_argument("--approaches")
    p.add_argument("--n-sims", dest="n_sims", type=int)
    p.add_argument("--n-boot", dest="n_boot", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--calibrate-missingness", dest="calibrate_missingness", action="store_const", const=True)

    p = sub.add_parser("summarize", help="summarise bias records into mean (SD) tables")
    common(p)
    p.add_argument("paths", nargs="+")
    p.add_argument("--table", action="store_const", const=True, help="also print wide tables on stderr")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        settings = resolve(args.command, args)
        if args.command == "simulate":
            return cmd_simulate(settings, args.stdout)
        if args.command == "validate":
            return cmd_validate(settings, args.stdout)
        if args.command == "simstudy":
            return cmd_simstudy(settings, args.stdout)
        return cmd_summarize(settings, args.paths, args.stdout)
    except ConfigError as exc:
        sys.stderr.write(f"biv: error: {exc}\n")
        return EXIT_USAGE
    except AnalysisModelFailure as exc:
        sys.stderr.write(f"biv: AnalysisModelFailure: {exc}\n")
        return EXIT_ANALYSIS


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
