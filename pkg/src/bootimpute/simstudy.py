"""Scenario grid: bias of CC and BI validation estimates against full-data truth.

Stream layout for replicate ``r`` under master seed ``m``:

* ``(m, r, 0)`` complete data generation
* ``(m, r, 1)`` bootstrap resampling, shared by the truth and approach runs
* ``(m, r, 2)`` missingness

Sharing the bootstrap stream means a scenario without missingness reproduces
the truth exactly, and the bias estimates do not carry independent resampling
noise from two unrelated sets of bootstraps.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .datagen import DgpConfig, SurvivalDataset, generate_dataset, get_pattern, impose_missingness
from .errors import AnalysisModelFailure, BivError
from .imputation import ALL, ImputationStrategy
from .numerics import RngStream
from .survival import predict_risk
from .validation import ESTIMATORS, METRICS, ValidationConfig, run_validation

log = logging.getLogger(__name__)

GENERATE, BOOTSTRAP, MISSINGNESS = 0, 1, 2


@dataclass(frozen=True)
class ScenarioSpec:
    n: int = 750
    pattern: str = "A"
    strategy: ImputationStrategy = ALL
    approach: str = "BI"
    n_sims: int = 50
    n_boot: int = 100
    horizon: float = 5.0
    master_seed: int = 20240815
    calibrate_missingness: bool = False

    def __post_init__(self):
        if self.n < 1 or self.n_sims < 1 or self.n_boot < 1:
            raise ValueError("n, n_sims and n_boot must be positive")
        if self.approach not in ("BI", "CC"):
            raise ValueError("approach must be 'BI' or 'CC'")
        get_pattern(self.pattern)

    @property
    def strategy_label(self) -> str:
        return self.strategy.label if self.approach == "BI" else "none"

    @property
    def key(self) -> tuple:
        return (self.n, self.pattern, self.approach, self.strategy_label)

    @property
    def truth_key(self) -> tuple:
        return (self.n, self.n_boot, self.horizon, self.master_seed)


FULL_SCALE = {"n_sims": 1000, "n_boot": 500}


def build_grid(ns: Sequence[int] = (750, 3500), patterns: Sequence[str] = tuple("ABCDEFGHI"),
               strategies: Sequence[str] = ("all", "high", "few"), approaches: Sequence[str] = ("CC", "BI"),
               **common) -> list[ScenarioSpec]:
    """Scenario list; complete-case analysis ignores the strategy, so it appears once."""
    specs = []
    for n, pat in itertools.product(ns, patterns):
        for approach in approaches:
            strats = strategies if approach == "BI" else strategies[:1]
            for st in strats:
                specs.append(ScenarioSpec(n=n, pattern=pat, strategy=ImputationStrategy.parse(st),
                                          approach=approach, **common))
    return specs


@dataclass
class BiasRecord:
    n: int
    pattern: str
    approach: str
    strategy: str
    replicate: int
    fit_ok: bool
    failure: str = ""
    n_boot_used: int = 0
    boot_failures: int = 0
    full: dict = field(default_factory=dict)
    approach_value: dict = field(default_factory=dict)
    bias: dict = field(default_factory=dict)
    pred_bias: float = math.nan
    n_pred: int = 0

    @property
    def key(self) -> tuple:
        return (self.n, self.pattern, self.approach, self.strategy)


def _estimates(report) -> dict:
    return {(m, e): getattr(report, m).get(e) for m in METRICS for e in ESTIMATORS}


@dataclass
class _Truth:
    full: SurvivalDataset
    values: dict | None
    risk: np.ndarray | None
    failure: str = ""


def compute_truth(n: int, replicate: int, n_boot: int, horizon: float, master_seed: int) -> _Truth:
    rng = RngStream(master_seed, replicate)
    full = generate_dataset(DgpConfig(n=n, horizon=horizon), rng.child(GENERATE))
    cfg = ValidationConfig(n_boot=n_boot, horizon=horizon, approach="BI")
    try:
        res = run_validation(full, cfg, rng.child(BOOTSTRAP))
    except AnalysisModelFailure as exc:
        return _Truth(full, None, None, f"truth: {exc}")
    return _Truth(full, _estimates(res.report), predict_risk(res.apparent_fit, full.x, horizon))


def run_replicate(spec: ScenarioSpec, replicate: int, truth: _Truth | None = None) -> BiasRecord:
    """One simulated dataset through truth and approach pipelines; failures are recorded, not raised."""
    rec = BiasRecord(spec.n, spec.pattern, spec.approach, spec.strategy_label, replicate, fit_ok=False)
    if truth is None:
        truth = compute_truth(spec.n, replicate, spec.n_boot, spec.horizon, spec.master_seed)
    if truth.values is None:
        rec.failure = truth.failure
        return rec
    rng = RngStream(spec.master_seed, replicate)
    raw = impose_missingness(truth.full, get_pattern(spec.pattern), rng.child(MISSINGNESS),
                             calibrate=spec.calibrate_missingness)
    cfg = ValidationConfig(n_boot=spec.n_boot, horizon=spec.horizon, strategy=spec.strategy,
                           approach=spec.approach)
    try:
        res = run_validation(raw, cfg, rng.child(BOOTSTRAP))
    except (AnalysisModelFailure, BivError) as exc:
        rec.failure = str(exc)
        return rec
    rec.fit_ok = True
    rec.n_boot_used = res.report.n_boot_used
    rec.boot_failures = res.report.boot_failures
    rec.full = truth.values
    rec.approach_value = _estimates(res.report)
    rec.bias = {k: rec.full[k] - rec.approach_value[k] for k in rec.full}

    # predictions for every subject the approach's apparent model can score
    rows = np.searchsorted(truth.full.id, res.dat.id)
    approach_risk = predict_risk(res.apparent_fit, res.dat.x, spec.horizon)
    rec.pred_bias = float(np.mean(truth.risk[rows] - approach_risk))
    rec.n_pred = int(rows.size)
    return rec


def _run_unit(args) -> list[BiasRecord]:
    specs, replicate = args
    truth = compute_truth(specs[0].n, replicate, specs[0].n_boot, specs[0].horizon, specs[0].master_seed)
    return [run_replicate(spec, replicate, truth) for spec in specs]


def run_grid(specs: Sequence[ScenarioSpec], jobs: int = 1, progress=None) -> list[BiasRecord]:
    """All (scenario, replicate) pairs; truth is computed once per dataset.

    Output is ordered by scenario (input order) then replicate, whatever ``jobs`` is.
    """
    groups: dict[tuple, list[tuple[int, ScenarioSpec]]] = {}
    for pos, spec in enumerate(specs):
        groups.setdefault(spec.truth_key, []).append((pos, spec))
    units = []
    for members in groups.values():
        max_rep = max(s.n_sims for _, s in members)
        for r in range(max_rep):
            active = [(pos, s) for pos, s in members if r < s.n_sims]
            units.append(([s for _, s in active], [pos for pos, _ in active], r))

    results: dict[tuple[int, int], BiasRecord] = {}

    def collect(positions, replicate, records):
        for pos, rec in zip(positions, records):
            results[(pos, replicate)] = rec

    if jobs <= 1:
        for i, (sp, positions, r) in enumerate(units):
            collect(positions, r, _run_unit((sp, r)))
            if progress:
                progress(i + 1, len(units))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = pool.map(_run_unit, [(sp, r) for sp, _, r in units])
            for i, ((sp, positions, r), recs) in enumerate(zip(units, outs)):
                collect(positions, r, recs)
                if progress:
                    progress(i + 1, len(units))
    return [results[k] for k in sorted(results)]


# -- CSV ----------------------------------------------------------------------

ID_COLUMNS = ("n", "pattern", "approach", "strategy", "replicate", "fit_ok",
              "n_boot_used", "boot_failures")
VALUE_COLUMNS = tuple(f"{kind}_{m}_{e}" for kind in ("full", "approach", "bias")
                      for m in METRICS for e in ESTIMATORS)
RECORD_COLUMNS = ID_COLUMNS + VALUE_COLUMNS + ("pred_bias", "n_pred", "failure")


def _f(v: float) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.10g}"


def write_records(records: Iterable[BiasRecord], fh: TextIO, header_lines: Iterable[str] = ()) -> None:
    for line in header_lines:
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        row = [r.n, r.pattern, r.approach, r.strategy, r.replicate, int(r.fit_ok),
               r.n_boot_used, r.boot_failures]
        for kind, src in (("full", r.full), ("approach", r.approach_value), ("bias", r.bias)):
            row.extend(_f(src.get((m, e), math.nan)) for m in METRICS for e in ESTIMATORS)
        row.extend([_f(r.pred_bias), r.n_pred, r.failure.replace("\n", " ")])
        w.writerow(row)


def read_records(fh: TextIO) -> list[BiasRecord]:
    reader = csv.DictReader(line for line in fh if not line.startswith("#"))
    out = []
    for row in reader:
        rec = BiasRecord(int(row["n"]), row["pattern"], row["approach"], row["strategy"],
                         int(row["replicate"]), row["fit_ok"] == "1", failure=row.get("failure", ""),
                         n_boot_used=int(row["n_boot_used"]), boot_failures=int(row["boot_failures"]))
        if rec.fit_ok:
            for kind, dest in (("full", rec.full), ("approach", rec.approach_value), ("bias", rec.bias)):
                for m in METRICS:
                    for e in ESTIMATORS:
                        dest[(m, e)] = float(row[f"{kind}_{m}_{e}"])
            rec.pred_bias = float(row["pred_bias"])
            rec.n_pred = int(row["n_pred"])
        out.append(rec)
    return out


def records_to_csv(records, header_lines=()) -> str:
    buf = io.StringIO()
    write_records(records, buf, header_lines)
    return buf.getvalue()


# -- summaries ----------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    n: int
    pattern: str
    approach: str
    strategy: str
    metric: str  # auc | brier | risk
    estimator: str  # apparent | boot | 632 | 632plus | prediction
    n_records: int
    n_ok: int
    failure_rate: float
    mean: float
    sd: float
    single: bool  # SD undefined with one record; reported as 0


SUMMARY_COLUMNS = ("n", "pattern", "approach", "strategy", "metric", "estimator",
                   "n_records", "n_ok", "failure_rate", "mean_bias", "sd_bias", "single")


def _moments(values: list[float]):
    if not values:
        return math.nan, math.nan, False
    if len(values) == 1:
        return values[0], 0.0, True
    return float(np.mean(values)), float(np.std(values, ddof=1)), False


def summarize(records: Sequence[BiasRecord]) -> list[SummaryRow]:
    """Mean and SD of bias over successful replicates, per scenario x metric x estimator."""
    if not records:
        raise ValueError("no records to summarise")
    by_key: dict[tuple, list[BiasRecord]] = {}
    for r in records:
        by_key.setdefault(r.key, []).append(r)
    rows = []
    for key in sorted(by_key, key=_scenario_order):
        recs = sorted(by_key[key], key=lambda r: r.replicate)
        ok = [r for r in recs if r.fit_ok]
        rate = 1.0 - len(ok) / len(recs)
        cells = [(m, e, [r.bias[(m, e)] for r in ok]) for m in METRICS for e in ESTIMATORS]
        cells.append(("risk", "prediction", [r.pred_bias for r in ok]))
        for m, e, vals in cells:
            mean, sd, single = _moments(vals)
            rows.append(SummaryRow(*key, m, e, len(recs), len(ok), rate, mean, sd, single))
    return rows


def _scenario_order(key):
    n, pattern, approach, strategy = key
    order = {"all": 0, "high": 1, "few": 2, "none": 3}
    return (n, pattern, order.get(strategy, 9), approach)


def write_summary(rows: Iterable[SummaryRow], fh: TextIO, header_lines: Iterable[str] = ()) -> None:
    for line in header_lines:
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow([r.n, r.pattern, r.approach, r.strategy, r.metric, r.estimator, r.n_records,
                    r.n_ok, _f(r.failure_rate), _f(r.mean), _f(r.sd), int(r.single)])


_EST_TITLES = (("apparent", "Original"), ("boot", "Bootstrap"), ("632", ".632"), ("632plus", ".632+"))


def format_table(rows: Sequence[SummaryRow], n: int, strategy: str) -> str:
    """Text table of ``mean (sd)`` bias: patterns down, estimator x {BI, CC} across."""
    index = {(r.pattern, r.approach, r.metric, r.estimator): r
             for r in rows if r.n == n and (r.strategy == strategy or r.approach == "CC")}
    patterns = sorted({p for p, *_ in index})
    head = ["Scenario"] + [f"{t} {a}" for _, t in _EST_TITLES for a in ("BI", "CC")]
    lines = [f"Mean (SD) bias, n={n}, BI strategy '{strategy}'", " | ".join(head)]
    for metric, title in (("auc", "AUC"), ("brier", "Brier")):
        lines.append(title)
        for p in patterns:
            cells = [p]
            for est, _ in _EST_TITLES:
                for a in ("BI", "CC"):
                    r = index.get((p, a, metric, est))
                    if r is None or r.n_ok == 0:
                        cells.append("")
                    else:
                        cells.append(f"{r.mean:.3f} ({r.sd:.3f})")
            lines.append(" | ".join(cells))
    return "\n".join(lines) + "\n"
