"""Monte Carlo trials over random scenes, aggregation and result files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from skyplanner.channel import CLUSTER_TO_UAV, UAV_TO_TBS
from skyplanner.config import planner_config
from skyplanner.errors import InfeasibleTripError, InvalidParameterError, NoRelayError
from skyplanner.geometry import sample_scene
from skyplanner.planner import OBJECTIVES, PlannerConfig, plan_pair, plan_single_purpose

CSV_HEADER = ("trial,objective,n1_served,n2_served,round_trip_s,data_bithz,energy_j,efficiency,"
              "tbs_visits,delivered_first,feasible")
NUMERIC = ("n1_served", "n2_served", "round_trip_s", "data_bithz", "energy_j", "efficiency", "tbs_visits")
BUDGET_RTOL = 1e-6


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    objective: str
    n1_served: int
    n2_served: int
    round_trip_s: float
    data_bithz: float
    energy_j: float
    efficiency: float
    tbs_visits: int
    delivered_first: bool
    feasible: bool

    def row(self) -> list[str]:
        out = []
        for v in astuple(self):
            if isinstance(v, bool):
                out.append("1" if v else "0")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out

    @classmethod
    def infeasible(cls, trial: int, objective: str) -> TrialRecord:
        nan = math.nan
        return cls(trial, objective, 0, 0, nan, nan, nan, nan, 0, False, False)


@dataclass(frozen=True)
class ExperimentConfig:
    planner: PlannerConfig
    trials: int = 1000
    seed: int = 0
    objectives: tuple[str, ...] = OBJECTIVES

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1")
        if self.seed < 0:
            raise InvalidParameterError("seed must be unsigned")
        bad = [o for o in self.objectives if o not in OBJECTIVES]
        if bad or not self.objectives:
            raise InvalidParameterError(f"unknown objectives {bad}")

    @classmethod
    def from_dict(cls, cfg: dict) -> ExperimentConfig:
        ex = cfg["experiment"]
        return cls(planner_config(cfg), int(ex["trials"]), int(ex["seed"]), tuple(ex["objectives"]))


def trial_seed(root: int, trial: int) -> int:
    """Scene seed of one trial; depends only on (root, trial) so runs can be extended."""
    return int(np.random.SeedSequence((root, trial)).generate_state(1, np.uint64)[0])


def _record(trial, objective, plan) -> TrialRecord:
    L = plan.ledger
    n1, n2 = plan.served_counts
    t, m = L.T_total, L.M_total
    return TrialRecord(trial, objective, n1, n2, t, m, L.E_total, m / t, plan.tbs_visits, plan.delivered_first, True)


def _run_one(args) -> list[TrialRecord]:
    exp, trial = args
    scene = sample_scene(exp.planner.scene, trial_seed(exp.seed, trial))
    try:
        plans = plan_pair(scene, exp.planner)
    except (InfeasibleTripError, NoRelayError):
        return [TrialRecord.infeasible(trial, o) for o in exp.objectives]
    return [_record(trial, o, plans[o]) for o in exp.objectives]


def _run_one_single(args) -> list[TrialRecord]:
    exp, trial = args
    scene = sample_scene(exp.planner.scene, trial_seed(exp.seed, trial))
    try:
        trips = plan_single_purpose(scene, exp.planner)
    except (InfeasibleTripError, NoRelayError):
        return [TrialRecord.infeasible(trial, o) for o in exp.objectives]
    out = []
    for o in exp.objectives:
        tr = trips[o]
        p = tr.data_plan
        n1, n2 = p.served_counts if p else (0, 0)
        t, m = tr.round_trip_s, tr.data_bithz
        out.append(TrialRecord(trial, o, n1, n2, t, m, tr.energy_j, m / t, p.tbs_visits if p else 0, False, True))
    return out


def worker_count() -> int:
    env = os.environ.get("SKYPLANNER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameterError("SKYPLANNER_THREADS must be an integer") from None
    return os.cpu_count() or 1


def _map(fn, exp: ExperimentConfig, trials: Iterable[int], workers: int | None) -> list[TrialRecord]:
    jobs = [(exp, t) for t in trials]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) < 2:
        batches = [fn(j) for j in jobs]
    else:
        # map() yields in submission order, so the sink stays in trial order
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [r for batch in batches for r in batch]


def run_trials(exp: ExperimentConfig, workers: int | None = None, start: int = 0) -> list[TrialRecord]:
    """Plan every requested objective on scenes ``start .. start+trials-1`` (paired per scene)."""
    return _map(_run_one, exp, range(start, start + exp.trials), workers)


def single_purpose_baseline(exp: ExperimentConfig, workers: int | None = None) -> list[TrialRecord]:
    """Package-only sortie plus a data-only tour of the same clusters, each on a full battery.

    Times, energies and data are summed over the two sorties.
    """
    return _map(_run_one_single, exp, range(exp.trials), workers)


def feasible(records: Iterable[TrialRecord], objective: str | None = None) -> list[TrialRecord]:
    return [r for r in records if r.feasible and (objective is None or r.objective == objective)]


def delivery_efficiency(records: Iterable[TrialRecord], objective: str | None = None) -> float:
    """Mean of per-trial data / round-trip time over feasible records."""
    ok = feasible(records, objective)
    if not ok:
        raise InvalidParameterError("no feasible records to average")
    return float(np.mean([r.efficiency for r in ok]))


def efficiency_bound(cfg: PlannerConfig) -> float:
    """Rate ceiling: every bit is collected and then delivered, both at zero distance."""
    ut = cfg.unit_times()
    return 1.0 / (ut[CLUSTER_TO_UAV].at_zero + ut[UAV_TO_TBS].at_zero)


def check_records(records: Iterable[TrialRecord], budget: float) -> list[str]:
    """Ledger invariants of each feasible record; returns a list of violations."""
    bad = []
    for r in feasible(records):
        if r.energy_j > budget * (1 + BUDGET_RTOL):
            bad.append(f"trial {r.trial} {r.objective}: energy {r.energy_j} over budget")
        if r.efficiency != r.data_bithz / r.round_trip_s:
            bad.append(f"trial {r.trial} {r.objective}: efficiency mismatch")
    return bad


def _stats(values: Sequence[float]) -> dict:
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        return {"mean": None, "std": None, "q05": None, "q25": None, "q50": None, "q75": None, "q95": None}
    q = np.quantile(a, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {"mean": float(a.mean()), "std": float(a.std(ddof=1)) if a.size > 1 else 0.0,
            "q05": float(q[0]), "q25": float(q[1]), "q50": float(q[2]), "q75": float(q[3]), "q95": float(q[4])}


def summarize(records: Sequence[TrialRecord], cfg: PlannerConfig | None = None) -> dict:
    """Per-objective statistics of every numeric column, the feasible count and xi."""
    out: dict = {"objectives": {}}
    for obj in sorted({r.objective for r in records}):
        mine = [r for r in records if r.objective == obj]
        ok = feasible(mine)
        entry = {"trials": len(mine), "feasible": len(ok)}
        for col in NUMERIC:
            entry[col] = _stats([getattr(r, col) for r in ok])
        entry["delivered_first_rate"] = float(np.mean([r.delivered_first for r in ok])) if ok else None
        entry["xi"] = float(np.mean([r.efficiency for r in ok])) if ok else None
        out["objectives"][obj] = entry
    if cfg is not None:
        out["efficiency_bound"] = efficiency_bound(cfg)
        out["violations"] = check_records(records, cfg.power.battery_capacity)
    return out


# --------------------------------------------------------------------------
# files
# --------------------------------------------------------------------------


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def records_csv(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER.split(","))
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def write_csv(records: Iterable[TrialRecord], path) -> None:
    atomic_write(path, records_csv(records))


def write_records_json(records: Iterable[TrialRecord], path) -> None:
    rows = [{f.name: _json_safe(getattr(r, f.name)) for f in fields(TrialRecord)} for r in records]
    atomic_write(path, json.dumps(rows, indent=1) + "\n")


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_summary(summary: dict, path, timestamp: str | None = None) -> None:
    doc = dict(summary)
    if timestamp is not None:
        doc = {"generated_at": timestamp, **doc}
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=False) + "\n")


def read_csv(path) -> list[TrialRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TrialRecord(
                int(row["trial"]), row["objective"], int(row["n1_served"]), int(row["n2_served"]),
                float(row["round_trip_s"]), float(row["data_bithz"]), float(row["energy_j"]),
                float(row["efficiency"]), int(row["tbs_visits"]), row["delivered_first"] == "1",
                row["feasible"] == "1"))
    return out


def with_battery(exp: ExperimentConfig, battery_wh: float) -> ExperimentConfig:
    return replace(exp, planner=replace(exp.planner, power=exp.planner.power.with_battery_wh(battery_wh)))


def with_distance(exp: ExperimentConfig, sd_distance: float) -> ExperimentConfig:
    return replace(exp, planner=replace(exp.planner, scene=replace(exp.planner.scene, sd_distance=sd_distance)))
