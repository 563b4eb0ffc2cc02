import time

import pytest

from skyplanner.config import load_config
from skyplanner.harness import ExperimentConfig
from skyplanner.planner import PlannerConfig

# one line per acceptance criterion, printed at the end of the session
CRITERIA: list[str] = []


def report(tag: str, ok: bool, detail: str) -> None:
    CRITERIA.append(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def base_cfg() -> dict:
    return load_config()


@pytest.fixture(scope="session")
def planner_cfg() -> PlannerConfig:
    cfg = PlannerConfig()
    cfg.unit_times()
    return cfg


@pytest.fixture(scope="session")
def experiment(base_cfg) -> ExperimentConfig:
    return ExperimentConfig.from_dict(base_cfg)


class PairedRun:
    """Both plans of every trial, kept whole so ledgers can be re-checked."""

    def __init__(self, exp: ExperimentConfig, trials: int):
        from skyplanner.errors import InfeasibleTripError, NoRelayError
        from skyplanner.geometry import sample_scene
        from skyplanner.harness import trial_seed
        from skyplanner.planner import plan_pair

        self.exp = exp
        self.scenes, self.plans = [], []
        t0 = time.perf_counter()
        for t in range(trials):
            scene = sample_scene(exp.planner.scene, trial_seed(exp.seed, t))
            try:
                pair = plan_pair(scene, exp.planner)
            except (InfeasibleTripError, NoRelayError):
                pair = None
            self.scenes.append(scene)
            self.plans.append(pair)
        self.seconds = time.perf_counter() - t0

    def feasible(self, n: int | None = None):
        return [p for p in self.plans[:n] if p is not None]

    def head(self, n: int) -> "PairedRun":
        out = object.__new__(PairedRun)
        out.exp, out.scenes, out.plans = self.exp, self.scenes[:n], self.plans[:n]
        out.seconds = self.seconds * n / len(self.plans)
        return out

    def xi(self, objective: str) -> float:
        ok = [p[objective].ledger for p in self.feasible()]
        return sum(L.M_total / L.T_total for L in ok) / len(ok)


@pytest.fixture(scope="session")
def paired_run(experiment) -> PairedRun:
    return PairedRun(experiment, 1000)


SWEEP_TRIALS = 200
DISTANCES_M = (3000.0, 5000.0, 7000.0, 9000.0, 11000.0)
BATTERY_SCALES = (0.5, 1.0, 1.5, 2.0)


@pytest.fixture(scope="session")
def distance_sweep(experiment, paired_run) -> dict:
    from skyplanner.harness import with_distance

    return {L: paired_run.head(SWEEP_TRIALS) if L == experiment.planner.scene.sd_distance
            else PairedRun(with_distance(experiment, L), SWEEP_TRIALS) for L in DISTANCES_M}


@pytest.fixture(scope="session")
def battery_sweep(experiment, paired_run) -> dict:
    from skyplanner.harness import with_battery

    wh = experiment.planner.power.battery_capacity / 3600.0
    return {k: paired_run.head(SWEEP_TRIALS) if k == 1.0 else PairedRun(with_battery(experiment, k * wh), SWEEP_TRIALS)
            for k in BATTERY_SCALES}
