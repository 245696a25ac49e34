"""
Shared fixtures: small hand-built shops and scripted policies
"""
from typing import Dict, List, Sequence, Tuple

import pytest

from aivsched.core.energy import EnergyModel
from aivsched.core.policy import Policy
from aivsched.core.scenario import (
    AivConfig,
    BreakdownConfig,
    JobSpec,
    Layout,
    Scenario,
    ScenarioConfig,
    due_date,
)

#            S  WS1 WS2 CH1
MICRO_TRANSFER = (
    (0, 14, 23, 30),
    (14, 0, 12, 20),
    (23, 12, 0, 25),
    (30, 20, 25, 0),
)
MICRO_TIMES = [[{0: 8.0, 1: 4.0}, {0: 6.0, 1: 10.0}]]


def build_scenario(
    transfer: Sequence[Sequence[float]] = MICRO_TRANSFER,
    processing_times: List[List[Dict[int, float]]] = None,
    arrivals: Sequence[Tuple[float, int]] = ((5.0, 0), (1000.0, 0)),
    due_dates: Sequence[float] = None,
    aivs: int = 1,
    capacity: int = 1,
    n_chargers: int = 1,
    charge_threshold: float = 0.0,
    recharge_duration: float = 30.0,
    initial_battery: float = 100.0,
    breakdowns: List[List[Tuple[float, float]]] = None,
) -> Scenario:
    """Scenario from explicit data; ``arrivals`` holds (time, product) per job."""
    processing_times = processing_times or [[dict(op) for op in ops] for ops in MICRO_TIMES]
    n_ws = len(transfer) - 1 - n_chargers
    config = ScenarioConfig(
        n_jobs=len(arrivals),
        n_products=len(processing_times),
        n_workstations=n_ws,
        routings=tuple(tuple(tuple(sorted(op)) for op in ops) for ops in processing_times),
        breakdown=BreakdownConfig(enabled=breakdowns is not None),
        aiv=AivConfig(count=aivs, capacity=capacity, charge_threshold=charge_threshold,
                      recharge_duration=recharge_duration, initial_battery=initial_battery,
                      n_chargers=n_chargers),
        energy=EnergyModel(moving=tuple([0.02, 0.05, 0.10, 0.15][:capacity + 1])),
    )
    jobs = []
    for i, (arrival, product) in enumerate(arrivals):
        due = due_dates[i] if due_dates is not None else due_date(arrival, processing_times[product], 1.0)
        jobs.append(JobSpec(id=i, product=product, arrival_time=arrival, due_date=due, t_draw=1.0))
    return Scenario(
        config=config,
        layout=Layout(n_ws, n_chargers, transfer),
        processing_times=processing_times,
        jobs=jobs,
        breakdowns=breakdowns if breakdowns is not None else [[] for _ in range(n_ws)],
    )


class ScriptedPolicy(Policy):
    """Workstations from a per-(job, operation) script; AIVs from a per-job script (default A1)."""

    name = "scripted"

    def __init__(self, workstations: Dict[Tuple[int, int], int], aivs: Dict[int, int] = None):
        self.workstations = workstations
        self.aivs = aivs or {}

    def choose_workstation(self, state, job):
        return self.workstations[(job.id, job.next_op_index)]

    def choose_aiv(self, state, job, request):
        return self.aivs.get(job.id, 0)


@pytest.fixture
def micro_scenario():
    """2 jobs x 2 operations, 2 workstations, 1 AIV of capacity 1, no breakdowns"""
    return build_scenario(due_dates=(60.0, 1040.0))


@pytest.fixture
def scenario_factory():
    return build_scenario
