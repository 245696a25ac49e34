"""
Policy abstraction and the episode driver shared by heuristics, MADQN and the bench.
"""

import time
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from .errors import ContractViolation
from .scenario import Scenario
from .simulation import DecisionKind, Job, SimState, TransportRequest


class Policy:
    """Answers the two decisions the engine surfaces.

    Subclasses implement ``choose_workstation`` and ``choose_aiv``;
    ``attach`` runs once on a fresh state before the first event and
    ``detach`` once the run is over.
    """

    name = "policy"

    def attach(self, state: SimState):
        pass

    def detach(self, state: SimState):
        pass

    def choose_workstation(self, state: SimState, job: Job) -> int:
        raise NotImplementedError

    def choose_aiv(self, state: SimState, job: Job, request: TransportRequest) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class RunResult:
    policy: str
    scenario_id: str
    seed: int
    n_jobs: int
    total_tardiness: float
    n_tardy: int
    total_energy: float
    wall_time: float
    makespan: float = 0.0
    n_recharges: int = 0
    recharged_pct: float = 0.0
    depleted: bool = False

    @classmethod
    def from_state(cls, state: SimState, policy: str, wall_time: float = 0.0) -> "RunResult":
        diag = state.diagnostics()
        return cls(
            policy=policy,
            scenario_id=state.scenario.content_hash()[:16],
            seed=state.scenario.config.seed,
            n_jobs=len(state.jobs),
            total_tardiness=state.total_tardiness(),
            n_tardy=state.n_tardy(),
            total_energy=state.ledger.total(),
            wall_time=wall_time,
            makespan=diag["makespan"],
            n_recharges=diag["n_recharges"],
            recharged_pct=diag["recharged_pct"],
            depleted=diag["depleted"],
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def metrics_line(self) -> str:
        return (f"total_tardiness={self.total_tardiness:.4f} n_tardy={self.n_tardy} "
                f"total_energy={self.total_energy:.4f}")


def resolve_decision(state: SimState, policy: Policy):
    """Answer the pending decision and, when transport is needed, the AIV decision that follows it."""
    decision = state.pending_decision
    job = state.jobs[decision.job_id]
    if decision.kind == DecisionKind.WORKSTATION:
        ws = policy.choose_workstation(state, job)
        if ws not in job.current_operation.processing_time:
            raise ContractViolation(f"{policy.name} chose ineligible WS{ws + 1} for {job.name}")
        decision = state.assign_workstation(job.id, ws)
        if decision is None:
            return
    aiv = policy.choose_aiv(state, job, decision.request)
    if not 0 <= aiv < len(state.aivs):
        raise ContractViolation(f"{policy.name} chose unknown AIV index {aiv}")
    state.assign_aiv(job.id, aiv)


def simulate(scenario: Scenario, policy: Policy, keep_trace: bool = False) -> SimState:
    """Run one complete simulation under ``policy`` and return the final state."""
    state = SimState(scenario, keep_trace=keep_trace)
    policy.attach(state)
    outcome = state.advance_to_next_event()
    while not outcome.done:
        if state.pending_decision is not None:
            resolve_decision(state, policy)
        outcome = state.advance_to_next_event()
    policy.detach(state)
    return state


def run_episode(scenario: Scenario, policy: Policy, keep_trace: bool = False) -> RunResult:
    started = time.perf_counter()
    state = simulate(scenario, policy, keep_trace=keep_trace)
    return RunResult.from_state(state, policy.name, time.perf_counter() - started)


def trace_text(state: Optional[SimState]) -> str:
    if state is None or state.trace is None:
        return ""
    return "\n".join(state.trace) + "\n"
