"""
Discrete-event engine for a flexible job shop served by AIVs.

The engine owns the world state (jobs, workstations, vehicles, charging
stations, the energy ledger) and a ``simpy.Environment`` that holds the
clock and the event queue. Job arrivals and the pre-drawn unavailability
traces run as simpy processes; travel, processing, charging and repairs
are prioritised timeouts. The engine never takes decisions itself: whenever
a job needs a workstation or a vehicle it stops and hands a
``DecisionPoint`` to the caller, which answers with ``assign_workstation``
/ ``enqueue_transport`` before advancing again.

Typical loop::

    state = SimState(scenario)
    outcome = state.advance_to_next_event()
    while not outcome.done:
        if outcome.decision is not None:
            ...  # resolve it
        outcome = state.advance_to_next_event()
"""

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Deque, Dict, Iterable, List, Optional, Tuple

import simpy
from simpy.core import NORMAL

from .energy import CHARGING, NOT_MOVING, EnergyLedger, LedgerEntry, moving_class
from .errors import (
    BatteryDepletedWarning,
    InvalidTransitionError,
    SimulationCorruptionError,
)
from .scenario import Scenario
from ..utils.log import get_logger, trace_enabled

logger = get_logger("sim")

BUSY_EPSILON = 1e-9


class EventKind(str, Enum):
    PROCESS_DONE = "process-done"
    TRAVEL_DONE = "travel-done"
    CHARGE_DONE = "charge-done"
    REPAIR = "repair"
    BREAKDOWN = "breakdown"
    ARRIVAL = "arrival"
    DECISION = "decision"


# Equal timestamps: completions, then repairs, breakdowns, arrivals, decisions.
# All values sit above simpy's NORMAL, so process start/stop bookkeeping settles first.
EVENT_PRIORITY = {
    EventKind.PROCESS_DONE: NORMAL + 1,
    EventKind.TRAVEL_DONE: NORMAL + 1,
    EventKind.CHARGE_DONE: NORMAL + 1,
    EventKind.REPAIR: NORMAL + 2,
    EventKind.BREAKDOWN: NORMAL + 3,
    EventKind.ARRIVAL: NORMAL + 4,
    EventKind.DECISION: NORMAL + 5,
}


class JobStatus(str, Enum):
    NOT_ARRIVED = "not-arrived"
    WAITING_FOR_TRANSPORT = "waiting-for-transport"
    IN_TRANSIT = "in-transit"
    QUEUED = "queued-at-workstation"
    PROCESSING = "processing"
    COMPLETED = "completed"


class AivStatus(str, Enum):
    IDLE = "idle"
    MOVING_EMPTY = "moving-empty"
    MOVING_LOADED = "moving-loaded"
    CHARGING = "charging"
    TRAVELING_TO_CHARGE = "traveling-to-charge"
    WAITING_FOR_CHARGER = "waiting-for-charger"


class DecisionKind(str, Enum):
    WORKSTATION = "workstation"
    AIV = "aiv"


@dataclass
class Operation:
    processing_time: Dict[int, float]
    assigned_workstation: Optional[int] = None
    remaining_time: float = 0.0

    @property
    def eligible_workstations(self) -> List[int]:
        return sorted(self.processing_time)


@dataclass(frozen=True)
class TransferWindow:
    aiv_id: int
    start: float
    end: float
    origin: int
    destination: int


@dataclass
class Job:
    id: int
    product: int
    arrival_time: float
    due_date: float
    operations: List[Operation]
    next_op_index: int = 0
    status: JobStatus = JobStatus.NOT_ARRIVED
    completion_time: Optional[float] = None
    location: Optional[int] = None
    carrier: Optional[int] = None
    transport_requested: bool = False
    transfer_windows: List[TransferWindow] = field(default_factory=list)

    @property
    def name(self) -> str:
        return f"J{self.id + 1}"

    @property
    def current_operation(self) -> Optional[Operation]:
        if self.next_op_index < len(self.operations):
            return self.operations[self.next_op_index]
        return None

    @property
    def remaining_operations(self) -> List[Operation]:
        return self.operations[self.next_op_index:]

    @property
    def lateness(self) -> float:
        if self.completion_time is None:
            raise InvalidTransitionError(f"{self.name} has not completed")
        return self.completion_time - self.due_date

    @property
    def tardiness(self) -> float:
        return max(0.0, self.lateness)


@dataclass
class Workstation:
    id: int
    node: int
    queue: Deque[int] = field(default_factory=deque)
    busy_time_accum: float = 0.0
    available: bool = True
    current_job: Optional[int] = None
    suspended_job: Optional[int] = None
    unavailable_until: Optional[float] = None
    busy_since: Optional[float] = None
    started_at: Optional[float] = None
    epoch: int = 0

    @property
    def name(self) -> str:
        return f"WS{self.id + 1}"

    @property
    def queue_length(self) -> int:
        """Waiting jobs plus the job on the machine (running or suspended)."""
        occupied = self.current_job is not None or self.suspended_job is not None
        return len(self.queue) + int(occupied)

    def busy_time(self, now: float) -> float:
        running = now - self.busy_since if self.busy_since is not None else 0.0
        return self.busy_time_accum + running


@dataclass(frozen=True)
class TransportRequest:
    job_id: int
    origin: int
    destination: int
    request_time: float


@dataclass(frozen=True)
class Stop:
    kind: str  # "pickup" | "deliver" | "charge"
    node: int
    target: int  # job id, or charging station id for "charge"


@dataclass
class AIV:
    id: int
    capacity: int
    battery_pct: float
    location: int = 0
    status: AivStatus = AivStatus.IDLE
    cargo: List[int] = field(default_factory=list)
    pending_requests: Deque[TransportRequest] = field(default_factory=deque)
    busy_time_accum: float = 0.0
    busy_since: Optional[float] = None
    activity: str = NOT_MOVING
    mark: float = 0.0
    stops: Deque[Stop] = field(default_factory=deque)
    tour_jobs: List[int] = field(default_factory=list)
    window_start: Dict[int, float] = field(default_factory=dict)
    leg_origin: int = 0
    depleted: bool = False
    n_recharges: int = 0

    @property
    def name(self) -> str:
        return f"A{self.id + 1}"

    @property
    def queue_length(self) -> int:
        return len(self.pending_requests) + len(self.tour_jobs)

    def busy_time(self, now: float) -> float:
        running = now - self.busy_since if self.busy_since is not None else 0.0
        return self.busy_time_accum + running


@dataclass
class ChargingStation:
    id: int
    node: int
    occupant: Optional[int] = None
    wait_queue: Deque[int] = field(default_factory=deque)

    @property
    def name(self) -> str:
        return f"CH{self.id + 1}"


@dataclass(frozen=True)
class DecisionPoint:
    kind: DecisionKind
    job_id: int
    time: float
    request: Optional[TransportRequest] = None


@dataclass(frozen=True)
class EventOutcome:
    time: float
    kind: Optional[EventKind]
    entity: str = ""
    decision: Optional[DecisionPoint] = None
    done: bool = False


class ShopEvent(simpy.Event):
    """A domain event that fires ``delay`` time units from now.

    Scheduled the way ``simpy.Timeout`` is, but with the priority of its
    kind, so equal timestamps resolve by ``EVENT_PRIORITY`` and then by
    insertion order.

    Raises:
        SimulationCorruptionError: If ``delay`` is negative.
    """

    def __init__(self, env: simpy.Environment, delay: float, kind: EventKind, target: int,
                 token: int = 0, duration: float = 0.0):
        if delay < 0:
            raise SimulationCorruptionError(f"Event {kind.value} at {env.now + delay} precedes clock {env.now}")
        super().__init__(env)
        self.kind = kind
        self.target = target
        self.token = token
        self.duration = duration
        self._ok = True
        self._value = None
        env.schedule(self, EVENT_PRIORITY[kind], delay)


class SimListener:
    """Hooks fired by the engine; subclasses override what they need."""

    def on_operation_complete(self, state: "SimState", job: Job):
        pass

    def on_delivery(self, state: "SimState", job: Job, window: TransferWindow):
        pass

    def on_job_complete(self, state: "SimState", job: Job):
        pass


def merge_windows(windows: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    """Merge overlapping (start, duration) unavailability windows."""
    merged: List[List[float]] = []
    for start, duration in sorted(windows):
        end = start + duration
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(s, e - s) for s, e in merged]


class SimState:
    """Event-driven world state of one simulation run.

    Args:
        scenario: The problem instance to simulate.
        keep_trace: Record one ``time<TAB>kind<TAB>entity<TAB>detail`` line per event.
        listeners: Objects receiving operation, delivery and completion hooks.
    """

    def __init__(self, scenario: Scenario, keep_trace: bool = False, listeners: Optional[List[SimListener]] = None):
        self.scenario = scenario
        self.layout = scenario.layout
        self.energy = scenario.config.energy
        self.aiv_config = scenario.config.aiv
        self.env = simpy.Environment()
        self.ledger = EnergyLedger()
        self.trace: Optional[List[str]] = [] if keep_trace else None
        self.listeners: List[SimListener] = list(listeners or [])
        self.pending_decision: Optional[DecisionPoint] = None
        self.done = False
        self.n_completed = 0
        self._outcome: Optional[EventOutcome] = None

        self.jobs = [
            Job(
                id=spec.id,
                product=spec.product,
                arrival_time=spec.arrival_time,
                due_date=spec.due_date,
                operations=[Operation(dict(op)) for op in scenario.operations_of(spec.product)],
            )
            for spec in scenario.jobs
        ]
        self.workstations = [Workstation(id=w, node=self.layout.ws_node(w)) for w in range(self.layout.n_workstations)]
        self.aivs = [
            AIV(id=a, capacity=self.aiv_config.capacity, battery_pct=self.aiv_config.initial_battery,
                location=self.layout.STORAGE)
            for a in range(self.aiv_config.count)
        ]
        self.stations = [
            ChargingStation(id=c, node=self.layout.charger_node(c)) for c in range(self.layout.n_chargers)
        ]
        self.initial_battery = {a.id: a.battery_pct for a in self.aivs}

        self.env.process(self._job_source())
        for ws, trace in enumerate(scenario.breakdowns):
            windows = merge_windows(list(trace))
            if windows:
                self.env.process(self._unavailability_trace(ws, windows))

    @property
    def now(self) -> float:
        return self.env.now

    # ------------------------------------------------------------------
    # kernel

    def schedule(self, delay: float, kind: EventKind, target: int, token: int = 0, duration: float = 0.0) -> ShopEvent:
        """Put a domain event on the simpy queue ``delay`` time units from now."""
        event = ShopEvent(self.env, delay, kind, target, token=token, duration=duration)
        event.callbacks.append(self._handle)
        return event

    def _job_source(self) -> Iterable[ShopEvent]:
        for job in sorted(self.jobs, key=lambda j: (j.arrival_time, j.id)):
            yield self.schedule(job.arrival_time - self.now, EventKind.ARRIVAL, job.id)

    def _unavailability_trace(self, ws_id: int, windows: List[Tuple[float, float]]) -> Iterable[ShopEvent]:
        for start, duration in windows:
            yield self.schedule(start - self.now, EventKind.BREAKDOWN, ws_id, duration=duration)

    def _handle(self, event: ShopEvent):
        if self.done:
            return
        handler = {
            EventKind.ARRIVAL: self._on_arrival,
            EventKind.DECISION: self._on_decision,
            EventKind.PROCESS_DONE: self._on_process_done,
            EventKind.TRAVEL_DONE: self._on_travel_done,
            EventKind.CHARGE_DONE: self._on_charge_done,
            EventKind.BREAKDOWN: self._on_breakdown,
            EventKind.REPAIR: self._on_repair,
        }[event.kind]
        entity = handler(event)
        self._outcome = EventOutcome(self.now, event.kind, entity, self.pending_decision, self.done)

    def _record(self, kind: str, entity: str, detail: str = ""):
        line = f"{self.now:.6f}\t{kind}\t{entity}\t{detail}"
        if self.trace is not None:
            self.trace.append(line)
        if trace_enabled():
            logger.debug(line)

    def advance_to_next_event(self) -> EventOutcome:
        """Step the environment until exactly one domain event has been applied.

        simpy's own process bookkeeping events are stepped through silently.

        Returns:
            The outcome; ``decision`` is set when the caller must decide
            before advancing again, ``done`` once every job has completed
            (or nothing is left to happen).

        Raises:
            SimulationCorruptionError: When a decision is still unresolved.
        """
        if self.done:
            return EventOutcome(self.now, None, done=True)
        if self.pending_decision is not None:
            raise SimulationCorruptionError(
                f"Cannot advance: {self.pending_decision.kind.value} decision for "
                f"{self.jobs[self.pending_decision.job_id].name} is unresolved"
            )
        self._outcome = None
        while self._outcome is None:
            if math.isinf(self.env.peek()):
                self._finish()
                return EventOutcome(self.now, None, done=True)
            self.env.step()
        return self._outcome

    def _finish(self):
        for aiv in self.aivs:
            self._settle(aiv)
            if aiv.busy_since is not None:
                aiv.busy_time_accum += self.now - aiv.busy_since
                aiv.busy_since = None
        self.done = True
        logger.info(f"Simulation finished at t={self.now:.3f}: {self.n_completed}/{len(self.jobs)} jobs completed")

    # ------------------------------------------------------------------
    # decisions

    def _on_arrival(self, event: ShopEvent) -> str:
        job = self.jobs[event.target]
        job.status = JobStatus.WAITING_FOR_TRANSPORT
        job.location = self.layout.STORAGE
        self._record("arrival", job.name, f"product=P{job.product + 1} due={job.due_date:.6f}")
        self.schedule(0.0, EventKind.DECISION, job.id)
        return job.name

    def _on_decision(self, event: ShopEvent) -> str:
        job = self.jobs[event.target]
        self.pending_decision = DecisionPoint(DecisionKind.WORKSTATION, job.id, self.now)
        self._record("decision", job.name, f"workstation op={job.next_op_index + 1}")
        return job.name

    def assign_workstation(self, job_id: int, ws_id: int) -> Optional[DecisionPoint]:
        """Resolve a workstation-selection decision.

        Returns:
            The AIV-selection decision point for the same operation, or None
            when the job already sits at the chosen workstation and joins its
            queue directly.
        """
        job = self.jobs[job_id]
        pending = self.pending_decision
        if pending is None or pending.kind != DecisionKind.WORKSTATION or pending.job_id != job_id:
            raise InvalidTransitionError(f"No workstation decision pending for {job.name}")
        op = job.current_operation
        if ws_id not in op.processing_time:
            raise InvalidTransitionError(
                f"WS{ws_id + 1} is not eligible for operation {job.next_op_index + 1} of {job.name}"
            )
        op.assigned_workstation = ws_id
        op.remaining_time = op.processing_time[ws_id]
        ws = self.workstations[ws_id]
        self._record("assign-ws", job.name, ws.name)
        if job.location == ws.node:
            self.pending_decision = None
            job.status = JobStatus.QUEUED
            ws.queue.append(job.id)
            self._record("handover", job.name, ws.name)
            self.start_processing(ws_id)
            return None
        request = TransportRequest(job_id=job.id, origin=job.location, destination=ws_id, request_time=self.now)
        self.pending_decision = DecisionPoint(DecisionKind.AIV, job.id, self.now, request)
        return self.pending_decision

    def assign_aiv(self, job_id: int, aiv_id: int):
        """Resolve an AIV-selection decision by queueing the pending request."""
        pending = self.pending_decision
        if pending is None or pending.kind != DecisionKind.AIV or pending.job_id != job_id:
            raise InvalidTransitionError(f"No AIV decision pending for {self.jobs[job_id].name}")
        self.pending_decision = None
        self.enqueue_transport(pending.request, aiv_id)

    # ------------------------------------------------------------------
    # transport

    def enqueue_transport(self, request: TransportRequest, aiv_id: int):
        """Append a request to an AIV's FIFO; start a tour if the AIV is idle.

        Raises:
            InvalidTransitionError: If the job is in transit or already has a request.
        """
        job = self.jobs[request.job_id]
        if not 0 <= aiv_id < len(self.aivs):
            raise InvalidTransitionError(f"Unknown AIV index {aiv_id}")
        if job.status != JobStatus.WAITING_FOR_TRANSPORT or job.transport_requested:
            raise InvalidTransitionError(f"{job.name} cannot be queued for transport (status {job.status.value})")
        aiv = self.aivs[aiv_id]
        job.transport_requested = True
        aiv.pending_requests.append(request)
        self._record("request", aiv.name, f"{job.name} {self.layout.node_name(request.origin)}->WS{request.destination + 1}")
        if aiv.status == AivStatus.IDLE:
            self._dispatch(aiv)

    def _dispatch(self, aiv: AIV):
        if aiv.status != AivStatus.IDLE:
            return
        if self.charging_policy_check(aiv.id) is not None:
            return
        if aiv.pending_requests:
            self.execute_tour(aiv.id)

    def execute_tour(self, aiv_id: int):
        """Start a tour: up to ``capacity`` pickups in FIFO order, then the deliveries in the same order."""
        aiv = self.aivs[aiv_id]
        if not aiv.pending_requests or aiv.status not in (AivStatus.IDLE,):
            raise InvalidTransitionError(f"{aiv.name} cannot start a tour (status {aiv.status.value})")
        requests = [aiv.pending_requests.popleft() for _ in range(min(aiv.capacity, len(aiv.pending_requests)))]
        aiv.tour_jobs = [r.job_id for r in requests]
        aiv.stops = deque(
            [Stop("pickup", r.origin, r.job_id) for r in requests]
            + [Stop("deliver", self.layout.ws_node(r.destination), r.job_id) for r in requests]
        )
        self._record("tour", aiv.name, " ".join(self.jobs[r.job_id].name for r in requests))
        self._start_leg(aiv)

    def _start_leg(self, aiv: AIV):
        stop = aiv.stops[0]
        if stop.kind == "charge":
            status = AivStatus.TRAVELING_TO_CHARGE
        else:
            status = AivStatus.MOVING_LOADED if aiv.cargo else AivStatus.MOVING_EMPTY
        self._set_activity(aiv, status, moving_class(len(aiv.cargo)))
        if stop.kind == "pickup":
            aiv.window_start[stop.target] = self.now
        aiv.leg_origin = aiv.location
        duration = self.layout.time(aiv.location, stop.node)
        self._record("depart", aiv.name, f"{self.layout.node_name(aiv.location)}->{self.layout.node_name(stop.node)} load={len(aiv.cargo)}")
        self.schedule(duration, EventKind.TRAVEL_DONE, aiv.id)

    def _on_travel_done(self, event: ShopEvent) -> str:
        aiv = self.aivs[event.target]
        stop = aiv.stops.popleft()
        self._settle(aiv)
        aiv.location = stop.node
        if stop.kind == "pickup":
            job = self.jobs[stop.target]
            job.status = JobStatus.IN_TRANSIT
            job.location = None
            job.carrier = aiv.id
            job.transport_requested = False
            aiv.cargo.append(job.id)
            self._record("pickup", aiv.name, f"{job.name} at {self.layout.node_name(stop.node)}")
        elif stop.kind == "deliver":
            self._deliver(aiv, self.jobs[stop.target])
        else:
            self._arrive_at_charger(aiv, self.stations[stop.target])
            return aiv.name

        if aiv.stops:
            self._start_leg(aiv)
        else:
            self._set_activity(aiv, AivStatus.IDLE, NOT_MOVING)
            self._record("idle", aiv.name, self.layout.node_name(aiv.location))
            self._dispatch(aiv)
        return aiv.name

    def _deliver(self, aiv: AIV, job: Job):
        ws = self.workstations[job.current_operation.assigned_workstation]
        aiv.cargo.remove(job.id)
        aiv.tour_jobs.remove(job.id)
        job.carrier = None
        job.location = ws.node
        job.status = JobStatus.QUEUED
        ws.queue.append(job.id)
        window = TransferWindow(
            aiv_id=aiv.id,
            start=aiv.window_start.pop(job.id),
            end=self.now,
            origin=self.layout.STORAGE if job.next_op_index == 0 else self.operation_node(job, job.next_op_index - 1),
            destination=ws.node,
        )
        job.transfer_windows.append(window)
        self._record("deliver", aiv.name, f"{job.name} to {ws.name}")
        for listener in self.listeners:
            listener.on_delivery(self, job, window)
        self.start_processing(ws.id)

    def operation_node(self, job: Job, op_index: int) -> int:
        return self.layout.ws_node(job.operations[op_index].assigned_workstation)

    # ------------------------------------------------------------------
    # energy and charging

    def _set_activity(self, aiv: AIV, status: AivStatus, activity: str):
        self._settle(aiv)
        if aiv.status == AivStatus.IDLE and status != AivStatus.IDLE:
            aiv.busy_since = self.now
        elif aiv.status != AivStatus.IDLE and status == AivStatus.IDLE and aiv.busy_since is not None:
            aiv.busy_time_accum += self.now - aiv.busy_since
            aiv.busy_since = None
        aiv.status = status
        aiv.activity = activity

    def _settle(self, aiv: AIV):
        dt = self.now - aiv.mark
        if dt > 0:
            self.consume_energy(aiv.id, dt, aiv.activity)

    def consume_energy(self, aiv_id: int, dt: float, activity: str) -> float:
        """Book ``dt`` time units of ``activity`` against an AIV's battery.

        The interval starts where the AIV's ledger last ended. Consumption
        that would drain the battery below 0 is clamped and a
        ``BatteryDepletedWarning`` is issued.

        Returns:
            The battery percentage actually consumed.
        """
        if dt < 0:
            raise SimulationCorruptionError(f"Negative energy interval {dt} for A{aiv_id + 1}")
        aiv = self.aivs[aiv_id]
        pct = self.energy.rate(activity) * dt
        if pct > aiv.battery_pct:
            message = f"{aiv.name} battery depleted at t={aiv.mark + dt:.3f}; clamped at 0%"
            logger.warning(message)
            warnings.warn(message, BatteryDepletedWarning)
            pct = aiv.battery_pct
            aiv.depleted = True
        if dt > 0:
            self.ledger.append(LedgerEntry(aiv_id, aiv.mark, aiv.mark + dt, activity, pct))
        aiv.battery_pct -= pct
        aiv.mark += dt
        return pct

    def battery(self, aiv_id: int) -> float:
        """Battery level at the current clock, including the unsettled interval."""
        aiv = self.aivs[aiv_id]
        return max(0.0, aiv.battery_pct - self.energy.rate(aiv.activity) * (self.now - aiv.mark))

    def charging_policy_check(self, aiv_id: int) -> Optional[int]:
        """Send an idle AIV below the charge threshold to a charging station.

        The nearest free station is reserved; if none is free the AIV heads
        for the nearest station and waits in its FIFO queue.

        Returns:
            The chosen station id, or None when no charge trip is needed.
        """
        aiv = self.aivs[aiv_id]
        if aiv.status != AivStatus.IDLE:
            return None
        self._settle(aiv)
        if not aiv.battery_pct < self.aiv_config.charge_threshold:
            return None
        by_distance = sorted(self.stations, key=lambda s: (self.layout.time(aiv.location, s.node), s.id))
        free = [s for s in by_distance if s.occupant is None and not s.wait_queue]
        station = free[0] if free else by_distance[0]
        if free:
            station.occupant = aiv.id
        aiv.stops = deque([Stop("charge", station.node, station.id)])
        self._record("charge-trip", aiv.name, f"{station.name} battery={aiv.battery_pct:.6f} reserved={bool(free)}")
        self._start_leg(aiv)
        return station.id

    def _arrive_at_charger(self, aiv: AIV, station: ChargingStation):
        if station.occupant is None and not station.wait_queue:
            station.occupant = aiv.id
        if station.occupant == aiv.id:
            self._start_charging(aiv, station)
        else:
            station.wait_queue.append(aiv.id)
            self._set_activity(aiv, AivStatus.WAITING_FOR_CHARGER, NOT_MOVING)
            self._record("charge-wait", aiv.name, station.name)

    def _start_charging(self, aiv: AIV, station: ChargingStation):
        self._set_activity(aiv, AivStatus.CHARGING, CHARGING)
        self._record("charge-start", aiv.name, station.name)
        self.schedule(self.aiv_config.recharge_duration, EventKind.CHARGE_DONE, aiv.id, token=station.id)

    def _on_charge_done(self, event: ShopEvent) -> str:
        aiv = self.aivs[event.target]
        station = self.stations[event.token]
        self._settle(aiv)
        recharged = 100.0 - aiv.battery_pct
        self.ledger.record_recharge(aiv.id, recharged)
        aiv.battery_pct = 100.0
        aiv.n_recharges += 1
        station.occupant = None
        self._set_activity(aiv, AivStatus.IDLE, NOT_MOVING)
        self._record("charge-done", aiv.name, f"{station.name} +{recharged:.6f}")
        if station.wait_queue:
            waiting = self.aivs[station.wait_queue.popleft()]
            station.occupant = waiting.id
            self._start_charging(waiting, station)
        self._dispatch(aiv)
        return aiv.name

    # ------------------------------------------------------------------
    # workstations

    def start_processing(self, ws_id: int) -> bool:
        """Start the head of the workstation's FIFO queue if the machine is free and available."""
        ws = self.workstations[ws_id]
        if not ws.available or ws.current_job is not None or ws.suspended_job is not None or not ws.queue:
            return False
        job = self.jobs[ws.queue.popleft()]
        job.status = JobStatus.PROCESSING
        ws.current_job = job.id
        self._run(ws, job)
        self._record("start", ws.name, f"{job.name} op={job.next_op_index + 1}")
        return True

    def _run(self, ws: Workstation, job: Job):
        ws.started_at = self.now
        ws.busy_since = self.now
        self.schedule(job.current_operation.remaining_time,
                      EventKind.PROCESS_DONE, ws.id, token=ws.epoch)

    def _stop_clock(self, ws: Workstation):
        if ws.busy_since is not None:
            ws.busy_time_accum += self.now - ws.busy_since
            ws.busy_since = None

    def _on_process_done(self, event: ShopEvent) -> str:
        ws = self.workstations[event.target]
        if event.token != ws.epoch or ws.current_job is None:
            return ws.name
        self._stop_clock(ws)
        job_id = ws.current_job
        ws.current_job = None
        self._record("done", ws.name, f"{self.jobs[job_id].name} op={self.jobs[job_id].next_op_index + 1}")
        self.complete_operation(job_id)
        if not self.done:
            self.start_processing(ws.id)
        return ws.name

    def complete_operation(self, job_id: int) -> Optional[DecisionPoint]:
        """Finish the job's current operation.

        Returns:
            The workstation-selection decision point for the next operation,
            or None when the job is completed.
        """
        job = self.jobs[job_id]
        if job.status != JobStatus.PROCESSING:
            raise InvalidTransitionError(f"{job.name} is not processing (status {job.status.value})")
        job.current_operation.remaining_time = 0.0
        job.next_op_index += 1
        for listener in self.listeners:
            listener.on_operation_complete(self, job)
        if job.next_op_index < len(job.operations):
            job.status = JobStatus.WAITING_FOR_TRANSPORT
            self.schedule(0.0, EventKind.DECISION, job.id)
            return DecisionPoint(DecisionKind.WORKSTATION, job.id, self.now)

        job.status = JobStatus.COMPLETED
        job.completion_time = self.now
        self.n_completed += 1
        self._record("complete", job.name, f"lateness={job.lateness:.6f}")
        for listener in self.listeners:
            listener.on_job_complete(self, job)
        if self.n_completed == len(self.jobs):
            self._finish()
        return None

    def apply_unavailability(self, ws_id: int, at: float, duration: float):
        """Schedule a workstation unavailability over ``[at, at + duration)``."""
        if duration <= 0:
            raise ValueError(f"Unavailability duration must be positive, got {duration}")
        if at < self.now:
            raise ValueError(f"Unavailability at {at} lies before the clock {self.now}")
        self.schedule(at - self.now, EventKind.BREAKDOWN, ws_id, duration=duration)

    def _on_breakdown(self, event: ShopEvent) -> str:
        ws = self.workstations[event.target]
        end = self.now + event.duration
        if not ws.available:
            if end > ws.unavailable_until:
                ws.unavailable_until = end
                self.schedule(event.duration, EventKind.REPAIR, ws.id)
            self._record("breakdown", ws.name, f"merged until {ws.unavailable_until:.6f}")
            return ws.name
        ws.available = False
        ws.unavailable_until = end
        if ws.current_job is not None:
            job = self.jobs[ws.current_job]
            op = job.current_operation
            op.remaining_time = max(0.0, op.remaining_time - (self.now - ws.started_at))
            self._stop_clock(ws)
            ws.suspended_job = ws.current_job
            ws.current_job = None
            ws.epoch += 1
        self._record("breakdown", ws.name, f"until {end:.6f}")
        self.schedule(event.duration, EventKind.REPAIR, ws.id)
        return ws.name

    def _on_repair(self, event: ShopEvent) -> str:
        ws = self.workstations[event.target]
        if ws.available or self.now < ws.unavailable_until:
            return ws.name
        ws.available = True
        ws.unavailable_until = None
        self._record("repair", ws.name)
        if ws.suspended_job is not None:
            job = self.jobs[ws.suspended_job]
            ws.current_job = ws.suspended_job
            ws.suspended_job = None
            self._run(ws, job)
            self._record("resume", ws.name, f"{job.name} remaining={job.current_operation.remaining_time:.6f}")
        else:
            self.start_processing(ws.id)
        return ws.name

    # ------------------------------------------------------------------
    # read-only views

    def busy_percentage_ws(self, ws_id: int) -> float:
        return 100.0 * self.workstations[ws_id].busy_time(self.now) / max(self.now, BUSY_EPSILON)

    def busy_percentage_aiv(self, aiv_id: int) -> float:
        return 100.0 * self.aivs[aiv_id].busy_time(self.now) / max(self.now, BUSY_EPSILON)

    def active_jobs(self) -> List[Job]:
        return [j for j in self.jobs if j.status not in (JobStatus.NOT_ARRIVED, JobStatus.COMPLETED)]

    def total_tardiness(self) -> float:
        return sum(j.tardiness for j in self.jobs if j.completion_time is not None)

    def n_tardy(self) -> int:
        return sum(1 for j in self.jobs if j.completion_time is not None and j.completion_time > j.due_date)

    def diagnostics(self) -> Dict[str, Any]:
        return {
            "n_recharges": sum(a.n_recharges for a in self.aivs),
            "recharged_pct": sum(self.ledger.recharged.values()),
            "depleted": any(a.depleted for a in self.aivs),
            "makespan": max((j.completion_time for j in self.jobs if j.completion_time is not None), default=0.0),
        }
