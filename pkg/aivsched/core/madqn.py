"""
Multi-agent DQN control: every job is an agent with two decision networks.

The workstation-selection network picks where the job's next operation
runs; the AIV-selection network picks which vehicle carries it there. By
default all job agents share one network per decision type. Each decision
reads the same-layer activations of up to K other active agents through
the communication slots of the network (see ``neural``).

Rewards:
    workstation network  -CurrentTardiness at each operation completion
    AIV network          -(battery % consumed while carrying the job)
    both                 -(completion - due) added to the terminal transition
"""

from collections import deque
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Deque, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import neural
from .energy import EnergyLedger
from .errors import ConfigurationError, ContractViolation, TrainingDivergenceError
from .policy import Policy
from .scenario import Scenario, mean_processing_time
from .simulation import Job, SimListener, SimState, TransferWindow, TransportRequest
from ..utils.log import get_logger

logger = get_logger("madqn")

WS = "ws"
AIV = "aiv"
DISTANCE_DIVISOR = 50.0


@dataclass(frozen=True)
class TrainConfig:
    """Learning hyper-parameters.

    Args:
        episodes: Number of training episodes (one full simulation each).
        epsilon_start / epsilon_end: Linear exploration schedule end points.
        epsilon_decay_fraction: Share of the episodes over which epsilon decays.
        batch_size: SGD mini-batch size.
        target_sync: SGD steps between target-network copies.
        replay_capacity: Experiences kept per decision network.
        gamma: Discount factor.
        lr: SGD learning rate.
        k_slots: Peer slots per hidden layer.
        k_tardiness: Coefficient on remaining processing time in the tardiness estimate.
        parameter_sharing: One network pair for all agents when True.
        n_agents: Number of network pairs without sharing (defaults to the job count).
        seed: Seed for weight initialisation and exploration.
    """
    episodes: int = 300
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.8
    batch_size: int = 32
    target_sync: int = 100
    replay_capacity: int = 10000
    gamma: float = 0.9
    lr: float = 0.01
    k_slots: int = neural.DEFAULT_K_SLOTS
    k_tardiness: float = 1.5
    parameter_sharing: bool = True
    n_agents: Optional[int] = None
    seed: int = 0

    def validate(self):
        if self.episodes < 0:
            raise ConfigurationError("episodes must be nonnegative")
        for name in ("epsilon_start", "epsilon_end", "epsilon_decay_fraction", "gamma"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        for name in ("batch_size", "target_sync", "replay_capacity", "k_slots"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.lr <= 0 or self.k_tardiness <= 0:
            raise ConfigurationError("lr and k_tardiness must be positive")
        if self.n_agents is not None and self.n_agents <= 0:
            raise ConfigurationError("n_agents must be positive")
        if self.seed < 0:
            raise ConfigurationError("seed must be nonnegative")

    def epsilon(self, episode: int) -> float:
        """Exploration rate of a 0-based episode."""
        horizon = self.episodes * self.epsilon_decay_fraction
        if horizon <= 0:
            return self.epsilon_end
        frac = min(1.0, episode / horizon)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TrainConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return replace(cls(), **known)


@dataclass(frozen=True)
class Normalizer:
    """Fixed divisors mapping raw features into [0, 1]."""
    n_jobs: int
    horizon: float
    distance: float = DISTANCE_DIVISOR

    @classmethod
    def from_scenario(cls, scenario: Scenario, distance: float = DISTANCE_DIVISOR) -> "Normalizer":
        return cls(n_jobs=scenario.n_jobs, horizon=scenario.horizon_estimate(), distance=distance)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ----------------------------------------------------------------------
# features and rewards

def remaining_processing_time(job: Job) -> float:
    return sum(mean_processing_time(op) for op in job.remaining_operations)


def tardiness_estimate(due_date: float, rpt: float, now: float, k: float) -> float:
    """max(0, k x RPT + CT - DueDate)."""
    return max(0.0, k * rpt + now - due_date)


def current_tardiness(job: Job, now: float, k: float = 1.5) -> float:
    return tardiness_estimate(job.due_date, remaining_processing_time(job), now, k)


def build_ws_observation(state: SimState, job: Job, norm: Normalizer, k: float = 1.5) -> np.ndarray:
    """3m + 4 features: queue lengths, distances and busy % per workstation,
    then next processing time, current tardiness, RPT and clock."""
    node = job.location
    queues = [ws.queue_length / norm.n_jobs for ws in state.workstations]
    distances = [state.layout.time(node, ws.node) / norm.distance for ws in state.workstations]
    busy = [state.busy_percentage_ws(ws.id) / 100.0 for ws in state.workstations]
    scalars = [
        mean_processing_time(job.current_operation) / norm.horizon,
        current_tardiness(job, state.now, k) / norm.horizon,
        remaining_processing_time(job) / norm.horizon,
        state.now / norm.horizon,
    ]
    return np.clip(np.array(queues + distances + busy + scalars, dtype=float), 0.0, 1.0)


def build_aiv_observation(state: SimState, job: Job, norm: Normalizer, pickup_node: Optional[int] = None,
                          k: float = 1.5) -> np.ndarray:
    """3n + 3 features: queue lengths, distances to the pickup node and
    battery % per AIV, then current tardiness, RPT and clock."""
    node = job.location if pickup_node is None else pickup_node
    queues = [aiv.queue_length / norm.n_jobs for aiv in state.aivs]
    distances = [state.layout.time(aiv.location, node) / norm.distance for aiv in state.aivs]
    battery = [state.battery(aiv.id) / 100.0 for aiv in state.aivs]
    scalars = [
        current_tardiness(job, state.now, k) / norm.horizon,
        remaining_processing_time(job) / norm.horizon,
        state.now / norm.horizon,
    ]
    return np.clip(np.array(queues + distances + battery + scalars, dtype=float), 0.0, 1.0)


def ws_observation_width(n_workstations: int) -> int:
    return 3 * n_workstations + 4


def aiv_observation_width(n_aivs: int) -> int:
    return 3 * n_aivs + 3


def feasible_mask(n_actions: int, feasible: Sequence[int]) -> np.ndarray:
    mask = np.zeros(n_actions, dtype=bool)
    mask[list(feasible)] = True
    return mask


def mask_q_values(q: np.ndarray, feasible: Sequence[int]) -> np.ndarray:
    """Replace the Q-values of infeasible actions by -inf.

    Raises:
        ContractViolation: If ``feasible`` is empty.
    """
    q = np.asarray(q, dtype=float)
    if len(feasible) == 0:
        raise ContractViolation("Cannot mask Q-values with an empty feasible set")
    masked = np.full_like(q, -np.inf)
    idx = list(feasible)
    masked[idx] = q[idx]
    return masked


def select_action(q_masked: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over the finite (feasible) entries; greedy ties go to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ContractViolation(f"epsilon must lie in [0, 1], got {epsilon}")
    feasible = np.flatnonzero(np.isfinite(q_masked))
    if feasible.size == 0:
        raise ContractViolation("No feasible action to select")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.choice(feasible))
    return int(np.argmax(q_masked))


def final_reward(job: Job) -> float:
    """-(completion - due): positive when the job finishes early."""
    if job.completion_time is None:
        raise ContractViolation(f"{job.name} has no completion time yet")
    return -(job.completion_time - job.due_date)


def transfer_reward(ledger: EnergyLedger, window: TransferWindow) -> float:
    """-(battery % consumed by the carrying AIV from pickup start to delivery)."""
    return -ledger.consumed_between(window.aiv_id, window.start, window.end)


def td_target(reward: float, q_next_masked: Optional[np.ndarray], gamma: float, terminal: bool) -> float:
    """y = r for terminal transitions, else r + gamma x max_a' Q_target(s', a')."""
    if terminal or q_next_masked is None:
        return float(reward)
    return float(reward + gamma * np.max(q_next_masked))


# ----------------------------------------------------------------------
# replay and learners

@dataclass
class Experience:
    obs: np.ndarray
    comm: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    next_comm: np.ndarray
    next_mask: np.ndarray
    terminal: bool
    mask: Optional[np.ndarray] = None


class ReplayBuffer:
    """Bounded FIFO of experiences with uniform sampling."""

    def __init__(self, capacity: int = 10000):
        self.capacity = capacity
        self._items: Deque[Experience] = deque(maxlen=capacity)

    def push(self, experience: Experience):
        if experience.mask is not None and not experience.mask[experience.action]:
            raise ContractViolation(f"Stored action {experience.action} is masked in its own state")
        self._items.append(experience)

    def sample(self, batch_size: int, rng: np.random.Generator) -> List[Experience]:
        n = min(batch_size, len(self._items))
        idx = rng.choice(len(self._items), size=n, replace=False)
        return [self._items[i] for i in idx]

    def __len__(self) -> int:
        return len(self._items)


class Learner:
    """Online network, target network and replay buffer of one decision type.

    Args:
        params: Initial online parameters (copied into the target network).
        config: Training hyper-parameters.
    """

    def __init__(self, params: neural.NetworkParams, config: TrainConfig):
        self.online = params
        self.target = params.copy()
        self.buffer = ReplayBuffer(config.replay_capacity)
        self.steps = 0
        self.config = config

    def q_values(self, obs: np.ndarray, comm: np.ndarray) -> Tuple[np.ndarray, neural.ForwardTrace]:
        return neural.lbcc_forward(self.online, obs, comm)

    def sync_target(self):
        self.target = self.online.copy()

    def train_step(self, rng: np.random.Generator) -> Optional[float]:
        """One SGD step on a sampled batch; None until the buffer holds a full batch."""
        if len(self.buffer) < self.config.batch_size:
            return None
        batch = self.buffer.sample(self.config.batch_size, rng)
        return self.fit_batch(batch)

    def fit_batch(self, batch: Sequence[Experience]) -> float:
        obs = np.stack([e.obs for e in batch])
        comm = np.stack([e.comm for e in batch])
        actions = np.array([e.action for e in batch])
        q, trace = neural.lbcc_forward(self.online, obs, comm)
        q_next, _ = neural.lbcc_forward(self.target, np.stack([e.next_obs for e in batch]),
                                        np.stack([e.next_comm for e in batch]))
        targets = np.array([
            td_target(e.reward, None if e.terminal else np.where(e.next_mask, q_next[i], -np.inf),
                      self.config.gamma, e.terminal)
            for i, e in enumerate(batch)
        ])
        rows = np.arange(len(batch))
        predicted = q[rows, actions]
        loss = neural.mse_loss(predicted, targets)
        if not np.isfinite(loss):
            raise TrainingDivergenceError(
                f"Non-finite loss after {self.steps} SGD steps",
                diagnostics={"steps": self.steps, "loss": loss},
                last_finite_state=self.online.copy(),
            )
        d_q = np.zeros_like(q)
        d_q[rows, actions] = neural.mse_grad(predicted, targets)
        grads = neural.lbcc_backward(trace, self.online, d_q)
        self.online = neural.sgd_step(self.online, grads, self.config.lr)
        self.steps += 1
        if self.steps % self.config.target_sync == 0:
            self.sync_target()
        return loss

    def to_dict(self) -> Dict[str, Any]:
        return {
            "online": neural.params_to_dict(self.online),
            "target": neural.params_to_dict(self.target),
            "steps": self.steps,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], config: TrainConfig) -> "Learner":
        learner = cls(neural.params_from_dict(data["online"]), config)
        learner.target = neural.params_from_dict(data["target"])
        learner.steps = int(data["steps"])
        return learner


@dataclass
class AgentPair:
    ws: Learner
    aiv: Learner

    def learner(self, kind: str) -> Learner:
        return self.ws if kind == WS else self.aiv


def build_agents(scenario: Scenario, config: TrainConfig, rng: np.random.Generator) -> List[AgentPair]:
    """Fresh network pairs sized for ``scenario``'s shop."""
    n_pairs = 1 if config.parameter_sharing else (config.n_agents or scenario.n_jobs)
    pairs = []
    for _ in range(n_pairs):
        ws_params = neural.init_params(ws_observation_width(scenario.n_workstations), scenario.n_workstations,
                                       rng, k_slots=config.k_slots)
        aiv_params = neural.init_params(aiv_observation_width(scenario.n_aivs), scenario.n_aivs,
                                        rng, k_slots=config.k_slots)
        pairs.append(AgentPair(Learner(ws_params, config), Learner(aiv_params, config)))
    return pairs


# ----------------------------------------------------------------------
# the policy

@dataclass
class _Pending:
    obs: np.ndarray
    comm: np.ndarray
    action: int
    mask: np.ndarray
    reward: float = 0.0


@dataclass
class _AgentMemory:
    pending: Dict[str, _Pending] = field(default_factory=dict)
    activations: Dict[str, np.ndarray] = field(default_factory=dict)
    last_decision: int = -1


class MadqnPolicy(Policy, SimListener):
    """Epsilon-greedy control by the job agents' networks.

    When ``training`` is set, every decision closes the agent's previous
    transition of the same type, stores it and takes one SGD step.

    Args:
        agents: Network pairs; agent i uses pair ``i mod len(agents)``.
        config: Training hyper-parameters (k, gamma, slots, ...).
        rng: Exploration stream.
        epsilon: Exploration rate.
        training: Store experiences and learn during the run.
    """

    name = "MADQN"

    def __init__(self, agents: List[AgentPair], config: TrainConfig, rng: np.random.Generator,
                 epsilon: float = 0.0, training: bool = False):
        if not agents:
            raise ConfigurationError("At least one agent network pair is required")
        self.agents = agents
        self.config = config
        self.rng = rng
        self.epsilon = epsilon
        self.training = training
        self.losses: Dict[str, List[float]] = {WS: [], AIV: []}
        self.n_decisions = 0
        self._memory: Dict[int, _AgentMemory] = {}
        self._norm: Optional[Normalizer] = None

    def attach(self, state: SimState):
        self._norm = Normalizer.from_scenario(state.scenario)
        self._memory = {job.id: _AgentMemory() for job in state.jobs}
        self.losses = {WS: [], AIV: []}
        self.n_decisions = 0
        state.listeners.append(self)

    def detach(self, state: SimState):
        if self in state.listeners:
            state.listeners.remove(self)

    def pair_for(self, job_id: int) -> AgentPair:
        return self.agents[job_id % len(self.agents)]

    def peer_comm(self, state: SimState, job: Job, kind: str) -> np.ndarray:
        """Comm block of ``job``: the most recently deciding co-active peers first, then by id."""
        params = self.pair_for(job.id).learner(kind).online
        comm = params.empty_comm()
        peers = [p for p in state.active_jobs() if p.id != job.id]
        peers.sort(key=lambda p: (-self._memory[p.id].last_decision, p.id))
        for slot, peer in enumerate(peers[:params.k_slots]):
            acts = self._memory[peer.id].activations.get(kind)
            if acts is not None:
                comm[:, slot, :] = acts[1:params.n_hidden]
        return comm

    def _decide(self, state: SimState, job: Job, kind: str, obs: np.ndarray, feasible: Sequence[int]) -> int:
        learner = self.pair_for(job.id).learner(kind)
        comm = self.peer_comm(state, job, kind)
        q, trace = learner.q_values(obs, comm)
        action = select_action(mask_q_values(q, feasible), self.epsilon, self.rng)
        if action not in feasible:
            raise ContractViolation(f"Selected infeasible action {action} for {job.name}")
        memory = self._memory[job.id]
        memory.activations[kind] = np.stack([a[0] for a in trace.activations])
        memory.last_decision = self.n_decisions
        self.n_decisions += 1
        mask = feasible_mask(len(q), feasible)
        if self.training:
            previous = memory.pending.get(kind)
            if previous is not None:
                learner.buffer.push(Experience(previous.obs, previous.comm, previous.action, previous.reward,
                                               obs, comm, mask, False, previous.mask))
            loss = learner.train_step(self.rng)
            if loss is not None:
                self.losses[kind].append(loss)
        memory.pending[kind] = _Pending(obs, comm, action, mask)
        return action

    def choose_workstation(self, state: SimState, job: Job) -> int:
        obs = build_ws_observation(state, job, self._norm, self.config.k_tardiness)
        return self._decide(state, job, WS, obs, job.current_operation.eligible_workstations)

    def choose_aiv(self, state: SimState, job: Job, request: TransportRequest) -> int:
        obs = build_aiv_observation(state, job, self._norm, request.origin, self.config.k_tardiness)
        return self._decide(state, job, AIV, obs, list(range(len(state.aivs))))

    # engine hooks

    def on_operation_complete(self, state: SimState, job: Job):
        pending = self._memory[job.id].pending.get(WS)
        if pending is not None:
            pending.reward -= current_tardiness(job, state.now, self.config.k_tardiness)

    def on_delivery(self, state: SimState, job: Job, window: TransferWindow):
        pending = self._memory[job.id].pending.get(AIV)
        if pending is not None:
            pending.reward += transfer_reward(state.ledger, window)

    def on_job_complete(self, state: SimState, job: Job):
        bonus = final_reward(job)
        memory = self._memory[job.id]
        for kind, pending in memory.pending.items():
            pending.reward += bonus
            if self.training:
                learner = self.pair_for(job.id).learner(kind)
                learner.buffer.push(Experience(
                    pending.obs, pending.comm, pending.action, pending.reward,
                    np.zeros_like(pending.obs), np.zeros_like(pending.comm),
                    np.ones_like(pending.mask), True, pending.mask,
                ))
        memory.pending.clear()

    def mean_loss(self, kind: str) -> float:
        values = self.losses[kind]
        return float(np.mean(values)) if values else float("nan")
