"""
Small fully connected Q-network with a layer-based communication channel.

Layer 1 maps the observation to ``hidden`` Tanh units. Every further hidden
layer reads its own input concatenated with K peer slots of width
``hidden`` (the activations other agents produced at the same layer); absent
peers are zero slots. The output layer is affine, one Q-value per action.

All arrays are batch-first: an observation batch is (B, d_in), a comm batch
is (B, n_hidden - 1, K, hidden). Backpropagation treats peer slots as
constant inputs.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .errors import ContractViolation, ScenarioParseError, TrainingDivergenceError

CHECKPOINT_VERSION = 1
DEFAULT_HIDDEN = 10
DEFAULT_N_HIDDEN = 5
DEFAULT_K_SLOTS = 8


@dataclass
class NetworkParams:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    d_in: int
    n_actions: int
    k_slots: int = DEFAULT_K_SLOTS
    hidden: int = DEFAULT_HIDDEN
    n_hidden: int = DEFAULT_N_HIDDEN

    @property
    def n_comm_layers(self) -> int:
        return max(0, self.n_hidden - 1)

    def comm_shape(self) -> Tuple[int, int, int]:
        return (self.n_comm_layers, self.k_slots, self.hidden)

    def empty_comm(self, batch: Optional[int] = None) -> np.ndarray:
        shape = self.comm_shape() if batch is None else (batch,) + self.comm_shape()
        return np.zeros(shape)

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            d_in=self.d_in,
            n_actions=self.n_actions,
            k_slots=self.k_slots,
            hidden=self.hidden,
            n_hidden=self.n_hidden,
        )

    def equals(self, other: "NetworkParams") -> bool:
        return (len(self.weights) == len(other.weights)
                and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
                and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases)))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.weights + self.biases)


@dataclass
class ForwardTrace:
    """Everything the backward pass needs: per-layer inputs and activations."""
    inputs: List[np.ndarray]  # the (concatenated) input each layer saw
    activations: List[np.ndarray]  # tanh outputs of the hidden layers
    comm: np.ndarray
    squeeze: bool = False


@dataclass
class Gradients:
    weights: List[np.ndarray]
    biases: List[np.ndarray]


def layer_shapes(d_in: int, n_actions: int, k_slots: int = DEFAULT_K_SLOTS, hidden: int = DEFAULT_HIDDEN,
                 n_hidden: int = DEFAULT_N_HIDDEN) -> List[Tuple[int, int]]:
    """(out, in) shape of every weight matrix, input layer first."""
    shapes = []
    fan_in = d_in
    for layer in range(n_hidden):
        if layer > 0:
            fan_in = hidden + k_slots * hidden
        shapes.append((hidden, fan_in))
    shapes.append((n_actions, hidden if n_hidden else d_in))
    return shapes


def init_params(d_in: int, n_actions: int, rng: np.random.Generator, k_slots: int = DEFAULT_K_SLOTS,
                hidden: int = DEFAULT_HIDDEN, n_hidden: int = DEFAULT_N_HIDDEN) -> NetworkParams:
    """Uniform initialisation in [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    weights, biases = [], []
    for out_dim, fan_in in layer_shapes(d_in, n_actions, k_slots, hidden, n_hidden):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(out_dim, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=out_dim))
    return NetworkParams(weights, biases, d_in, n_actions, k_slots, hidden, n_hidden)


def zeros_like_params(params: NetworkParams) -> Gradients:
    return Gradients([np.zeros_like(w) for w in params.weights], [np.zeros_like(b) for b in params.biases])


def lbcc_forward(params: NetworkParams, x: np.ndarray, comm: Optional[np.ndarray] = None) -> Tuple[np.ndarray, ForwardTrace]:
    """Q-values for one observation or a batch.

    Args:
        params: Network parameters.
        x: (d_in,) or (B, d_in) observations.
        comm: (n_hidden-1, K, hidden) or (B, n_hidden-1, K, hidden) peer
            activations; zeros when omitted.

    Returns:
        (q_values, trace); q_values is (n_actions,) or (B, n_actions).

    Raises:
        ContractViolation: On any shape mismatch.
    """
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.d_in:
        raise ContractViolation(f"Expected input width {params.d_in}, got shape {x.shape}")
    batch = x.shape[0]
    if comm is None:
        comm = params.empty_comm(batch)
    else:
        comm = np.asarray(comm, dtype=float)
        if comm.ndim == 3:
            comm = comm[None]
        if comm.shape != (batch,) + params.comm_shape():
            raise ContractViolation(f"Expected comm shape {(batch,) + params.comm_shape()}, got {comm.shape}")

    inputs, activations = [], []
    h = x
    for layer in range(params.n_hidden):
        layer_in = h if layer == 0 else np.concatenate([h, comm[:, layer - 1].reshape(batch, -1)], axis=1)
        h = np.tanh(layer_in @ params.weights[layer].T + params.biases[layer])
        inputs.append(layer_in)
        activations.append(h)
    inputs.append(h)
    q = h @ params.weights[-1].T + params.biases[-1]
    trace = ForwardTrace(inputs=inputs, activations=activations, comm=comm, squeeze=squeeze)
    return (q[0] if squeeze else q), trace


def lbcc_backward(trace: ForwardTrace, params: NetworkParams, d_output: np.ndarray) -> Gradients:
    """Gradients of the loss w.r.t. every weight and bias.

    Args:
        trace: Trace of the matching forward pass.
        params: The parameters used in that pass.
        d_output: dLoss/dQ, same shape as the forward output.
    """
    delta = np.asarray(d_output, dtype=float)
    if delta.ndim == 1:
        delta = delta[None, :]
    grads_w: List[np.ndarray] = [None] * len(params.weights)
    grads_b: List[np.ndarray] = [None] * len(params.biases)

    grads_w[-1] = delta.T @ trace.inputs[-1]
    grads_b[-1] = delta.sum(axis=0)
    d_h = delta @ params.weights[-1]
    for layer in reversed(range(params.n_hidden)):
        h = trace.activations[layer]
        d_z = d_h * (1.0 - h * h)
        grads_w[layer] = d_z.T @ trace.inputs[layer]
        grads_b[layer] = d_z.sum(axis=0)
        # peer slots are constants: keep only the own-input part
        d_h = (d_z @ params.weights[layer])[:, :params.hidden] if layer > 0 else None
    return Gradients(grads_w, grads_b)


def sgd_step(params: NetworkParams, grads: Gradients, lr: float) -> NetworkParams:
    """Return ``p - lr * g`` for every parameter.

    Raises:
        TrainingDivergenceError: If any gradient entry is non-finite; the
            untouched parameters are attached as the last finite state.
    """
    bad = [
        f"layer {i + 1} {kind}"
        for i, (gw, gb) in enumerate(zip(grads.weights, grads.biases))
        for kind, g in (("weights", gw), ("bias", gb))
        if not np.all(np.isfinite(g))
    ]
    if bad:
        raise TrainingDivergenceError(
            f"Non-finite gradient in {', '.join(bad)}",
            diagnostics={"non_finite": bad, "lr": lr},
            last_finite_state=params.copy(),
        )
    updated = params.copy()
    updated.weights = [w - lr * g for w, g in zip(params.weights, grads.weights)]
    updated.biases = [b - lr * g for b, g in zip(params.biases, grads.biases)]
    return updated


def mse_loss(predicted: np.ndarray, target: np.ndarray) -> float:
    predicted, target = np.asarray(predicted, dtype=float), np.asarray(target, dtype=float)
    if predicted.shape != target.shape:
        raise ContractViolation(f"Loss operands differ in shape: {predicted.shape} vs {target.shape}")
    return float(np.mean((predicted - target) ** 2))


def mse_grad(predicted: np.ndarray, target: np.ndarray) -> np.ndarray:
    """dMSE/dpredicted = 2 (predicted - target) / N."""
    predicted, target = np.asarray(predicted, dtype=float), np.asarray(target, dtype=float)
    return 2.0 * (predicted - target) / predicted.size


def params_to_dict(params: NetworkParams) -> Dict[str, Any]:
    return {
        "version": CHECKPOINT_VERSION,
        "d_in": params.d_in,
        "n_actions": params.n_actions,
        "k_slots": params.k_slots,
        "hidden": params.hidden,
        "n_hidden": params.n_hidden,
        "layers": [
            {"shape": list(w.shape), "weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(params.weights, params.biases)
        ],
    }


def params_from_dict(data: Dict[str, Any]) -> NetworkParams:
    try:
        if data["version"] != CHECKPOINT_VERSION:
            raise ScenarioParseError(f"Unsupported network version {data['version']}", field="version")
        params = NetworkParams(
            weights=[np.array(layer["weights"], dtype=float).reshape(layer["shape"]) for layer in data["layers"]],
            biases=[np.array(layer["bias"], dtype=float) for layer in data["layers"]],
            d_in=int(data["d_in"]),
            n_actions=int(data["n_actions"]),
            k_slots=int(data["k_slots"]),
            hidden=int(data["hidden"]),
            n_hidden=int(data["n_hidden"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioParseError(f"Malformed network parameters: {e}", field="layers") from e
    expected = layer_shapes(params.d_in, params.n_actions, params.k_slots, params.hidden, params.n_hidden)
    if [tuple(w.shape) for w in params.weights] != expected:
        raise ScenarioParseError("Layer shapes do not match the declared architecture", field="layers")
    return params
