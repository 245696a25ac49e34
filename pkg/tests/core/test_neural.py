"""
Tests for the Q-network forward and backward passes
"""
import json

import numpy as np
import pytest

from aivsched.core.errors import ContractViolation, ScenarioParseError, TrainingDivergenceError
from aivsched.core.neural import (
    Gradients,
    init_params,
    layer_shapes,
    lbcc_backward,
    lbcc_forward,
    mse_grad,
    mse_loss,
    params_from_dict,
    params_to_dict,
    sgd_step,
    zeros_like_params,
)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def small(rng):
    return init_params(4, 3, rng, k_slots=2, hidden=3, n_hidden=3)


def loss_of(params, x, comm, actions, targets):
    q, _ = lbcc_forward(params, x, comm)
    return mse_loss(q[np.arange(len(actions)), actions], targets)


class TestForward:
    """Tests for lbcc_forward"""

    def test_shapes(self, small, rng):
        q, trace = lbcc_forward(small, rng.random(4))
        assert q.shape == (3,)
        assert len(trace.activations) == 3
        q, _ = lbcc_forward(small, rng.random((5, 4)))
        assert q.shape == (5, 3)

    def test_layer_shapes(self):
        assert layer_shapes(4, 3, k_slots=2, hidden=3, n_hidden=3) == [(3, 4), (3, 9), (3, 9), (3, 3)]
        assert layer_shapes(4, 3, n_hidden=0) == [(3, 4)]

    def test_zero_slots_match_no_comm(self, small, rng):
        x = rng.random((2, 4))
        without, _ = lbcc_forward(small, x)
        with_zeros, _ = lbcc_forward(small, x, small.empty_comm(2))
        assert np.array_equal(without, with_zeros)

    def test_peer_slots_change_output(self, small, rng):
        x = rng.random(4)
        comm = rng.random(small.comm_shape())
        alone, _ = lbcc_forward(small, x)
        together, _ = lbcc_forward(small, x, comm)
        assert not np.allclose(alone, together)

    def test_zero_weights_give_output_bias(self, small, rng):
        for w in small.weights:
            w[:] = 0.0
        q, _ = lbcc_forward(small, rng.random(4), rng.random(small.comm_shape()))
        assert np.array_equal(q, small.biases[-1])

    def test_linear_without_hidden_layers(self, rng):
        params = init_params(4, 2, rng, n_hidden=0)
        x = rng.random(4)
        q, _ = lbcc_forward(params, x)
        assert np.allclose(q, params.weights[0] @ x + params.biases[0])

    def test_input_width_mismatch(self, small, rng):
        with pytest.raises(ContractViolation, match="input width"):
            lbcc_forward(small, rng.random(5))

    def test_comm_shape_mismatch(self, small, rng):
        with pytest.raises(ContractViolation, match="comm shape"):
            lbcc_forward(small, rng.random(4), np.zeros((2, 3, 3)))


class TestBackward:
    """Tests for lbcc_backward against finite differences"""

    def test_gradients_match_finite_differences(self, small, rng):
        x = rng.random((5, 4))
        comm = rng.random((5,) + small.comm_shape())
        actions = rng.integers(0, 3, size=5)
        targets = rng.random(5)

        q, trace = lbcc_forward(small, x, comm)
        rows = np.arange(5)
        d_q = np.zeros_like(q)
        d_q[rows, actions] = mse_grad(q[rows, actions], targets)
        grads = lbcc_backward(trace, small, d_q)

        eps = 1e-6
        for analytic, tensors in ((grads.weights, small.weights), (grads.biases, small.biases)):
            for g, p in zip(analytic, tensors):
                numeric = np.zeros_like(p)
                for idx in np.ndindex(p.shape):
                    original = p[idx]
                    p[idx] = original + eps
                    up = loss_of(small, x, comm, actions, targets)
                    p[idx] = original - eps
                    down = loss_of(small, x, comm, actions, targets)
                    p[idx] = original
                    numeric[idx] = (up - down) / (2 * eps)
                np.testing.assert_allclose(g, numeric, rtol=1e-4, atol=1e-7)

    @pytest.mark.parametrize("d_in, n_actions", [(19, 5), (9, 2)], ids=["workstation-net", "aiv-net"])
    def test_random_directions_at_service_shapes(self, d_in, n_actions):
        """100 seeded draws of parameters, inputs, peer slots and a direction in parameter space"""
        eps = 1e-5
        for seed in range(100):
            draw = np.random.default_rng(seed)
            params = init_params(d_in, n_actions, draw, k_slots=8, hidden=10, n_hidden=5)
            batch = int(draw.integers(1, 6))
            x = draw.normal(size=(batch, d_in))
            comm = draw.uniform(-1.0, 1.0, size=(batch,) + params.comm_shape())
            actions = draw.integers(0, n_actions, size=batch)
            targets = draw.normal(scale=5.0, size=batch)

            q, trace = lbcc_forward(params, x, comm)
            rows = np.arange(batch)
            d_q = np.zeros_like(q)
            d_q[rows, actions] = mse_grad(q[rows, actions], targets)
            grads = lbcc_backward(trace, params, d_q)

            direction = zeros_like_params(params)
            for tensor in direction.weights + direction.biases:
                tensor[...] = draw.normal(size=tensor.shape)
            norm = np.sqrt(sum(float(np.sum(t * t)) for t in direction.weights + direction.biases))
            for tensor in direction.weights + direction.biases:
                tensor /= norm
            analytic = sum(float(np.sum(g * v)) for g, v in zip(grads.weights + grads.biases,
                                                                direction.weights + direction.biases))
            up = loss_of(sgd_step(params, direction, -eps), x, comm, actions, targets)
            down = loss_of(sgd_step(params, direction, eps), x, comm, actions, targets)
            numeric = (up - down) / (2 * eps)
            assert analytic == pytest.approx(numeric, rel=1e-4, abs=1e-7), f"seed {seed}"

            layer = int(draw.integers(0, len(params.weights)))
            idx = tuple(int(draw.integers(0, n)) for n in params.weights[layer].shape)
            original = params.weights[layer][idx]
            params.weights[layer][idx] = original + eps
            up = loss_of(params, x, comm, actions, targets)
            params.weights[layer][idx] = original - eps
            down = loss_of(params, x, comm, actions, targets)
            params.weights[layer][idx] = original
            assert grads.weights[layer][idx] == pytest.approx((up - down) / (2 * eps), rel=1e-4, abs=1e-7), \
                f"seed {seed}, layer {layer + 1}, entry {idx}"

    def test_single_observation(self, small, rng):
        q, trace = lbcc_forward(small, rng.random(4))
        grads = lbcc_backward(trace, small, np.ones_like(q))
        assert [g.shape for g in grads.weights] == [w.shape for w in small.weights]

    def test_mse(self):
        assert mse_loss([1.0, 3.0], [0.0, 1.0]) == pytest.approx(2.5)
        assert np.allclose(mse_grad([1.0, 3.0], [0.0, 1.0]), [1.0, 2.0])
        with pytest.raises(ContractViolation):
            mse_loss([1.0], [1.0, 2.0])


class TestSgd:
    """Tests for sgd_step"""

    def test_step_reduces_loss(self, small, rng):
        x = rng.random((8, 4))
        actions = rng.integers(0, 3, size=8)
        targets = rng.random(8) * 5.0
        before = loss_of(small, x, None, actions, targets)
        q, trace = lbcc_forward(small, x)
        rows = np.arange(8)
        d_q = np.zeros_like(q)
        d_q[rows, actions] = mse_grad(q[rows, actions], targets)
        updated = sgd_step(small, lbcc_backward(trace, small, d_q), 0.01)
        assert loss_of(updated, x, None, actions, targets) < before

    def test_step_does_not_mutate(self, small):
        copy = small.copy()
        grads = zeros_like_params(small)
        grads.weights[0][:] = 1.0
        sgd_step(small, grads, 0.1)
        assert small.equals(copy)

    def test_non_finite_gradient_raises(self, small):
        grads = zeros_like_params(small)
        grads.biases[1][0] = np.nan
        with pytest.raises(TrainingDivergenceError) as excinfo:
            sgd_step(small, grads, 0.1)
        assert excinfo.value.last_finite_state.equals(small)
        assert "layer 2 bias" in excinfo.value.diagnostics["non_finite"]


class TestSerialisation:
    """Tests for parameter documents"""

    def test_json_round_trip(self, small):
        restored = params_from_dict(json.loads(json.dumps(params_to_dict(small))))
        assert restored.equals(small)
        assert (restored.k_slots, restored.hidden, restored.n_hidden) == (2, 3, 3)

    def test_shape_mismatch_rejected(self, small):
        data = params_to_dict(small)
        data["d_in"] = 7
        with pytest.raises(ScenarioParseError, match="shapes"):
            params_from_dict(data)

    def test_missing_key_rejected(self, small):
        data = params_to_dict(small)
        del data["layers"]
        with pytest.raises(ScenarioParseError):
            params_from_dict(data)


def test_gradients_container(small):
    grads = zeros_like_params(small)
    assert isinstance(grads, Gradients)
    assert all(not g.any() for g in grads.weights)
