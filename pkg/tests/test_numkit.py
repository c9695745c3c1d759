"""
Tests for numkit tensors, reverse-mode gradients and checkpoints.
"""

# Third-party imports
import numpy as np
import pytest

# Local imports
import core.numkit as nk
from core.numkit import Tape, Tensor, backward, finite_diff_check, load_checkpoint, save_checkpoint
from utils.error_handling import CheckpointError, NonFiniteValue, NotScalar, ShapeMismatch


def leaf(shape, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return Tensor(rng.normal(scale=scale, size=shape), requires_grad=True)


def test_square_sum_gradient():
    x = Tensor([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
    with Tape():
        loss = nk.sum(x * x)
    (grad,) = backward(loss, [x])
    assert np.allclose(grad, 2 * x.data)


def test_operations_outside_a_tape_are_not_recorded():
    x = leaf((2, 2))
    y = nk.sigmoid(x)
    assert y.node is None
    assert not y.requires_grad


def test_reused_tensor_accumulates_gradient():
    x = Tensor(3.0, requires_grad=True)
    with Tape():
        loss = x * x + x * 2.0 + 1.0
    (grad,) = backward(loss, [x])
    assert float(grad) == pytest.approx(8.0)


def test_unreached_leaf_gets_zeros():
    x, unused = leaf((3,)), leaf((2, 2), seed=1)
    with Tape():
        loss = nk.sum(x)
    grad_x, grad_unused = backward(loss, [x, unused])
    assert np.allclose(grad_x, 1.0)
    assert np.array_equal(grad_unused, np.zeros((2, 2)))


def test_backward_needs_scalar():
    x = leaf((3,))
    with Tape():
        y = x * 2.0
    with pytest.raises(NotScalar):
        backward(y, [x])


@pytest.mark.parametrize(
    "shapes",
    [((3, 4), (4, 2)), ((2, 3, 4), (2, 4, 5)), ((2, 3, 4), (4, 5))],
)
def test_matmul_gradients(shapes):
    a, b = leaf(shapes[0], seed=1), leaf(shapes[1], seed=2)
    error = finite_diff_check(lambda: nk.sum(nk.tanh(a @ b)), [a, b])
    assert error < 1e-6


def test_matmul_rejects_incompatible_shapes():
    with pytest.raises(ShapeMismatch):
        leaf((2, 3)) @ leaf((2, 3))


def test_elementwise_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        leaf((2, 3)) + leaf((3, 2))
    with pytest.raises(ShapeMismatch):
        nk.minimum(leaf((2,)), leaf((3,)))


def test_scalar_operands_broadcast():
    x = leaf((2, 3))
    s = Tensor(0.5, requires_grad=True)
    with Tape():
        loss = nk.sum(x * s - 1.0)
    grad_x, grad_s = backward(loss, [x, s])
    assert np.allclose(grad_x, 0.5)
    assert float(grad_s) == pytest.approx(float(x.data.sum()))


def test_softmax_sigmoid_log_gradients():
    x = leaf((3, 4), seed=3)
    weights = Tensor(np.random.default_rng(4).normal(size=(3, 4)))

    def loss():
        probs = nk.softmax(x, axis=1)
        gates = nk.sigmoid(x)
        return nk.sum(nk.log(probs) * weights + gates * gates)

    assert finite_diff_check(loss, [x]) < 1e-6


def test_shape_operations_gradients():
    x = leaf((2, 1, 3), seed=5)
    y = leaf((2, 4, 3), seed=6)

    def loss():
        tiled = nk.repeat(x, 4, axis=1)
        joined = nk.concat([tiled, y], axis=2)
        part = nk.slice_axis(joined, 2, 1, 5)
        flat = nk.reshape(part, (8, 4))
        return nk.sum(nk.tanh(flat) * flat)

    assert finite_diff_check(loss, [x, y]) < 1e-6


def test_sum_over_axis():
    x = leaf((2, 3), seed=7)
    weights = Tensor([1.0, -2.0])
    with Tape():
        loss = nk.sum(nk.sum(x, axis=1) * weights)
    (grad,) = backward(loss, [x])
    assert np.allclose(grad, [[1.0, 1.0, 1.0], [-2.0, -2.0, -2.0]])


def test_embedding_lookup_accumulates_repeated_ids():
    table = leaf((4, 2), seed=8)
    with Tape():
        loss = nk.sum(nk.embedding_lookup(table, [[1, 1], [3, 0]]))
    (grad,) = backward(loss, [table])
    assert np.allclose(grad, [[1, 1], [2, 2], [0, 0], [1, 1]])
    with pytest.raises(ShapeMismatch):
        nk.embedding_lookup(table, [4])


def test_minimum_sends_ties_to_first_operand():
    a = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    b = Tensor([1.0, 5.0, 0.0], requires_grad=True)
    with Tape():
        loss = nk.sum(nk.minimum(a, b))
    grad_a, grad_b = backward(loss, [a, b])
    assert np.array_equal(grad_a, [1.0, 1.0, 0.0])
    assert np.array_equal(grad_b, [0.0, 0.0, 1.0])


def test_non_finite_values_are_rejected():
    with pytest.raises(NonFiniteValue):
        nk.log(Tensor([0.0, 1.0]))


def test_repeat_needs_unit_axis():
    with pytest.raises(ShapeMismatch):
        nk.repeat(leaf((2, 2)), 3, axis=1)


def test_checkpoint_round_trip(tmp_path):
    arrays = {"w": np.arange(6.0).reshape(2, 3), "b": np.array([0.5]), "s": np.array(2.0)}
    path = tmp_path / "model.bin"
    save_checkpoint(str(path), arrays, {"kind": "test", "size": 3})
    loaded, metadata = load_checkpoint(str(path))
    assert metadata == {"kind": "test", "size": 3}
    assert sorted(loaded) == ["b", "s", "w"]
    for name, array in arrays.items():
        assert loaded[name].shape == array.shape
        assert np.array_equal(loaded[name], array)


def test_checkpoint_is_byte_stable(tmp_path):
    arrays = {"w": np.ones((2, 2)), "a": np.zeros(3)}
    first, second = tmp_path / "a.bin", tmp_path / "b.bin"
    save_checkpoint(str(first), arrays)
    save_checkpoint(str(second), dict(reversed(list(arrays.items()))))
    assert first.read_bytes() == second.read_bytes()


def test_damaged_checkpoints_are_rejected(tmp_path):
    path = tmp_path / "model.bin"
    save_checkpoint(str(path), {"w": np.ones((3, 3))})
    blob = path.read_bytes()

    truncated = tmp_path / "truncated.bin"
    truncated.write_bytes(blob[:-8])
    trailing = tmp_path / "trailing.bin"
    trailing.write_bytes(blob + b"\0")
    foreign = tmp_path / "foreign.bin"
    foreign.write_bytes(b"PK" + blob[2:])

    for damaged in (truncated, trailing, foreign, tmp_path / "missing.bin"):
        with pytest.raises(CheckpointError):
            load_checkpoint(str(damaged))
