"""
Tests for the optimizer, parallel helpers and report formatters.
"""

# Third-party imports
import numpy as np
import pytest

# Local imports
from core.numkit import Tensor
from core.optim import Adam, clip_by_global_norm
from utils.formatting import format_count, format_duration, format_error_type, format_pct, format_score
from utils.parallel import iter_batches, parallel_map, parallel_starmap


def test_clip_by_global_norm_scales_jointly():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    norm = clip_by_global_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    assert float(grads["a"][0]) == pytest.approx(0.6)
    assert float(grads["b"][0]) == pytest.approx(0.8)


def test_clip_by_global_norm_without_limit_leaves_grads():
    grads = {"a": np.array([3.0, 4.0])}
    assert clip_by_global_norm(grads, None) == pytest.approx(5.0)
    np.testing.assert_allclose(grads["a"], [3.0, 4.0])


def test_adam_first_step_moves_by_learning_rate():
    x = Tensor([1.0, -2.0], requires_grad=True)
    optimizer = Adam({"x": x}, learning_rate=0.1)
    optimizer.step({"x": 2 * x.data})
    np.testing.assert_allclose(x.data, [0.9, -1.9], atol=1e-6)


def test_adam_descends_quadratic():
    x = Tensor([1.0, -2.0], requires_grad=True)
    optimizer = Adam({"x": x}, learning_rate=0.1)
    for _ in range(200):
        optimizer.step({"x": 2 * x.data})
    assert float(np.linalg.norm(x.data)) < 0.5


def test_iter_batches():
    assert [list(batch) for batch in iter_batches([1, 2, 3, 4, 5], 2)] == [[1, 2], [3, 4], [5]]
    with pytest.raises(ValueError):
        list(iter_batches([1], 0))


@pytest.mark.parametrize("n_jobs", [1, 2])
def test_parallel_map_preserves_order(n_jobs):
    assert parallel_map(str.upper, ["a", "b", "c", "d"], n_jobs=n_jobs) == ["A", "B", "C", "D"]
    assert parallel_starmap(pow, [(2, 3), (3, 2), (5, 1)], n_jobs=n_jobs) == [8, 9, 5]


def test_formatters():
    assert format_pct(0.254) == "25.40%"
    assert format_pct(None) == "N/A"
    assert format_score(0.5, undefined=True) == "0.5000 (undefined)"
    assert format_count(12345) == "12,345"
    assert format_duration(0.25) == "250 ms"
    assert format_duration(90) == "1 min 30 s"
    assert format_error_type("run_on") == "Run-on"
    assert format_error_type("odd_kind") == "Odd kind"
