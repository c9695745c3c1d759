"""
Dense float64 tensors with tape-based reverse-mode differentiation.

Operations are recorded only while a Tape is active and at least one input
requires gradients; otherwise they are plain numpy computations. There is no
implicit broadcasting apart from Tensor-with-scalar arithmetic: use `repeat`
and `reshape` to line shapes up.

    with Tape():
        loss = numkit.sum(numkit.sigmoid(x))
    (grad_x,) = backward(loss, [x])
"""

# Standard library imports
import json
import logging
import struct
import sys
import threading
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

# Third-party imports
import numpy as np
from scipy.special import expit

# Local imports
from utils.error_handling import CheckpointError, NonFiniteValue, NotScalar, ShapeMismatch

Number = Union[int, float]
ArrayLike = Union["Tensor", np.ndarray, Number]

CHECKPOINT_MAGIC = b"NUMKIT"
CHECKPOINT_VERSION = 1
_HEADER_STRUCT = struct.Struct("<HI")

_state = threading.local()


class Tensor:
    """A float64 array, optionally tracked for differentiation."""

    __slots__ = ("data", "requires_grad", "node", "name")

    def __init__(self, data: Any, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.node: Optional["Node"] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


class Node:
    __slots__ = ("output", "parents", "backward_fn", "tape")

    def __init__(self, output: Tensor, parents: Tuple[Tensor, ...], backward_fn: Callable, tape: "Tape"):
        self.output = output
        self.parents = parents
        self.backward_fn = backward_fn
        self.tape = tape


class Tape:
    """Records operations in execution order while active (use as a context manager)."""

    def __init__(self) -> None:
        self.nodes: List[Node] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc: Any) -> None:
        _tape_stack().pop()

    def record(self, node: Node) -> None:
        self.nodes.append(node)


def _tape_stack() -> List[Tape]:
    if not hasattr(_state, "stack"):
        _state.stack = []
    return _state.stack


def active_tape() -> Optional[Tape]:
    stack = _tape_stack()
    return stack[-1] if stack else None


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _is_scalar(value: ArrayLike) -> bool:
    if isinstance(value, Tensor):
        return value.data.ndim == 0
    return np.ndim(value) == 0


def _finish(
    data: np.ndarray, parents: Tuple[Tensor, ...], backward_fn: Callable, op: str
) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue(f"{op} produced a non-finite value")
    out = Tensor(data)
    tape = active_tape()
    if tape is not None and any(parent.requires_grad for parent in parents):
        out.requires_grad = True
        out.node = Node(out, parents, backward_fn, tape)
        tape.record(out.node)
    return out


def _require_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{op}: shapes {a.shape} and {b.shape} differ")


def _reduce_to(grad: np.ndarray, like: Tensor) -> np.ndarray:
    # Scalar operands receive the summed gradient
    if like.data.ndim == 0 and grad.ndim > 0:
        return np.asarray(grad.sum())
    return grad


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if not (_is_scalar(a) or _is_scalar(b)):
        _require_same_shape(a, b, "add")

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return _reduce_to(grad, a), _reduce_to(grad, b)

    return _finish(a.data + b.data, (a, b), backward_fn, "add")


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if not (_is_scalar(a) or _is_scalar(b)):
        _require_same_shape(a, b, "sub")

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return _reduce_to(grad, a), _reduce_to(-grad, b)

    return _finish(a.data - b.data, (a, b), backward_fn, "sub")


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if not (_is_scalar(a) or _is_scalar(b)):
        _require_same_shape(a, b, "mul")

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return _reduce_to(grad * b.data, a), _reduce_to(grad * a.data, b)

    return _finish(a.data * b.data, (a, b), backward_fn, "mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product.

    Supports (n,k)@(k,m), batched (B,n,k)@(B,k,m) and (B,n,k)@(k,m).
    """
    a, b = as_tensor(a), as_tensor(b)
    shapes_ok = (
        (a.ndim == 2 and b.ndim == 2 and a.shape[1] == b.shape[0])
        or (a.ndim == 3 and b.ndim == 3 and a.shape[0] == b.shape[0] and a.shape[2] == b.shape[1])
        or (a.ndim == 3 and b.ndim == 2 and a.shape[2] == b.shape[0])
    )
    if not shapes_ok:
        raise ShapeMismatch(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        if a.ndim == 2:
            return grad @ b.data.T, a.data.T @ grad
        if b.ndim == 3:
            return grad @ b.data.transpose(0, 2, 1), a.data.transpose(0, 2, 1) @ grad
        grad_b = a.data.reshape(-1, a.shape[2]).T @ grad.reshape(-1, grad.shape[2])
        return grad @ b.data.T, grad_b

    return _finish(a.data @ b.data, (a, b), backward_fn, "matmul")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise ShapeMismatch("concat: no tensors given")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for tensor in tensors:
        if tensor.ndim != ndim or any(
            tensor.shape[d] != tensors[0].shape[d] for d in range(ndim) if d != axis
        ):
            raise ShapeMismatch(f"concat: shapes {[t.shape for t in tensors]} on axis {axis}")
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return tuple(
            np.take(grad, np.arange(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(tensors))
        )

    return _finish(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward_fn, "concat")


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    """x[..., start:stop, ...] along one axis."""
    x = as_tensor(x)
    axis = axis % x.ndim
    if not 0 <= start <= stop <= x.shape[axis]:
        raise ShapeMismatch(f"slice: [{start}:{stop}] out of range for axis of size {x.shape[axis]}")
    index = tuple(slice(start, stop) if d == axis else slice(None) for d in range(x.ndim))

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        full = np.zeros_like(x.data)
        full[index] = grad
        return (full,)

    return _finish(x.data[index].copy(), (x,), backward_fn, "slice")


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    try:
        data = x.data.reshape(tuple(shape))
    except ValueError as e:
        raise ShapeMismatch(f"reshape: cannot reshape {x.shape} to {tuple(shape)}") from e

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return (grad.reshape(x.shape),)

    return _finish(data, (x,), backward_fn, "reshape")


def repeat(x: Tensor, n: int, axis: int) -> Tensor:
    """Explicit broadcast: tile an axis of size 1 to size n."""
    x = as_tensor(x)
    axis = axis % x.ndim
    if x.shape[axis] != 1:
        raise ShapeMismatch(f"repeat: axis {axis} has size {x.shape[axis]}, expected 1")

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return (grad.sum(axis=axis, keepdims=True),)

    return _finish(np.repeat(x.data, n, axis=axis), (x,), backward_fn, "repeat")


def embedding_lookup(table: Tensor, ids: Any) -> Tensor:
    """Rows of table selected by integer ids; result shape is ids.shape + (dim,)."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeMismatch(f"embedding_lookup: table must be 2-D, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeMismatch(f"embedding_lookup: id out of range for {table.shape[0]} rows")

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        full = np.zeros_like(table.data)
        np.add.at(full, ids.reshape(-1), grad.reshape(-1, table.shape[1]))
        return (full,)

    return _finish(table.data[ids], (table,), backward_fn, "embedding_lookup")


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = expit(x.data)

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return (grad * out * (1.0 - out),)

    return _finish(out, (x,), backward_fn, "sigmoid")


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return (grad * (1.0 - out * out),)

    return _finish(out, (x,), backward_fn, "tanh")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=axis, keepdims=True)

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return (out * (grad - (grad * out).sum(axis=axis, keepdims=True)),)

    return _finish(out, (x,), backward_fn, "softmax")


def minimum(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Elementwise minimum; the gradient goes to the smaller operand, ties to `a`."""
    a, b = as_tensor(a), as_tensor(b)
    _require_same_shape(a, b, "minimum")
    take_a = a.data <= b.data

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return grad * take_a, grad * ~take_a

    return _finish(np.where(take_a, a.data, b.data), (a, b), backward_fn, "minimum")


def sum(x: Tensor, axis: Optional[int] = None) -> Tensor:  # noqa: A001
    x = as_tensor(x)

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        if axis is None:
            return (np.full_like(x.data, float(grad)),)
        return (np.broadcast_to(np.expand_dims(grad, axis), x.shape).copy(),)

    return _finish(np.asarray(x.data.sum(axis=axis)), (x,), backward_fn, "sum")


def log(x: Tensor) -> Tensor:
    x = as_tensor(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(x.data)

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, ...]:
        return (grad / x.data,)

    return _finish(out, (x,), backward_fn, "log")


def backward(loss: Tensor, leaves: Sequence[Tensor]) -> List[np.ndarray]:
    """
    Reverse-mode gradients of a scalar loss with respect to leaf tensors.

    Walks the recording tape once in reverse execution order. Leaves the loss
    does not depend on receive zeros.

    Raises:
        NotScalar: If the loss has more than one element
    """
    if loss.data.size != 1:
        raise NotScalar(f"backward needs a scalar loss, got shape {loss.shape}")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    if loss.node is not None:
        for node in reversed(loss.node.tape.nodes):
            grad = grads.pop(id(node.output), None)
            if grad is None:
                continue
            for parent, parent_grad in zip(node.parents, node.backward_fn(grad)):
                if not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + parent_grad if key in grads else np.array(parent_grad, dtype=np.float64)

    return [
        grads.get(id(leaf), np.zeros_like(leaf.data)).reshape(leaf.shape) for leaf in leaves
    ]


def finite_diff_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    max_coords: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    Compare backward() with central finite differences.

    Args:
        f: Zero-argument function computing a scalar from the current param values
        params: Leaf tensors (requires_grad=True), perturbed in place
        h: Finite-difference step
        max_coords: Check at most this many randomly chosen coordinates per tensor
        seed: Seed for the coordinate sample

    Returns:
        Maximum relative error |analytic - numeric| / max(|analytic|, |numeric|, 1e-6)
    """
    with Tape():
        loss = f()
    analytic = backward(loss, params)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for param, grad in zip(params, analytic):
        flat = param.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        for coord in coords:
            original = flat[coord]
            flat[coord] = original + h
            plus = f().item()
            flat[coord] = original - h
            minus = f().item()
            flat[coord] = original
            numeric = (plus - minus) / (2 * h)
            exact = grad.reshape(-1)[coord]
            error = abs(exact - numeric) / max(abs(exact), abs(numeric), 1e-6)
            worst = max(worst, error)
    logging.debug(f"Finite-difference check: max relative error {worst:.3e}")
    return worst


def save_checkpoint(path: str, arrays: Dict[str, np.ndarray], metadata: Optional[Dict[str, Any]] = None) -> None:
    """
    Write named arrays to a versioned binary blob.

    Layout: magic, (version, header length) as little-endian uint16/uint32, a
    JSON header with names, shapes, endianness and metadata, then each array's
    float64 values in row-major order and the declared byte order.
    """
    names = sorted(arrays)
    byteorder = sys.byteorder
    header = {
        "endianness": byteorder,
        "metadata": metadata or {},
        "tensors": [{"name": name, "shape": list(np.shape(arrays[name]))} for name in names],
        "version": CHECKPOINT_VERSION,
    }
    header_bytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    dtype = np.dtype("<f8" if byteorder == "little" else ">f8")

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(_HEADER_STRUCT.pack(CHECKPOINT_VERSION, len(header_bytes)))
        handle.write(header_bytes)
        for name in names:
            handle.write(np.ascontiguousarray(arrays[name], dtype=dtype).tobytes(order="C"))
    logging.debug(f"Saved checkpoint with {len(names)} tensors to {path}")


def load_checkpoint(path: str) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """
    Read a blob written by save_checkpoint.

    Returns:
        (arrays by name, metadata)

    Raises:
        CheckpointError: If the file is missing, truncated or of another version
    """
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e

    prefix = len(CHECKPOINT_MAGIC)
    if blob[:prefix] != CHECKPOINT_MAGIC or len(blob) < prefix + _HEADER_STRUCT.size:
        raise CheckpointError(f"{path} is not a numkit checkpoint")
    version, header_len = _HEADER_STRUCT.unpack_from(blob, prefix)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")

    offset = prefix + _HEADER_STRUCT.size
    try:
        header = json.loads(blob[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt header: {e}") from e
    offset += header_len

    dtype = np.dtype("<f8" if header.get("endianness") == "little" else ">f8")
    arrays: Dict[str, np.ndarray] = {}
    for entry in header.get("tensors", []):
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * dtype.itemsize
        if offset + nbytes > len(blob):
            raise CheckpointError(f"{path}: truncated data for tensor {entry['name']}")
        values = np.frombuffer(blob, dtype=dtype, count=count, offset=offset)
        arrays[entry["name"]] = values.astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    return arrays, header.get("metadata", {})
