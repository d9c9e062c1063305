"""Tensor con diferenciación automática en modo reverso.

Cada operación registra un ``Node`` con sus padres y una función ``backward``
escrita a su vez con operaciones de ``Tensor``. Por eso, si el barrido reverso
se ejecuta con el grafo habilitado (``create_graph=True``), el propio cálculo
del gradiente queda registrado y se puede derivar de nuevo (MAML exacto de
segundo orden).

El estado global es por hilo (modo sin gradiente, chequeo de finitud): cada
tarea puede construir y barrer su grafo en un hilo propio.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from core.exceptions import NonFiniteError, ShapeError

__all__ = [
    "Tensor",
    "Node",
    "Tape",
    "no_grad",
    "enable_grad",
    "debug_finite",
    "is_grad_enabled",
    "as_tensor",
    "concat",
    "stack",
    "pad",
    "unfold2d",
    "fold2d",
]

_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


def _finite_check_enabled() -> bool:
    flag = getattr(_state, "check_finite", None)
    if flag is not None:
        return flag
    try:
        return bool(getattr(settings, "METASELD_DEBUG_FINITE", False))
    except ImproperlyConfigured:
        return False


@contextmanager
def no_grad():
    """No registra operaciones dentro del bloque."""
    prev = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = prev


@contextmanager
def enable_grad():
    prev = is_grad_enabled()
    _state.grad_enabled = True
    try:
        yield
    finally:
        _state.grad_enabled = prev


@contextmanager
def debug_finite(enabled: bool = True):
    """Activa (o desactiva) el chequeo NaN/Inf tras cada operación."""
    prev = getattr(_state, "check_finite", None)
    _state.check_finite = enabled
    try:
        yield
    finally:
        _state.check_finite = prev


class Node:
    """Operación registrada: padres y regla de retropropagación."""

    __slots__ = ("op", "parents", "backward")

    def __init__(self, op: str, parents: Tuple["Tensor", ...], backward: Callable):
        self.op = op
        self.parents = parents
        self.backward = backward

    def __repr__(self) -> str:
        return f"Node({self.op})"


class Tensor:
    """Arreglo de numpy con historia de operaciones."""

    __slots__ = ("data", "requires_grad", "node", "name", "__weakref__")

    __array_priority__ = 100
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: str = ""):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind not in "f":
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.node: Optional[Node] = None
        self.name = name

    # ---------------- propiedades ----------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def __repr__(self) -> str:
        op = f", op={self.node.op}" if self.node else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{op})"

    def __len__(self) -> int:
        return len(self.data)

    # ---------------- aritmética ----------------
    def __add__(self, other):
        return add(self, as_tensor(other, like=self))

    def __radd__(self, other):
        return add(as_tensor(other, like=self), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other, like=self))

    def __rsub__(self, other):
        return sub(as_tensor(other, like=self), self)

    def __mul__(self, other):
        return mul(self, as_tensor(other, like=self))

    def __rmul__(self, other):
        return mul(as_tensor(other, like=self), self)

    def __truediv__(self, other):
        return div(self, as_tensor(other, like=self))

    def __rtruediv__(self, other):
        return div(as_tensor(other, like=self), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent: float):
        if isinstance(exponent, Tensor):
            raise TypeError("pow: el exponente debe ser un escalar")
        return power(self, float(exponent))

    def __matmul__(self, other):
        return matmul(self, as_tensor(other, like=self))

    def __getitem__(self, index):
        return getitem(self, index)

    # ---------------- métodos ----------------
    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        return transpose(self, axes)

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def exp(self) -> "Tensor":
        return exp(self)

    def log(self) -> "Tensor":
        return log(self)

    def tanh(self) -> "Tensor":
        return tanh(self)

    def sigmoid(self) -> "Tensor":
        return sigmoid(self)

    def relu(self) -> "Tensor":
        return relu(self)


def as_tensor(value, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype))


def _make(op: str, data: np.ndarray, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    out = Tensor(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.node = Node(op, tuple(parents), backward)
    if _finite_check_enabled() and not np.all(np.isfinite(out.data)):
        raise NonFiniteError(f"{op}: resultado no finito (forma {out.shape})")
    return out


# ---------------------------------------------------------------------------
# Reducciones de broadcasting
# ---------------------------------------------------------------------------
def _reduce_axes(from_shape: Tuple[int, ...], to_shape: Tuple[int, ...]):
    lead = len(from_shape) - len(to_shape)
    if lead < 0:
        raise ShapeError("sum_to", from_shape, to_shape)
    axes = list(range(lead))
    for i, dim in enumerate(to_shape):
        if dim == 1 and from_shape[lead + i] != 1:
            axes.append(lead + i)
    return tuple(axes), lead


def sum_to(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    """Suma ``a`` hasta ``shape`` (adjunto de ``broadcast_to``)."""
    shape = tuple(shape)
    if a.shape == shape:
        return a
    axes, lead = _reduce_axes(a.shape, shape)
    data = a.data.sum(axis=axes, keepdims=True) if axes else a.data
    if lead:
        data = data.reshape(data.shape[lead:])
    data = data.reshape(shape)

    def backward(g):
        return (broadcast_to(g, a.shape),)

    return _make("sum_to", data, (a,), backward)


def broadcast_to(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    shape = tuple(shape)
    if a.shape == shape:
        return a
    try:
        data = np.broadcast_to(a.data, shape).copy()
    except ValueError as exc:
        raise ShapeError("broadcast_to", a.shape, shape) from exc

    def backward(g):
        return (sum_to(g, a.shape),)

    return _make("broadcast_to", data, (a,), backward)


def _broadcast_shape(op: str, a: Tensor, b: Tensor):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(op, a.shape, b.shape) from exc


# ---------------------------------------------------------------------------
# Primitivas elementales
# ---------------------------------------------------------------------------
def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("add", a, b)

    def backward(g):
        return sum_to(g, a.shape), sum_to(g, b.shape)

    return _make("add", a.data + b.data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("sub", a, b)

    def backward(g):
        return sum_to(g, a.shape), sum_to(neg(g), b.shape)

    return _make("sub", a.data - b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("mul", a, b)

    def backward(g):
        return sum_to(mul(g, b), a.shape), sum_to(mul(g, a), b.shape)

    return _make("mul", a.data * b.data, (a, b), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("div", a, b)

    def backward(g):
        ga = sum_to(div(g, b), a.shape)
        gb = sum_to(neg(div(mul(g, a), mul(b, b))), b.shape)
        return ga, gb

    return _make("div", a.data / b.data, (a, b), backward)


def neg(a: Tensor) -> Tensor:
    def backward(g):
        return (neg(g),)

    return _make("neg", -a.data, (a,), backward)


def power(a: Tensor, p: float) -> Tensor:
    def backward(g):
        return (mul(g, mul(as_tensor(p, like=a), power(a, p - 1.0))),)

    return _make("pow", np.power(a.data, p), (a,), backward)


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)
    holder: List[Tensor] = []

    def backward(g):
        return (mul(g, holder[0]),)

    out = _make("exp", out_data, (a,), backward)
    holder.append(out)
    return out


def log(a: Tensor) -> Tensor:
    def backward(g):
        return (div(g, a),)

    return _make("log", np.log(a.data), (a,), backward)


def tanh(a: Tensor) -> Tensor:
    holder: List[Tensor] = []

    def backward(g):
        y = holder[0]
        return (mul(g, sub(as_tensor(1.0, like=y), mul(y, y))),)

    out = _make("tanh", np.tanh(a.data), (a,), backward)
    holder.append(out)
    return out


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # forma estable para argumentos grandes en valor absoluto
    e = np.exp(-np.abs(x))
    data = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)
    holder: List[Tensor] = []

    def backward(g):
        y = holder[0]
        return (mul(g, mul(y, sub(as_tensor(1.0, like=y), y))),)

    out = _make("sigmoid", data, (a,), backward)
    holder.append(out)
    return out


def relu(a: Tensor) -> Tensor:
    mask = (a.data > 0).astype(a.dtype)

    def backward(g):
        return (mul(g, Tensor(mask)),)

    return _make("relu", a.data * mask, (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul", a.shape, b.shape, "se requieren al menos 2 dimensiones")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", a.shape, b.shape)
    try:
        data = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ShapeError("matmul", a.shape, b.shape) from exc

    def backward(g):
        ga = matmul(g, _swap_last(b))
        gb = matmul(_swap_last(a), g)
        return sum_to(ga, a.shape), sum_to(gb, b.shape)

    return _make("matmul", data, (a, b), backward)


def _swap_last(a: Tensor) -> Tensor:
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, tuple(axes))


# ---------------------------------------------------------------------------
# Reducciones y forma
# ---------------------------------------------------------------------------
def _norm_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(ax % ndim for ax in axis))


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _norm_axes(axis, a.ndim)
    data = a.data.sum(axis=axes, keepdims=keepdims)
    kept_shape = tuple(1 if i in axes else d for i, d in enumerate(a.shape))

    def backward(g):
        return (broadcast_to(reshape(g, kept_shape), a.shape),)

    return _make("sum", np.asarray(data), (a,), backward)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _norm_axes(axis, a.ndim)
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    return div(tsum(a, axis=axes, keepdims=keepdims), as_tensor(float(count), like=a))


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    try:
        data = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError("reshape", a.shape, shape) from exc

    def backward(g):
        return (reshape(g, a.shape),)

    return _make("reshape", data, (a,), backward)


def transpose(a: Tensor, axes: Tuple[int, ...]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (transpose(g, inverse),)

    return _make("transpose", np.transpose(a.data, axes), (a,), backward)


def getitem(a: Tensor, index) -> Tensor:
    data = a.data[index]

    def backward(g):
        return (scatter(g, index, a.shape),)

    return _make("getitem", np.array(data, copy=True), (a,), backward)


def scatter(g: Tensor, index, shape: Tuple[int, ...]) -> Tensor:
    """Coloca ``g`` en ``index`` de un tensor de ceros (adjunto de getitem)."""
    data = np.zeros(shape, dtype=g.dtype)
    np.add.at(data, index, g.data)

    def backward(gg):
        return (getitem(gg, index),)

    return _make("scatter", data, (g,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    axis = axis % tensors[0].ndim
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError("concat", tensors[0].shape, tensors[-1].shape) from exc
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        grads = []
        for i in range(len(tensors)):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(int(bounds[i]), int(bounds[i + 1]))
            grads.append(getitem(g, tuple(idx)))
        return tuple(grads)

    return _make("concat", data, tuple(tensors), backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    try:
        data = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError("stack", tensors[0].shape, tensors[-1].shape) from exc
    axis = axis % data.ndim

    def backward(g):
        grads = []
        for i in range(len(tensors)):
            idx = [slice(None)] * g.ndim
            idx[axis] = i
            grads.append(getitem(g, tuple(idx)))
        return tuple(grads)

    return _make("stack", data, tuple(tensors), backward)


def pad(a: Tensor, widths: Sequence[Tuple[int, int]]) -> Tensor:
    widths = tuple((int(lo), int(hi)) for lo, hi in widths)
    data = np.pad(a.data, widths)
    index = tuple(slice(lo, lo + dim) for (lo, _), dim in zip(widths, a.shape))

    def backward(g):
        return (getitem(g, index),)

    return _make("pad", data, (a,), backward)


def unfold2d(x: Tensor, kh: int, kw: int) -> Tensor:
    """im2col: [B, C, H, W] -> [B, H-kh+1, W-kw+1, C*kh*kw] (orden c, i, j)."""
    if x.ndim != 4:
        raise ShapeError("unfold2d", x.shape, detail="se espera [B, C, H, W]")
    b, c, h, w = x.shape
    if h < kh or w < kw:
        raise ShapeError("unfold2d", x.shape, (kh, kw), "núcleo mayor que la entrada")
    win = np.lib.stride_tricks.sliding_window_view(x.data, (kh, kw), axis=(2, 3))
    data = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(
        b, h - kh + 1, w - kw + 1, c * kh * kw
    )

    def backward(g):
        return (fold2d(g, x.shape, kh, kw),)

    return _make("unfold2d", data, (x,), backward)


def fold2d(cols: Tensor, shape: Tuple[int, int, int, int], kh: int, kw: int) -> Tensor:
    """col2im, adjunto lineal de ``unfold2d``."""
    b, c, h, w = shape
    oh, ow = h - kh + 1, w - kw + 1
    blocks = cols.data.reshape(b, oh, ow, c, kh, kw)
    data = np.zeros(shape, dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            data[:, :, i:i + oh, j:j + ow] += blocks[:, :, :, :, i, j].transpose(0, 3, 1, 2)

    def backward(g):
        return (unfold2d(g, kh, kw),)

    return _make("fold2d", data, (cols,), backward)


# ---------------------------------------------------------------------------
# Barrido reverso
# ---------------------------------------------------------------------------
class Tape:
    """Orden topológico del grafo que cuelga de ``output``.

    ``nodes`` contiene los tensores intermedios en orden topológico; el barrido
    reverso los visita estrictamente al revés. Sin ``retain_graph`` los nodos
    se sueltan al terminar para liberar memoria.
    """

    def __init__(self, output: Tensor, retain_graph: bool = False):
        self.output = output
        self.retain_graph = retain_graph
        self.nodes: List[Tensor] = self._topological(output)

    @staticmethod
    def _topological(output: Tensor) -> List[Tensor]:
        order: List[Tensor] = []
        visited = set()
        stack_: List[Tuple[Tensor, bool]] = [(output, False)]
        while stack_:
            tensor, expanded = stack_.pop()
            if expanded:
                order.append(tensor)
                continue
            if id(tensor) in visited or tensor.node is None:
                continue
            visited.add(id(tensor))
            stack_.append((tensor, True))
            for parent in tensor.node.parents:
                if parent.node is not None and id(parent) not in visited:
                    stack_.append((parent, False))
        return order

    def backward(self, seed: Tensor, create_graph: bool = False) -> dict:
        """Devuelve ``{id(tensor): (tensor, grad)}`` para todo tensor alcanzado."""
        grads = {id(self.output): (self.output, seed)}
        ctx = enable_grad() if create_graph else no_grad()
        with ctx:
            for tensor in reversed(self.nodes):
                entry = grads.get(id(tensor))
                if entry is None:
                    continue
                g = entry[1]
                parent_grads = tensor.node.backward(g)
                for parent, pg in zip(tensor.node.parents, parent_grads):
                    if pg is None or not parent.requires_grad:
                        continue
                    prev = grads.get(id(parent))
                    grads[id(parent)] = (parent, pg if prev is None else add(prev[1], pg))
        if not (self.retain_graph or create_graph):
            for tensor in self.nodes:
                tensor.node = None
        return grads


def backward_grads(
    output: Tensor,
    inputs: Iterable[Tensor],
    create_graph: bool = False,
    retain_graph: Optional[bool] = None,
) -> List[Tensor]:
    """Gradientes de un escalar respecto de ``inputs`` (ceros si no conectan)."""
    if output.size != 1:
        raise ShapeError("grad", output.shape, detail="la pérdida debe ser escalar")
    inputs = list(inputs)
    retain = create_graph if retain_graph is None else retain_graph
    tape = Tape(output, retain_graph=retain)
    seed = Tensor(np.ones(output.shape, dtype=output.dtype))
    table = tape.backward(seed, create_graph=create_graph)
    result = []
    for t in inputs:
        entry = table.get(id(t))
        if entry is None:
            result.append(Tensor(np.zeros(t.shape, dtype=t.dtype)))
        else:
            result.append(entry[1])
    return result
