"""Small reverse-mode autodiff over numpy arrays (rank <= 2).

A :class:`Tape` records every operation whose inputs carry it; ``backward``
walks the record in reverse creation order (a valid reverse topological order)
and each node's closure accumulates gradients into its parents. Operations on
values without a tape just compute forward results, which is what inference
uses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

DTYPE = np.float32


class ShapeError(ValueError):
    pass


class Var:
    __slots__ = ("value", "grad", "tape", "_backward", "name")

    def __init__(self, value, tape: "Tape | None" = None, name: str | None = None):
        self.value = value
        self.grad = None
        self.tape = tape
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.value.dtype, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        return f"Var(shape={self.value.shape}, dtype={self.value.dtype})"

    # operator sugar for the loss code
    def __add__(self, o):
        return add(self, o)

    def __sub__(self, o):
        return sub(self, o)

    def __mul__(self, o):
        return mul(self, o)

    def __neg__(self):
        return scale(self, -1.0)


class Tape:
    def __init__(self):
        self.nodes: list[Var] = []
        self.params: dict[str, Var] = {}

    def param(self, store: "ParamStore", name: str) -> Var:
        """Leaf bound to a store entry; gradients flow back on :meth:`flush`."""
        if name not in self.params:
            self.params[name] = Var(store[name].value, self, name)
        return self.params[name]

    def leaf(self, value) -> Var:
        return Var(np.asarray(value), self)

    def record(self, out: Var, backward) -> Var:
        out.tape = self
        out._backward = backward
        self.nodes.append(out)
        return out

    def backward(self, loss: Var) -> None:
        if loss.value.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self.nodes):
            if node.grad is not None and node._backward is not None:
                node._backward(node.grad)

    def flush(self, store: "ParamStore") -> None:
        """Add leaf gradients into the store's gradient buffers."""
        for name, var in self.params.items():
            if var.grad is not None:
                store[name].grad += var.grad.astype(store[name].grad.dtype)


def _as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(np.asarray(x))


def _tape_of(*xs) -> Tape | None:
    for x in xs:
        if isinstance(x, Var) and x.tape is not None:
            return x.tape
    return None


def _out(value, parents, backward) -> Var:
    tape = _tape_of(*parents)
    out = Var(value)
    if tape is not None:
        tape.record(out, backward)
    return out


def _need(x) -> bool:
    return isinstance(x, Var) and x.tape is not None


def _shape_err(op, a, b):
    return ShapeError(f"{op}: incompatible shapes {tuple(a.shape)} and {tuple(b.shape)}")


# ------------------------------------------------------------------ primitives

def matmul(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise _shape_err("matmul", a, b)

    def bw(g):
        if _need(a):
            a.accumulate(g @ b.value.T)
        if _need(b):
            b.accumulate(a.value.T @ g)

    return _out(a.value @ b.value, (a, b), bw)


def spmm(adj: sp.spmatrix, h) -> Var:
    """Sparse (constant) matrix times dense ``h``."""
    h = _as_var(h)
    if h.value.ndim != 2 or adj.shape[1] != h.shape[0]:
        raise ShapeError(f"spmm: incompatible shapes {adj.shape} and {tuple(h.shape)}")
    adj_t = None

    def bw(g):
        nonlocal adj_t
        if adj_t is None:
            adj_t = adj.T.tocsr()
        h.accumulate(np.asarray(adj_t @ g, dtype=h.value.dtype))

    return _out(np.asarray(adj @ h.value, dtype=h.value.dtype), (h,), bw)


def add(a, b) -> Var:
    """Elementwise sum; ``b`` may also be a row vector broadcast over the rows of ``a``."""
    a, b = _as_var(a), _as_var(b)
    if a.shape == b.shape:
        row = False
    elif a.value.ndim == 2 and b.value.ndim == 2 and b.shape == (1, a.shape[1]):
        row = True
    else:
        raise _shape_err("add", a, b)

    def bw(g):
        if _need(a):
            a.accumulate(g)
        if _need(b):
            b.accumulate(g.sum(axis=0, keepdims=True) if row else g)

    return _out(a.value + b.value, (a, b), bw)


def sub(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    if a.shape != b.shape:
        raise _shape_err("sub", a, b)

    def bw(g):
        if _need(a):
            a.accumulate(g)
        if _need(b):
            b.accumulate(-g)

    return _out(a.value - b.value, (a, b), bw)


def mul(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    if a.shape != b.shape:
        raise _shape_err("mul", a, b)

    def bw(g):
        if _need(a):
            a.accumulate(g * b.value)
        if _need(b):
            b.accumulate(g * a.value)

    return _out(a.value * b.value, (a, b), bw)


def scale(a, c: float) -> Var:
    a = _as_var(a)

    def bw(g):
        a.accumulate(g * c)

    return _out(a.value * a.value.dtype.type(c), (a,), bw)


def relu(a) -> Var:
    a = _as_var(a)
    mask = a.value > 0

    def bw(g):
        a.accumulate(g * mask)

    return _out(np.where(mask, a.value, 0).astype(a.value.dtype), (a,), bw)


def exp(a) -> Var:
    a = _as_var(a)
    y = np.exp(a.value)

    def bw(g):
        a.accumulate(g * y)

    return _out(y, (a,), bw)


def log(a) -> Var:
    a = _as_var(a)

    def bw(g):
        a.accumulate(g / a.value)

    return _out(np.log(a.value), (a,), bw)


def square(a) -> Var:
    a = _as_var(a)

    def bw(g):
        a.accumulate(2 * g * a.value)

    return _out(a.value * a.value, (a,), bw)


def row_softmax(a) -> Var:
    a = _as_var(a)
    z = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)

    def bw(g):
        a.accumulate(y * (g - (g * y).sum(axis=1, keepdims=True)))

    return _out(y, (a,), bw)


def row_log_softmax(a) -> Var:
    """Numerically stable ``log(row_softmax(a))``."""
    a = _as_var(a)
    z = a.value - a.value.max(axis=1, keepdims=True)
    y = z - np.log(np.exp(z).sum(axis=1, keepdims=True))

    def bw(g):
        p = np.exp(y)
        a.accumulate(g - p * g.sum(axis=1, keepdims=True))

    return _out(y, (a,), bw)


def pool_matrix(segments: np.ndarray, num_segments: int, dtype=DTYPE) -> sp.csr_matrix:
    """Sparse (num_segments x rows) 0/1 matrix summing rows within each segment."""
    k = len(segments)
    return sp.csr_matrix((np.ones(k, dtype=dtype), (segments, np.arange(k))),
                         shape=(num_segments, k))


def row_sum_pool(h, segments: np.ndarray, num_segments: int) -> Var:
    """Sum rows of ``h`` per segment id -> (num_segments, d)."""
    h = _as_var(h)
    if len(segments) != h.shape[0]:
        raise ShapeError(f"row_sum_pool: {len(segments)} segment ids for {h.shape[0]} rows")
    seg = np.asarray(segments)
    out = np.zeros((num_segments,) + h.shape[1:], dtype=h.value.dtype)
    np.add.at(out, seg, h.value)

    def bw(g):
        h.accumulate(g[seg])

    return _out(out, (h,), bw)


def gather_cols(a, cols: np.ndarray) -> Var:
    """``a[i, cols[i]]`` for every row -> shape (rows,)."""
    a = _as_var(a)
    rows = np.arange(a.shape[0])
    cols = np.asarray(cols)
    if cols.shape != (a.shape[0],):
        raise ShapeError(f"gather_cols: {cols.shape} indices for {a.shape[0]} rows")

    def bw(g):
        full = np.zeros_like(a.value)
        full[rows, cols] = g
        a.accumulate(full)

    return _out(a.value[rows, cols], (a,), bw)


def total(a) -> Var:
    a = _as_var(a)

    def bw(g):
        a.accumulate(np.broadcast_to(g, a.shape))

    return _out(a.value.sum(keepdims=False).reshape(()), (a,), bw)


def mean(a) -> Var:
    return scale(total(a), 1.0 / max(1, a.value.size))


def clip(a, lo: float, hi: float) -> Var:
    a = _as_var(a)
    inside = (a.value >= lo) & (a.value <= hi)

    def bw(g):
        a.accumulate(g * inside)

    return _out(np.clip(a.value, lo, hi), (a,), bw)


def select(mask: np.ndarray, a, b) -> Var:
    """Elementwise ``a`` where mask else ``b``; gradients follow the chosen branch."""
    a, b = _as_var(a), _as_var(b)
    if a.shape != b.shape or mask.shape != a.shape:
        raise _shape_err("select", a, b)

    def bw(g):
        if _need(a):
            a.accumulate(np.where(mask, g, 0))
        if _need(b):
            b.accumulate(np.where(mask, 0, g))

    return _out(np.where(mask, a.value, b.value), (a, b), bw)


def minimum(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    return select(a.value <= b.value, a, b)


def maximum(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    return select(a.value >= b.value, a, b)


def astype(a, dtype) -> Var:
    a = _as_var(a)
    src = a.value.dtype

    def bw(g):
        a.accumulate(g.astype(src))

    return _out(a.value.astype(dtype), (a,), bw)


def reshape(a, shape) -> Var:
    a = _as_var(a)
    src = a.shape

    def bw(g):
        a.accumulate(g.reshape(src))

    return _out(a.value.reshape(shape), (a,), bw)


# ------------------------------------------------------------ parameter store

@dataclass
class Param:
    value: np.ndarray
    grad: np.ndarray = field(init=False)
    m: np.ndarray = field(init=False)
    v: np.ndarray = field(init=False)
    step: int = 0

    def __post_init__(self):
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)


class ParamStore:
    """Ordered name -> :class:`Param` map with Adam state."""

    def __init__(self):
        self.params: dict[str, Param] = {}

    def add(self, name: str, value) -> Param:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        p = Param(np.ascontiguousarray(value, dtype=DTYPE))
        self.params[name] = p
        return p

    def __getitem__(self, name) -> Param:
        return self.params[name]

    def __contains__(self, name) -> bool:
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def items(self):
        return self.params.items()

    def names(self) -> list[str]:
        return list(self.params)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad.fill(0)

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for name, p in self.params.items():
            q = out.add(name, p.value.copy())
            q.m[...] = p.m
            q.v[...] = p.v
            q.step = p.step
        return out

    def values_equal(self, other: "ParamStore") -> bool:
        return (self.names() == other.names() and all(
            self[k].value.shape == other[k].value.shape
            and self[k].value.tobytes() == other[k].value.tobytes() for k in self))


def global_grad_norm(store: ParamStore) -> float:
    return float(np.sqrt(sum(float(np.sum(p.grad.astype(np.float64) ** 2))
                             for p in store.params.values())))


def clip_grad_norm(store: ParamStore, max_norm: float = 0.5) -> float:
    """Rescale all gradients jointly so their global L2 norm is <= max_norm.

    Returns the norm before clipping.
    """
    norm = global_grad_norm(store)
    if norm > max_norm:
        factor = DTYPE(max_norm / norm)
        for p in store.params.values():
            p.grad *= factor
    return norm


def adam_step(store: ParamStore, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8) -> None:
    for p in store.params.values():
        p.step += 1
        g = p.grad
        p.m *= beta1
        p.m += (1 - beta1) * g
        p.v *= beta2
        p.v += (1 - beta2) * g * g
        m_hat = p.m / (1 - beta1 ** p.step)
        v_hat = p.v / (1 - beta2 ** p.step)
        p.value -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.value.dtype)


def cast_store(store: ParamStore, dtype) -> ParamStore:
    out = ParamStore()
    for name, p in store.items():
        out.params[name] = Param(p.value.astype(dtype))
    return out


def grad_check(f, store: ParamStore, eps: float = 1e-3, names=None, max_coords: int | None = None,
               rng: np.random.Generator | None = None, oracle_dtype=None) -> float:
    """Max relative error between tape gradients and central finite differences.

    ``f(tape, store) -> scalar Var`` must be deterministic. Relative error per
    coordinate is ``|ga - gn| / max(1e-8, |ga| + |gn|)``. ``max_coords`` limits
    the coordinates checked per parameter to a random subset. With
    ``oracle_dtype`` the finite differences run on a copy of the store cast to
    that dtype while the analytic gradient keeps the store's own precision.
    """
    names = list(store) if names is None else list(names)
    tape = Tape()
    loss = f(tape, store)
    tape.backward(loss)
    analytic = {n: (tape.params[n].grad if n in tape.params and tape.params[n].grad is not None
                    else np.zeros_like(store[n].value)) for n in names}
    probe = store if oracle_dtype is None else cast_store(store, oracle_dtype)
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for n in names:
        val = probe[n].value
        flat = val.reshape(-1)
        idx = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            idx = rng.choice(flat.size, max_coords, replace=False)
        ga_flat = analytic[n].reshape(-1)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            hi = flat[i]
            fp = float(f(Tape(), probe).value)
            flat[i] = orig - eps
            lo = flat[i]
            fm = float(f(Tape(), probe).value)
            flat[i] = orig
            gn = (fp - fm) / float(hi - lo)
            ga = float(ga_flat[i])
            worst = max(worst, abs(ga - gn) / max(1e-8, abs(ga) + abs(gn)))
    return worst


# ---------------------------------------------------------------- checkpoints

def save_checkpoint(store: ParamStore, path) -> None:
    """Write ``{name: shape}`` JSON header line, then little-endian f32 arrays in order."""
    header = {name: list(p.value.shape) for name, p in store.items()}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for p in store.params.values():
            fh.write(np.ascontiguousarray(p.value, dtype="<f4").tobytes())


def load_checkpoint(path) -> ParamStore:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: missing checkpoint header")
    header = json.loads(raw[:nl].decode("utf-8"))
    store = ParamStore()
    off = nl + 1
    for name, shape in header.items():
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if off + nbytes > len(raw):
            raise ValueError(f"{path}: truncated data for {name!r}")
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=off).reshape(shape)
        store.add(name, arr.astype(DTYPE))
        off += nbytes
    if off != len(raw):
        raise ValueError(f"{path}: {len(raw) - off} trailing bytes")
    return store
