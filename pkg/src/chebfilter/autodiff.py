"""A small reverse-mode differentiation engine over numpy arrays.

Operations build a graph of `Tensor` nodes as they run. `backward` orders
that graph topologically into a `Tape`, pushes adjoints through it once,
and then releases it; asking for a second backward pass over the same
loss raises `StaleTapeError`.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, OptimizerError, StaleTapeError


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "name", "_parents", "_backward", "_op",
                 "_adjoint", "_released")

    def __init__(self, values, requires_grad: bool = False, name: str | None = None):
        self.values = np.array(values, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple = ()
        self._backward = None
        self._op = "leaf"
        self._adjoint = None
        self._released = False

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def is_leaf(self) -> bool:
        return self._op == "leaf"

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"


def tensor(values, requires_grad: bool = False, name: str | None = None) -> Tensor:
    return Tensor(values, requires_grad, name)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(values, op: str, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.values = values
    out.grad = None
    out.name = None
    out._adjoint = None
    out._released = False
    out.requires_grad = any(p.requires_grad for p in parents)
    out._op = op
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    return out


# -- forward operations -----------------------------------------------------
# Each backward closure maps the output adjoint to one adjoint per parent
# (None where the parent needs no gradient).

def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.values.ndim != 2 or b.values.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shapes {a.shape} and {b.shape} are incompatible")

    def backward(g):
        ga = gb = None
        if a.requires_grad:
            ga = np.outer(g, b.values) if b.values.ndim == 1 else g @ b.values.T
        if b.requires_grad:
            gb = a.values.T @ g
        return ga, gb

    return _result(a.values @ b.values, "matmul", (a, b), backward)


def add_bias(x, bias) -> Tensor:
    x, bias = _as_tensor(x), _as_tensor(bias)
    if x.values.ndim != 2 or bias.shape != (x.shape[1],):
        raise DimensionError(f"bias of shape {bias.shape} does not fit {x.shape}")
    return _result(x.values + bias.values, "add_bias", (x, bias), lambda g: (g, g.sum(axis=0)))


def relu(x) -> Tensor:
    x = _as_tensor(x)
    mask = x.values > 0
    return _result(np.where(mask, x.values, 0.0), "relu", (x,), lambda g: (g * mask,))


def dropout(x, p: float, rng: np.random.Generator | None = None, training: bool = True) -> Tensor:
    """Inverted dropout; the identity when not training or when p == 0."""
    x = _as_tensor(x)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"dropout probability must be in [0, 1], got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs an explicit random generator")
    if p == 1.0:
        mask = np.zeros(x.shape)
    else:
        mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return _result(x.values * mask, "dropout", (x,), lambda g: (g * mask,))


def scale(x, s) -> Tensor:
    """``s * x`` for a float or a scalar (shape () or (1,)) tensor `s`."""
    x = _as_tensor(x)
    if not isinstance(s, Tensor):
        s = float(s)
        return _result(s * x.values, "scale", (x,), lambda g: (s * g,))
    if s.values.size != 1:
        raise DimensionError(f"scale factor must be scalar, got shape {s.shape}")
    sv = float(s.values.reshape(()))

    def backward(g):
        return sv * g, np.reshape(np.sum(g * x.values), s.shape)

    return _result(sv * x.values, "scale", (x, s), backward)


def select(x, index: int) -> Tensor:
    """Scalar entry `index` of a 1-D tensor."""
    x = _as_tensor(x)
    if x.values.ndim != 1:
        raise DimensionError("select expects a 1-D tensor")

    def backward(g):
        gx = np.zeros_like(x.values)
        gx[index] = g
        return (gx,)

    return _result(np.array(x.values[index]), "select", (x,), backward)


def elementwise_add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot add shapes {a.shape} and {b.shape}")
    return _result(a.values + b.values, "add", (a, b), lambda g: (g, g))


def elementwise_mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return _result(a.values * b.values, "mul", (a, b), lambda g: (g * b.values, g * a.values))


def graph_matvec(op, x) -> Tensor:
    """Apply a symmetric graph operator to every column of `x`.

    The operator is fixed (no gradient); symmetry makes the adjoint the
    operator itself.
    """
    x = _as_tensor(x)
    return _result(op.matvec(x.values), "graph_matvec", (x,), lambda g: (op.matvec(g),))


def log_softmax(x) -> Tensor:
    x = _as_tensor(x)
    if x.values.ndim != 2:
        raise DimensionError("log_softmax expects an (n, C) matrix")
    shifted = x.values - x.values.max(axis=1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    soft = np.exp(out)

    def backward(g):
        return (g - soft * g.sum(axis=1, keepdims=True),)

    return _result(out, "log_softmax", (x,), backward)


def nll_loss(log_probs, labels, mask=None) -> Tensor:
    """Mean negative log-likelihood over the rows selected by `mask`.

    `mask` is a boolean vector or an index array; None means all rows.
    """
    log_probs = _as_tensor(log_probs)
    labels = np.asarray(labels)
    n = log_probs.shape[0]
    rows = np.arange(n) if mask is None else np.asarray(mask)
    if rows.dtype == bool:
        rows = np.flatnonzero(rows)
    if rows.size == 0:
        raise DimensionError("nll_loss over an empty mask")
    picked = log_probs.values[rows, labels[rows]]

    def backward(g):
        gx = np.zeros_like(log_probs.values)
        np.add.at(gx, (rows, labels[rows]), -g / rows.size)
        return (gx,)

    return _result(np.array(-picked.mean()), "nll_loss", (log_probs,), backward)


def total(x) -> Tensor:
    x = _as_tensor(x)
    return _result(np.array(x.values.sum()), "sum", (x,), lambda g: (np.full(x.shape, g),))


def weighted_sum(weights: Tensor, terms: Sequence) -> Tensor:
    """``sum_k weights[k] * terms[k]`` built from select/scale/add."""
    out = None
    for k, term in enumerate(terms):
        piece = scale(term, select(weights, k))
        out = piece if out is None else elementwise_add(out, piece)
    return out


# -- backward ---------------------------------------------------------------

class Tape:
    """Operations reachable from a loss, in topological (inputs-first) order."""

    def __init__(self, loss: Tensor):
        if loss._released:
            raise StaleTapeError("this loss was already back-propagated; re-run the forward pass")
        if loss.values.size != 1:
            raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
        self.loss = loss
        self.nodes: list[Tensor] = []
        seen = set()
        stack = [(loss, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                self.nodes.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

    def backward(self):
        loss = self.loss
        if loss._released:
            raise StaleTapeError("this tape was already consumed")
        loss._adjoint = np.ones_like(loss.values)
        for node in reversed(self.nodes):
            g = node._adjoint
            node._adjoint = None
            if g is None:
                continue
            if node.is_leaf:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                pg = np.reshape(pg, parent.shape)
                parent._adjoint = pg if parent._adjoint is None else parent._adjoint + pg
        for node in self.nodes:
            if not node.is_leaf:
                node._parents = ()
                node._backward = None
                node._released = True
        loss._released = True


def backward(loss: Tensor) -> Tape:
    """Populate ``.grad`` (accumulating) on every leaf that requires it."""
    tape = Tape(loss)
    tape.backward()
    return tape


# -- optimisation -----------------------------------------------------------

class Adam:
    """Adam with per-group learning rate and L2 weight decay.

    Weight decay is added to the gradient (``g + wd * p``) before the
    moment updates.
    """

    def __init__(self, groups: Iterable[dict], betas=(0.9, 0.999), eps: float = 1e-8):
        self.groups = []
        for group in groups:
            params = list(group["params"])
            self.groups.append({
                "params": params,
                "lr": float(group.get("lr", 0.01)),
                "weight_decay": float(group.get("weight_decay", 0.0)),
            })
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = {id(p): np.zeros_like(p.values) for g in self.groups for p in g["params"]}
        self.v = {id(p): np.zeros_like(p.values) for g in self.groups for p in g["params"]}

    def zero_grad(self):
        for group in self.groups:
            for p in group["params"]:
                p.grad = None

    def step(self):
        for group in self.groups:
            for p in group["params"]:
                if p.grad is None:
                    raise OptimizerError(f"parameter {p.name or p!r} has no gradient")
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for group in self.groups:
            lr, wd = group["lr"], group["weight_decay"]
            for p in group["params"]:
                g = p.grad + wd * p.values if wd else p.grad
                m, v = self.m[id(p)], self.v[id(p)]
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                p.values -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# -- utilities --------------------------------------------------------------

def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, name: str | None = None) -> Tensor:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=(fan_in, fan_out)), requires_grad=True, name=name)


def numerical_gradient(f: Callable[[], float], param: Tensor, index, step: float = 1e-5) -> float:
    """Central difference of ``f()`` with respect to one entry of `param`."""
    old = param.values[index]
    param.values[index] = old + step
    up = f()
    param.values[index] = old - step
    down = f()
    param.values[index] = old
    return (up - down) / (2.0 * step)


def gradcheck(loss_fn: Callable[[], Tensor], params: dict, samples: int = 20, step: float = 1e-5,
              seed: int = 0, floor: float = 1e-6) -> float:
    """Worst relative error between backward and central differences.

    `loss_fn` must rebuild the graph and be deterministic. Up to `samples`
    entries of each parameter are checked; the relative error uses
    ``max(|analytic|, |numeric|, floor)`` as denominator.
    """
    for p in params.values():
        p.grad = None
    backward(loss_fn())
    analytic = {name: p.grad.copy() for name, p in params.items()}
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, p in params.items():
        size = p.values.size
        flat = rng.choice(size, size=min(samples, size), replace=False)
        for i in flat:
            idx = np.unravel_index(i, p.shape)
            num = numerical_gradient(lambda: float(loss_fn().values), p, idx, step)
            ana = float(analytic[name][idx])
            err = abs(ana - num) / max(abs(ana), abs(num), floor)
            worst = max(worst, err)
    return worst


def save_checkpoint(params: dict, path) -> None:
    payload = OrderedDict(
        (name, {"shape": list(params[name].shape), "values": params[name].values.ravel().tolist()})
        for name in sorted(params)
    )
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def load_checkpoint(path) -> dict:
    with open(path) as fh:
        raw = json.load(fh)
    return {
        name: Tensor(np.array(entry["values"], dtype=np.float64).reshape(entry["shape"]),
                     requires_grad=True, name=name)
        for name, entry in raw.items()
    }
