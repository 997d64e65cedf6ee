# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import numbers
import numpy as np

from ..errors import ShapeError


########################################################################################################################
# Gradient recording switch
########################################################################################################################

_GRAD_ENABLED = [True]


def is_grad_enabled():
    return _GRAD_ENABLED[0]


class no_grad(object):
    """ Context in which operations do not record the graph """

    def __enter__(self):
        self._prev = _GRAD_ENABLED[0]
        _GRAD_ENABLED[0] = False
        return self

    def __exit__(self, *args):
        _GRAD_ENABLED[0] = self._prev


########################################################################################################################
# Tensor
########################################################################################################################

class Tensor(object):
    """ N-dimensional float64 array node of a reverse-mode autodiff graph """

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._backward is None

    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.op = 'leaf'
        self._parents = ()
        self._backward = None

    def __repr__(self):
        return "Tensor <{}, shape: {}{}>".format(self.op, self.shape, ', grad' if self.requires_grad else '')

    def __len__(self):
        return self.data.shape[0]

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float('nan')

    def numpy(self):
        return self.data

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data)

    def backward(self, grad=None):
        """ Accumulate d(self)/d(leaf) into the .grad of every leaf requiring gradient """
        if not self.requires_grad:
            return
        if grad is None:
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.shape:
            raise ShapeError("Seed gradient shape {} does not match {}".format(grad.shape, self.shape))
        Tape.record(self).run(self, grad)

    # operators
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    # shape methods
    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)

    def permute(self, *axes):
        return permute(self, axes[0] if len(axes) == 1 and isinstance(axes[0], (tuple, list)) else axes)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def expand(self, *shape):
        return expand(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)


class Tape(object):
    """ Topologically ordered record of the nodes reachable from a root """

    def __init__(self, nodes):
        self.nodes = nodes

    def __len__(self):
        return len(self.nodes)

    @classmethod
    def record(cls, root):
        order, seen = [], set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen and parent.requires_grad:
                    stack.append((parent, False))
        return cls(order)

    def run(self, root, grad):
        grads = {id(root): grad}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg


def _result(data, parents, backward, op):
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.op = op
    out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
    out._parents = tuple(parents) if out.requires_grad else ()
    out._backward = backward if out.requires_grad else None
    return out


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _is_scalar(x):
    return isinstance(x, numbers.Number) and not isinstance(x, bool)


def _check_same(a, b, op):
    if a.shape != b.shape:
        raise ShapeError("{}: shapes {} and {} differ (use expand to broadcast)".format(op, a.shape, b.shape))


########################################################################################################################
# Core operations
########################################################################################################################

def add(a, b):
    if _is_scalar(b):
        return _result(a.data + b, (a,), lambda g: (g,), 'add')
    a, b = as_tensor(a), as_tensor(b)
    _check_same(a, b, 'add')
    return _result(a.data + b.data, (a, b), lambda g: (g, g), 'add')


def neg(a):
    return _result(-a.data, (a,), lambda g: (-g,), 'neg')


def sub(a, b):
    if _is_scalar(b):
        return add(a, -b)
    a, b = as_tensor(a), as_tensor(b)
    _check_same(a, b, 'sub')
    return _result(a.data - b.data, (a, b), lambda g: (g, -g), 'sub')


def mul(a, b):
    if _is_scalar(b):
        return _result(a.data * b, (a,), lambda g: (g * b,), 'mul')
    a, b = as_tensor(a), as_tensor(b)
    _check_same(a, b, 'mul')
    return _result(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data), 'mul')


def matmul(a, b):
    """ Matrix product of 2D tensors or batched product of 3D tensors """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != b.ndim or a.ndim not in (2, 3) or a.shape[-1] != b.shape[-2] or \
            (a.ndim == 3 and a.shape[0] != b.shape[0]):
        raise ShapeError("matmul: incompatible shapes {} and {}".format(a.shape, b.shape))

    def backward(g):
        return np.matmul(g, np.swapaxes(b.data, -1, -2)), np.matmul(np.swapaxes(a.data, -1, -2), g)

    return _result(np.matmul(a.data, b.data), (a, b), backward, 'matmul')


def reshape(a, shape):
    shape = tuple(int(s) for s in shape)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape: cannot reshape {} into {}".format(a.shape, shape))
    return _result(data, (a,), lambda g: (g.reshape(a.shape),), 'reshape')


def permute(a, axes):
    axes = tuple(int(x) for x in axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError("permute: {} is not a permutation of {} axes".format(axes, a.ndim))
    inverse = tuple(np.argsort(axes))
    return _result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), 'permute')


def getitem(a, index):
    """ Basic slicing (integers and slices only) """
    data = a.data[index]

    def backward(g):
        out = np.zeros_like(a.data)
        out[index] = g
        return out,

    return _result(np.array(data, dtype=np.float64), (a,), backward, 'slice')


def pad(a, pad_width):
    """ Zero padding, pad_width is one (before, after) pair per axis """
    pad_width = [tuple(int(v) for v in p) for p in pad_width]
    if len(pad_width) != a.ndim or any(v < 0 for p in pad_width for v in p):
        raise ShapeError("pad: need {} non-negative (before, after) pairs".format(a.ndim))
    index = tuple(slice(lo, lo + n) for (lo, _), n in zip(pad_width, a.shape))
    return _result(np.pad(a.data, pad_width), (a,), lambda g: (g[index],), 'pad')


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    ref = tensors[0]
    axis = axis % ref.ndim
    for t in tensors[1:]:
        if t.ndim != ref.ndim or any(s != r for i, (s, r) in enumerate(zip(t.shape, ref.shape)) if i != axis):
            raise ShapeError("concat: shapes {} and {} differ off axis {}".format(t.shape, ref.shape, axis))
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        return tuple(np.take(g, np.arange(lo, hi), axis=axis) for lo, hi in zip(bounds[:-1], bounds[1:]))

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward, 'concat')


def _reduced_shape(shape, axis):
    if axis is None:
        return tuple(1 for _ in shape)
    axes = (axis,) if isinstance(axis, int) else axis
    axes = [x % len(shape) for x in axes]
    return tuple(1 if i in axes else s for i, s in enumerate(shape))


def tsum(a, axis=None, keepdims=False):
    kept = _reduced_shape(a.shape, axis)
    return _result(np.asarray(a.data.sum(axis=axis, keepdims=keepdims), dtype=np.float64), (a,),
                   lambda g: (np.broadcast_to(np.reshape(g, kept), a.shape).copy(),), 'sum')


def mean(a, axis=None, keepdims=False):
    kept = _reduced_shape(a.shape, axis)
    count = a.data.size // int(np.prod(kept))
    return _result(np.asarray(a.data.mean(axis=axis, keepdims=keepdims), dtype=np.float64), (a,),
                   lambda g: (np.broadcast_to(np.reshape(g, kept) / count, a.shape).copy(),), 'mean')


def expand(a, shape):
    """ Explicit broadcast to shape, summing the gradient back over broadcast axes """
    shape = tuple(int(s) for s in shape)
    try:
        data = np.broadcast_to(a.data, shape)
    except ValueError:
        raise ShapeError("expand: cannot broadcast {} to {}".format(a.shape, shape))
    lead = len(shape) - a.ndim
    axes = tuple(i + lead for i, s in enumerate(a.shape) if s == 1 and shape[i + lead] != 1)

    def backward(g):
        g = g.sum(axis=tuple(range(lead))) if lead else g
        return g.sum(axis=axes, keepdims=True) if axes else g,

    return _result(data.copy(), (a,), backward, 'expand')


def take(a, indices, axis=0):
    """ Gather rows along axis 0 """
    if axis != 0:
        raise ShapeError("take: only axis 0 is supported")
    indices = np.asarray(indices, dtype=np.int64)

    def backward(g):
        out = np.zeros_like(a.data)
        np.add.at(out, indices, g)
        return out,

    return _result(a.data[indices], (a,), backward, 'take')


def tabs(a):
    return _result(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),), 'abs')
