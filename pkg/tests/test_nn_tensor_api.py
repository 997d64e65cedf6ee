# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import pytest
import inspect
import numpy as np

from dsni import nn
from dsni.errors import ShapeError, NumericalError, ConfigError


def random_tensor(shape, seed=0, scale=1.0):
    return nn.Tensor(np.random.default_rng(seed).normal(0.0, scale, size=shape), requires_grad=True)


def test_matmul():
    a = nn.Tensor([[1.0, 2.0], [3.0, 4.0]])
    b = nn.Tensor([[5.0], [6.0]])
    assert (a @ b).data.tolist() == [[17.0], [39.0]]
    with pytest.raises(ShapeError):
        nn.matmul(b, b)


def test_backward_accumulates():
    x = nn.Tensor([1.0, -2.0, 3.0], requires_grad=True)
    y = (x * x + x).sum()
    y.backward()
    assert x.grad.tolist() == [3.0, -3.0, 7.0]
    # a second pass adds to the existing gradient
    (x * 2.0).sum().backward()
    assert x.grad.tolist() == [5.0, -1.0, 9.0]


def test_no_implicit_broadcast():
    a = nn.Tensor(np.zeros((2, 3)))
    b = nn.Tensor(np.zeros(3))
    with pytest.raises(ShapeError):
        nn.add(a, b)
    with pytest.raises(ShapeError):
        nn.mul(a, b)
    assert nn.add(a, nn.expand(b, (2, 3))).shape == (2, 3)


def test_expand_gradient():
    b = nn.Tensor(np.ones((1, 3)), requires_grad=True)
    nn.expand(b, (4, 3)).sum().backward()
    assert b.grad.tolist() == [[4.0, 4.0, 4.0]]


def test_no_grad():
    x = nn.Tensor(np.ones(3), requires_grad=True)
    with nn.no_grad():
        y = x * 3.0
        assert not nn.is_grad_enabled()
    assert nn.is_grad_enabled()
    assert not y.requires_grad
    y.backward()
    assert x.grad is None


def test_softmax_constant():
    x = nn.Tensor(np.full((2, 5), 7.0))
    assert np.allclose(nn.softmax(x).data, 0.2, rtol=0, atol=1e-15)
    big = nn.softmax(nn.Tensor([1000.0, 1000.0]))
    assert np.all(np.isfinite(big.data))


def test_layernorm_moments():
    x = random_tensor((4, 16), seed=1, scale=5.0)
    y = nn.layernorm(x).data
    assert np.allclose(y.mean(axis=-1), 0.0, atol=1e-12)
    assert np.allclose(y.var(axis=-1), 1.0, atol=1e-3)


def test_gelu():
    assert nn.gelu(nn.Tensor([0.0])).data[0] == 0.0
    assert nn.gelu(nn.Tensor([10.0])).data[0] == pytest.approx(10.0)


@pytest.mark.parametrize('fn', [
    lambda x: nn.softmax(x, axis=-1),
    lambda x: nn.gelu(x),
    lambda x: nn.layernorm(x),
    lambda x: nn.roll(x, (1, -2), (0, 1)),
    lambda x: nn.pad(x, ((1, 0), (2, 1))),
    lambda x: nn.take(x, [0, 2, 2]),
    lambda x: nn.tabs(x),
    lambda x: nn.mean(x * x, axis=0),
])
def test_gradcheck_elementary(fn):
    x = random_tensor((3, 4), seed=2)
    assert nn.gradcheck(fn, x) < 1e-6


SWEEP_OPS = {
    'softmax': lambda x: nn.softmax(x, axis=0),
    'gelu': lambda x: nn.gelu(x),
    'layernorm': lambda x: nn.layernorm(x),
    'roll': lambda x: nn.roll(x, (2, 1), (0, 1)),
    'pad': lambda x: nn.pad(x, ((0, 1), (1, 1))),
    'take': lambda x: nn.take(x, [1, 1, 0]),
    'tabs': lambda x: nn.tabs(x),
    'mean': lambda x: nn.mean(x, axis=1, keepdims=True),
    'sum': lambda x: nn.tsum(x * x),
    'matmul': lambda x: nn.matmul(x, nn.permute(x, (1, 0))),
    'reshape': lambda x: nn.reshape(x, (2, 6)) * 2.0,
    'getitem': lambda x: nn.getitem(x, (slice(0, 2), slice(1, 3))),
    'concat': lambda x: nn.concat([x, x * x], axis=0),
    'conv3d': lambda x: nn.conv3d(nn.reshape(x, (1, 3, 2, 2)),
                                  nn.Tensor(np.random.default_rng(9).normal(size=(2, 1, 2, 2, 2))), padding=1),
}


@pytest.mark.parametrize('seed', range(50))
@pytest.mark.parametrize('name', sorted(SWEEP_OPS))
def test_gradcheck_seed_sweep(name, seed):
    x = random_tensor((3, 4), seed=100 + seed)
    assert nn.gradcheck(SWEEP_OPS[name], x, seed=seed) <= 1e-4


def test_gradcheck_default_step():
    assert inspect.signature(nn.gradcheck).parameters['h'].default == 1e-5
    # cubic at zero: central differences give exactly h^2
    x = nn.Tensor([0.0], requires_grad=True)
    assert nn.gradcheck(lambda t: t * t * t, x) == pytest.approx(1e-10, rel=1e-6)


def test_gradcheck_linear():
    w = nn.Tensor(np.random.default_rng(3).normal(size=(4, 5)))
    b = nn.Tensor(np.random.default_rng(4).normal(size=5))
    x = random_tensor((2, 3, 4), seed=5)
    assert nn.linear(x, w, b).shape == (2, 3, 5)
    assert nn.gradcheck(lambda t: nn.linear(t, w, b), x) < 1e-6


def test_conv3d_identity():
    x = nn.Tensor(np.random.default_rng(6).normal(size=(2, 3, 4, 5)))
    k = nn.Tensor(np.eye(2).reshape(2, 2, 1, 1, 1))
    assert np.array_equal(nn.conv3d(x, k).data, x.data)


def test_conv3d_average():
    x = nn.Tensor(np.full((1, 5, 5, 5), 5.0))
    k = nn.Tensor(np.full((1, 1, 3, 3, 3), 1.0 / 27.0))
    out = nn.conv3d(x, k, padding=1)
    assert out.shape == (1, 5, 5, 5)
    assert np.allclose(out.data[:, 1:-1, 1:-1, 1:-1], 5.0, rtol=0, atol=1e-12)
    assert nn.conv3d(x, k, stride=2).shape == (1, 2, 2, 2)


@pytest.mark.parametrize('stride, padding', [(1, 0), (1, 1), (2, 1)])
def test_conv3d_gradcheck(stride, padding):
    x = random_tensor((2, 4, 4, 4), seed=7)
    k = random_tensor((3, 2, 3, 3, 3), seed=8, scale=0.3)
    assert nn.gradcheck(lambda t: nn.conv3d(t, k, stride, padding), x) < 1e-6
    assert nn.gradcheck(lambda t: nn.conv3d(x, t, stride, padding), k) < 1e-6


def test_conv3d_errors():
    with pytest.raises(ShapeError):
        nn.conv3d(nn.Tensor(np.zeros((2, 4, 4, 4))), nn.Tensor(np.zeros((1, 3, 1, 1, 1))))
    with pytest.raises(ShapeError):
        nn.conv3d(nn.Tensor(np.zeros((1, 2, 2, 2))), nn.Tensor(np.zeros((1, 1, 3, 3, 3))))


def test_pixel_shuffle():
    x = nn.Tensor(np.arange(2 * 8 * 3, dtype=np.float64).reshape(1, 1, 2, 24))
    y = nn.pixel_shuffle(x, 2, 3)
    assert y.shape == (2, 2, 4, 3)
    assert sorted(y.data.ravel().tolist()) == sorted(x.data.ravel().tolist())


def test_l1_loss():
    pred = nn.Tensor([1.0, -1.0, 3.0], requires_grad=True)
    loss = nn.l1_loss(pred, np.array([0.0, 0.0, 0.0]))
    assert loss.item() == pytest.approx(5.0 / 3.0)
    loss.backward()
    assert np.allclose(pred.grad, [1.0 / 3, -1.0 / 3, 1.0 / 3])


def test_adamw_first_step():
    lr, wd, eps = 0.1, 0.01, 1e-8
    w = nn.Tensor([1.0, -2.0], requires_grad=True)
    w.grad = np.array([1.0, -1.0])
    opt = nn.AdamW([w], lr=lr, eps=eps, weight_decay=wd)
    opt.step()
    step = lr * (1.0 / (1.0 + eps))
    assert w.data[0] == pytest.approx(1.0 * (1 - lr * wd) - step, abs=1e-12)
    assert w.data[1] == pytest.approx(-2.0 * (1 - lr * wd) + step, abs=1e-12)
    assert opt.steps == 1
    opt.zero_grad()
    assert w.grad is None


def test_adamw_errors():
    w = nn.Tensor([1.0], requires_grad=True)
    with pytest.raises(ConfigError):
        nn.AdamW([w], lr=0.0)
    w.grad = np.array([np.nan])
    with pytest.raises(NumericalError):
        nn.AdamW([w]).step()
