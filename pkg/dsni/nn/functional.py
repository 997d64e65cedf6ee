# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .tensor import Tensor, _result, as_tensor, concat, getitem, matmul, add, mul, expand, reshape


GELU_C = np.sqrt(2.0 / np.pi)
GELU_A = 0.044715


########################################################################################################################
# Nonlinearities
########################################################################################################################

def softmax(x, axis=-1):
    """ Numerically stable softmax """
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / np.sum(e, axis=axis, keepdims=True)

    def backward(g):
        return y * (g - np.sum(g * y, axis=axis, keepdims=True)),

    return _result(y, (x,), backward, 'softmax')


def gelu(x):
    """ GELU, tanh approximation """
    u = x.data
    inner = GELU_C * (u + GELU_A * u ** 3)
    th = np.tanh(inner)

    def backward(g):
        d_inner = GELU_C * (1.0 + 3.0 * GELU_A * u ** 2)
        return g * (0.5 * (1.0 + th) + 0.5 * u * (1.0 - th ** 2) * d_inner),

    return _result(0.5 * u * (1.0 + th), (x,), backward, 'gelu')


def layernorm(x, axis=-1, eps=1e-5):
    """ Normalize to zero mean and unit variance along axis (no affine part) """
    mu = x.data.mean(axis=axis, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc ** 2).mean(axis=axis, keepdims=True) + eps)
    y = xc * inv

    def backward(g):
        return inv * (g - g.mean(axis=axis, keepdims=True) - y * (g * y).mean(axis=axis, keepdims=True)),

    return _result(y, (x,), backward, 'layernorm')


def layer_norm(x, weight, bias, eps=1e-5):
    """ Layer normalization over the last axis with elementwise affine """
    y = layernorm(x, -1, eps)
    return add(mul(y, expand(weight, x.shape)), expand(bias, x.shape))


def linear(x, weight, bias=None):
    """ x[..., in] @ weight[in, out] (+ bias[out]) """
    lead = x.shape[:-1]
    if x.shape[-1] != weight.shape[0]:
        raise ShapeError("linear: input features {} do not match weight {}".format(x.shape[-1], weight.shape))
    y = matmul(reshape(x, (-1, x.shape[-1])), weight)
    if bias is not None:
        y = add(y, expand(bias, y.shape))
    return reshape(y, lead + (weight.shape[1],))


########################################################################################################################
# Convolution
########################################################################################################################

def conv3d(x, kernels, stride=1, padding=0):
    """ 3D convolution (cross-correlation) via im2col
    :param x: Tensor [C_in, D, H, W]
    :param kernels: Tensor [C_out, C_in, kd, kh, kw]
    :param stride: integer stride on every axis
    :param padding: zero padding on every side
    :return: Tensor [C_out, D', H', W']
    """
    x, kernels = as_tensor(x), as_tensor(kernels)
    if x.ndim != 4 or kernels.ndim != 5 or kernels.shape[1] != x.shape[0]:
        raise ShapeError("conv3d: input {} does not match kernels {}".format(x.shape, kernels.shape))
    s, p = int(stride), int(padding)
    c_out, c_in, kd, kh, kw = kernels.shape
    xp = np.pad(x.data, ((0, 0), (p, p), (p, p), (p, p))) if p else x.data
    _, dp, hp, wp = xp.shape
    do, ho, wo = (dp - kd) // s + 1, (hp - kh) // s + 1, (wp - kw) // s + 1
    if min(do, ho, wo) < 1:
        raise ShapeError("conv3d: kernel {} larger than padded input {}".format(kernels.shape[2:], xp.shape[1:]))

    win = sliding_window_view(xp, (kd, kh, kw), axis=(1, 2, 3))[:, ::s, ::s, ::s][:, :do, :ho, :wo]
    cols = win.transpose(1, 2, 3, 0, 4, 5, 6).reshape(do * ho * wo, c_in * kd * kh * kw)
    wm = kernels.data.reshape(c_out, -1)
    out = cols.dot(wm.T).T.reshape(c_out, do, ho, wo)

    def backward(g):
        gm = g.reshape(c_out, -1).T
        gw = gm.T.dot(cols).reshape(kernels.shape)
        gcols = gm.dot(wm).reshape(do, ho, wo, c_in, kd, kh, kw)
        gxp = np.zeros(xp.shape)
        for a in range(kd):
            for b in range(kh):
                for c in range(kw):
                    gxp[:, a:a + s * (do - 1) + 1:s, b:b + s * (ho - 1) + 1:s, c:c + s * (wo - 1) + 1:s] += \
                        gcols[:, :, :, :, a, b, c].transpose(3, 0, 1, 2)
        gx = gxp[:, p:p + x.shape[1], p:p + x.shape[2], p:p + x.shape[3]] if p else gxp
        return gx, gw

    return _result(out, (x, kernels), backward, 'conv3d')


########################################################################################################################
# Composite operations
########################################################################################################################

def roll(x, shifts, axes):
    """ Cyclic shift along axes, built from slice and concat """
    for shift, axis in zip(shifts, axes):
        n = x.shape[axis]
        shift = int(shift) % n
        if shift == 0:
            continue
        head = [slice(None)] * x.ndim
        tail = [slice(None)] * x.ndim
        head[axis] = slice(n - shift, n)
        tail[axis] = slice(0, n - shift)
        x = concat([getitem(x, tuple(head)), getitem(x, tuple(tail))], axis)
    return x


def pixel_shuffle(x, factor, channels):
    """ [D, H, W, f^3 * C] channels-last tokens -> [f*D, f*H, f*W, C] """
    d, h, w, _ = x.shape
    f = factor
    y = reshape(x, (d, h, w, f, f, f, channels))
    y = y.permute(0, 3, 1, 4, 2, 5, 6)
    return reshape(y, (d * f, h * f, w * f, channels))


def l1_loss(pred, target):
    """ Mean absolute error against a constant target """
    target = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    diff = pred.data - target
    n = diff.size
    return _result(np.asarray(np.abs(diff).mean()), (pred,), lambda g: (g * np.sign(diff) / n,), 'l1')
