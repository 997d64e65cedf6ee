# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import numpy as np

from ..errors import ConfigError, ShapeError
from ..nn.tensor import Tensor, add, reshape, permute, expand
from ..nn.functional import gelu, linear, layer_norm, conv3d


def sinusoidal_time_embed(t, dim):
    """ Interleaved sin / cos embedding of a diffusion step index
    :param t: step index >= 0
    :param dim: even embedding size
    :return: ndarray [dim], entries 2i = sin(t * f_i), 2i + 1 = cos(t * f_i) with f_i = 10000^(-2i / dim)
    """
    if dim < 2 or dim % 2:
        raise ConfigError("Time embedding size must be even, found {}".format(dim))
    if t < 0:
        raise ConfigError("Step index must be non-negative, found {}".format(t))
    freqs = np.power(10000.0, -np.arange(0, dim, 2, dtype=np.float64) / dim)
    out = np.empty(dim)
    out[0::2] = np.sin(t * freqs)
    out[1::2] = np.cos(t * freqs)
    return out


def time_mlp(t, params, dim):
    """ Embedded step index -> Tensor [dim] """
    emb = Tensor(sinusoidal_time_embed(t, dim)[None])
    h = gelu(linear(emb, params['time.fc1.weight'], params['time.fc1.bias']))
    return reshape(linear(h, params['time.fc2.weight'], params['time.fc2.bias']), (dim,))


def channel_norm(x, weight, bias):
    """ Layer norm over the channels of a [C, D, H, W] tensor """
    return permute(layer_norm(permute(x, (1, 2, 3, 0)), weight, bias), (3, 0, 1, 2))


def add_channel_bias(x, bias):
    """ x [C, D, H, W] + bias [C] """
    return add(x, expand(reshape(bias, (x.shape[0], 1, 1, 1)), x.shape))


def resblock(x, params, prefix, time_embed):
    """ x + ConvBlock(x, t): norm, gelu, conv, time projection, norm, gelu, conv
    :param x: Tensor [C, D, H, W]
    :param params: DenoiserParams or dict of Tensors
    :param prefix: parameter name prefix
    :param time_embed: Tensor [T] output of the time MLP
    :return: Tensor [C, D, H, W]
    """
    c = x.shape[0]
    if params[prefix + '.conv1.weight'].shape[1] != c:
        raise ShapeError("resblock {}: {} channels, parameters expect {}".format(
            prefix, c, params[prefix + '.conv1.weight'].shape[1]))
    h = gelu(channel_norm(x, params[prefix + '.norm1.weight'], params[prefix + '.norm1.bias']))
    h = add_channel_bias(conv3d(h, params[prefix + '.conv1.weight'], 1, 1), params[prefix + '.conv1.bias'])
    proj = linear(reshape(gelu(time_embed), (1, -1)), params[prefix + '.time.weight'], params[prefix + '.time.bias'])
    h = add_channel_bias(h, reshape(proj, (c,)))
    h = gelu(channel_norm(h, params[prefix + '.norm2.weight'], params[prefix + '.norm2.bias']))
    h = add_channel_bias(conv3d(h, params[prefix + '.conv2.weight'], 1, 1), params[prefix + '.conv2.bias'])
    return add(x, h)
