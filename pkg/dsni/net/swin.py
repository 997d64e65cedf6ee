# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from functools import lru_cache

import numpy as np

from ..errors import ShapeError
from ..nn.tensor import Tensor, add, reshape, permute, pad, getitem, matmul, mul, take, expand
from ..nn.functional import softmax, gelu, linear, layer_norm, roll


########################################################################################################################
# Window helpers
########################################################################################################################

def effective_window(dims, window, shift):
    """ Per-axis window and shift for a token grid: an axis not longer than the window uses its extent and no shift """
    eff_w = tuple(min(w, d) for w, d in zip(window, dims))
    eff_s = tuple(0 if d <= w else s for w, s, d in zip(window, shift, dims))
    return eff_w, eff_s


def window_partition(x, window):
    """ Tensor [C, D, H, W] -> windows [num_windows, window_volume, C] """
    c, d, h, w = x.shape
    wd, wh, ww = window
    if d % wd or h % wh or w % ww:
        raise ShapeError("Dims {} are not divisible by window {}".format((d, h, w), tuple(window)))
    y = reshape(x, (c, d // wd, wd, h // wh, wh, w // ww, ww))
    y = permute(y, (1, 3, 5, 2, 4, 6, 0))
    return reshape(y, (-1, wd * wh * ww, c))


def window_reverse(windows, window, dims):
    """ Windows [num_windows, window_volume, C] -> Tensor [C, D, H, W] """
    d, h, w = dims
    wd, wh, ww = window
    c = windows.shape[-1]
    if d % wd or h % wh or w % ww or windows.shape[0] != (d // wd) * (h // wh) * (w // ww):
        raise ShapeError("Windows {} do not tile dims {}".format(windows.shape, tuple(dims)))
    y = reshape(windows, (d // wd, h // wh, w // ww, wd, wh, ww, c))
    y = permute(y, (6, 0, 3, 1, 4, 2, 5))
    return reshape(y, (c, d, h, w))


@lru_cache(maxsize=64)
def relative_position_index(window, table_window):
    """ Index into the bias table for every (query, key) pair of a window
    :param window: effective window (d, h, w)
    :param table_window: configured window sizing the table
    :return: int array [Wv, Wv]
    """
    coords = np.stack(np.meshgrid(*[np.arange(n) for n in window], indexing='ij')).reshape(3, -1)
    rel = coords[:, :, None] - coords[:, None, :]
    rel = rel + np.array(table_window)[:, None, None] - 1
    _, sh, sw = (2 * n - 1 for n in table_window)
    index = rel[0] * sh * sw + rel[1] * sw + rel[2]
    index.setflags(write=False)
    return index


def bias_table_size(window):
    return int(np.prod([2 * n - 1 for n in window]))


@lru_cache(maxsize=64)
def shift_attention_mask(dims, window, shift):
    """ Additive mask [num_windows, Wv, Wv] (0 or -inf) for cyclically shifted windows, None without shift """
    if not any(shift):
        return None
    labels = np.zeros(dims)
    count = 0
    regions = []
    for n, w, s in zip(dims, window, shift):
        regions.append((slice(0, n - w), slice(n - w, n - s), slice(n - s, n)) if s else (slice(0, n),))
    for sd in regions[0]:
        for sh in regions[1]:
            for sw in regions[2]:
                labels[sd, sh, sw] = count
                count += 1
    lw = window_partition(Tensor(labels[None]), window).data[:, :, 0]
    mask = np.where(lw[:, :, None] == lw[:, None, :], 0.0, -np.inf)
    mask.setflags(write=False)
    return mask


########################################################################################################################
# Attention
########################################################################################################################

def window_attention(windows, params, prefix, heads, window, table_window, mask=None, return_weights=False):
    """ Multi-head self-attention inside every window with relative-position bias
    :param windows: Tensor [nW, Wv, C]
    :param params: DenoiserParams or dict of Tensors
    :param prefix: parameter name prefix of the attention block
    :param heads: number of heads
    :param window: effective window
    :param table_window: configured window (bias table layout)
    :param mask: optional additive mask [nW, Wv, Wv]
    :return: Tensor [nW, Wv, C] (and attention weights [nW, heads, Wv, Wv])
    """
    nw, wv, c = windows.shape
    dh = c // heads
    qkv = linear(windows, params[prefix + '.qkv.weight'], params[prefix + '.qkv.bias'])
    qkv = permute(reshape(qkv, (nw, wv, 3, heads, dh)), (2, 0, 3, 1, 4))
    q = reshape(mul(getitem(qkv, 0), dh ** -0.5), (nw * heads, wv, dh))
    k = reshape(getitem(qkv, 1), (nw * heads, wv, dh))
    v = reshape(getitem(qkv, 2), (nw * heads, wv, dh))

    logits = reshape(matmul(q, permute(k, (0, 2, 1))), (nw, heads, wv, wv))
    index = relative_position_index(tuple(window), tuple(table_window))
    bias = take(params[prefix + '.bias_table'], index.reshape(-1))
    bias = permute(reshape(bias, (wv, wv, heads)), (2, 0, 1))
    logits = add(logits, expand(reshape(bias, (1, heads, wv, wv)), logits.shape))
    if mask is not None:
        logits = add(logits, Tensor(np.broadcast_to(mask[:, None], logits.shape)))
    attn = softmax(logits, -1)

    out = matmul(reshape(attn, (nw * heads, wv, wv)), v)
    out = reshape(permute(reshape(out, (nw, heads, wv, dh)), (0, 2, 1, 3)), (nw, wv, c))
    out = linear(out, params[prefix + '.proj.weight'], params[prefix + '.proj.bias'])
    return (out, attn) if return_weights else out


def shifted_window_attention(x, params, prefix, heads, window, shift):
    """ Cyclic shift, windowed attention with the shift mask, inverse shift
    :param x: Tensor [C, D, H, W]
    :param window: configured window
    :param shift: configured shift (0 for regular windows)
    :return: Tensor [C, D, H, W]
    """
    c, d, h, w = x.shape
    eff_w, eff_s = effective_window((d, h, w), window, shift)
    padded = tuple(-(-n // k) * k for n, k in zip((d, h, w), eff_w))
    if padded != (d, h, w):
        x = pad(x, [(0, 0)] + [(0, p - n) for p, n in zip(padded, (d, h, w))])
    if any(eff_s):
        x = roll(x, [-s for s in eff_s], (1, 2, 3))

    mask = shift_attention_mask(padded, eff_w, eff_s)
    y = window_attention(window_partition(x, eff_w), params, prefix, heads, eff_w, window, mask)
    y = window_reverse(y, eff_w, padded)

    if any(eff_s):
        y = roll(y, list(eff_s), (1, 2, 3))
    if padded != (d, h, w):
        y = getitem(y, (slice(None), slice(0, d), slice(0, h), slice(0, w)))
    return y


def swin_block(x, params, prefix, heads, window, shift):
    """ Pre-norm Swin block on channels-last tokens [D, H, W, C] """
    h = layer_norm(x, params[prefix + '.norm1.weight'], params[prefix + '.norm1.bias'])
    h = shifted_window_attention(permute(h, (3, 0, 1, 2)), params, prefix + '.attn', heads, window, shift)
    x = add(x, permute(h, (1, 2, 3, 0)))
    h = layer_norm(x, params[prefix + '.norm2.weight'], params[prefix + '.norm2.bias'])
    h = linear(gelu(linear(h, params[prefix + '.mlp.fc1.weight'], params[prefix + '.mlp.fc1.bias'])),
               params[prefix + '.mlp.fc2.weight'], params[prefix + '.mlp.fc2.bias'])
    return add(x, h)
