# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import numpy as np

from ..errors import ConfigError, ShapeError, CheckpointError
from ..nn.tensor import Tensor, add, reshape, permute, concat, expand
from ..nn.functional import conv3d, linear, layer_norm, pixel_shuffle
from .swin import swin_block, bias_table_size
from .blocks import time_mlp, resblock, add_channel_bias


########################################################################################################################
# Configuration
########################################################################################################################

class SwinConfig(object):
    """ Layout of the two-stage Swin encoder-decoder """

    MERGE = 2

    @property
    def patch_volume(self):
        return int(np.prod(self.patch))

    @property
    def divisor(self):
        """ Every input axis must be a multiple of this """
        return tuple(p * self.MERGE for p in self.patch)

    def __init__(self, in_channels=3, out_channels=1, patch=(2, 2, 2), window=(4, 4, 4), shift=(2, 2, 2),
                 embed_dim=48, heads=(3, 6), depths=(2, 2), time_dim=48, mlp_ratio=2, resblocks=2):
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.patch = tuple(int(v) for v in patch)
        self.window = tuple(int(v) for v in window)
        self.shift = tuple(int(v) for v in shift)
        self.embed_dim = int(embed_dim)
        self.heads = tuple(int(v) for v in heads)
        self.depths = tuple(int(v) for v in depths)
        self.time_dim = int(time_dim)
        self.mlp_ratio = int(mlp_ratio)
        self.resblocks = int(resblocks)
        self.validate()

    def __repr__(self):
        return "SwinConfig <embed: {}, heads: {}, depths: {}, window: {}>".format(
            self.embed_dim, self.heads, self.depths, self.window)

    def __eq__(self, obj):
        return isinstance(obj, SwinConfig) and self.export() == obj.export()

    def validate(self):
        if len(self.patch) != 3 or len(self.window) != 3 or len(self.shift) != 3:
            raise ConfigError("Patch, window and shift need 3 values each")
        if len(self.heads) != 2 or len(self.depths) != 2:
            raise ConfigError("Two stages are required (heads and depths of length 2)")
        if len(set(self.patch)) != 1:
            raise ConfigError("Patch must be cubic, found {}".format(self.patch))
        if min(self.patch) < 1 or min(self.window) < 1 or min(self.heads) < 1 or min(self.depths) < 1:
            raise ConfigError("Patch, window, heads and depths must be positive")
        if any(s < 0 or s >= w for s, w in zip(self.shift, self.window)):
            raise ConfigError("Shift {} must be smaller than the window {}".format(self.shift, self.window))
        if self.embed_dim % self.heads[0] or (self.embed_dim * self.MERGE) % self.heads[1]:
            raise ConfigError("Embed dim {} not divisible by heads {}".format(self.embed_dim, self.heads))
        if self.time_dim < 2 or self.time_dim % 2:
            raise ConfigError("Time embedding dim must be even, found {}".format(self.time_dim))
        if self.in_channels < 1 or self.out_channels < 1 or self.mlp_ratio < 1 or self.resblocks < 0:
            raise ConfigError("Invalid channel count, MLP ratio or resblock count")

    def export(self):
        return {
            'in_channels': self.in_channels, 'out_channels': self.out_channels, 'patch': list(self.patch),
            'window': list(self.window), 'shift': list(self.shift), 'embed_dim': self.embed_dim,
            'heads': list(self.heads), 'depths': list(self.depths), 'time_dim': self.time_dim,
            'mlp_ratio': self.mlp_ratio, 'resblocks': self.resblocks
        }

    @classmethod
    def parse(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError("Invalid network config: {}".format(e))


########################################################################################################################
# Parameters
########################################################################################################################

# initialization kinds
_ONES, _ZEROS, _LINEAR, _CONV, _TABLE = 'ones', 'zeros', 'linear', 'conv', 'table'


def _block_shapes(prefix, dim, heads, window, ratio):
    hidden = dim * ratio
    return [
        (prefix + '.norm1.weight', (dim,), _ONES),
        (prefix + '.norm1.bias', (dim,), _ZEROS),
        (prefix + '.attn.qkv.weight', (dim, 3 * dim), _LINEAR),
        (prefix + '.attn.qkv.bias', (3 * dim,), _ZEROS),
        (prefix + '.attn.bias_table', (bias_table_size(window), heads), _TABLE),
        (prefix + '.attn.proj.weight', (dim, dim), _LINEAR),
        (prefix + '.attn.proj.bias', (dim,), _ZEROS),
        (prefix + '.norm2.weight', (dim,), _ONES),
        (prefix + '.norm2.bias', (dim,), _ZEROS),
        (prefix + '.mlp.fc1.weight', (dim, hidden), _LINEAR),
        (prefix + '.mlp.fc1.bias', (hidden,), _ZEROS),
        (prefix + '.mlp.fc2.weight', (hidden, dim), _LINEAR),
        (prefix + '.mlp.fc2.bias', (dim,), _ZEROS),
    ]


def _manifest(cfg):
    c, t, m = cfg.embed_dim, cfg.time_dim, SwinConfig.MERGE
    c2, mv = c * m, m ** 3
    out = [
        ('time.fc1.weight', (t, t), _LINEAR), ('time.fc1.bias', (t,), _ZEROS),
        ('time.fc2.weight', (t, t), _LINEAR), ('time.fc2.bias', (t,), _ZEROS),
        ('embed.conv.weight', (c, cfg.in_channels) + cfg.patch, _CONV), ('embed.conv.bias', (c,), _ZEROS),
        ('embed.norm.weight', (c,), _ONES), ('embed.norm.bias', (c,), _ZEROS),
        ('embed.time.weight', (t, c), _LINEAR), ('embed.time.bias', (c,), _ZEROS),
    ]
    for i in range(cfg.depths[0]):
        out += _block_shapes('stage1.block{}'.format(i), c, cfg.heads[0], cfg.window, cfg.mlp_ratio)
    out += [('merge.norm.weight', (mv * c,), _ONES), ('merge.norm.bias', (mv * c,), _ZEROS),
            ('merge.reduction.weight', (mv * c, c2), _LINEAR)]
    for i in range(cfg.depths[1]):
        out += _block_shapes('stage2.block{}'.format(i), c2, cfg.heads[1], cfg.window, cfg.mlp_ratio)
    out += [('expand.weight', (c2, mv * c), _LINEAR),
            ('fuse.weight', (2 * c, c), _LINEAR), ('fuse.bias', (c,), _ZEROS)]
    for i in range(cfg.resblocks):
        p = 'res{}'.format(i)
        out += [(p + '.norm1.weight', (c,), _ONES), (p + '.norm1.bias', (c,), _ZEROS),
                (p + '.conv1.weight', (c, c, 3, 3, 3), _CONV), (p + '.conv1.bias', (c,), _ZEROS),
                (p + '.time.weight', (t, c), _LINEAR), (p + '.time.bias', (c,), _ZEROS),
                (p + '.norm2.weight', (c,), _ONES), (p + '.norm2.bias', (c,), _ZEROS),
                (p + '.conv2.weight', (c, c, 3, 3, 3), _ZEROS), (p + '.conv2.bias', (c,), _ZEROS)]
    out += [('head.norm.weight', (c,), _ONES), ('head.norm.bias', (c,), _ZEROS),
            ('head.weight', (c, cfg.patch_volume * cfg.out_channels), _ZEROS),
            ('head.bias', (cfg.patch_volume * cfg.out_channels,), _ZEROS)]
    return out


def param_shapes(cfg):
    """ Ordered (name, shape) manifest of all learnable tensors """
    return [(name, shape) for name, shape, _ in _manifest(cfg)]


def parameter_count(cfg):
    return int(sum(np.prod(shape) for _, shape in param_shapes(cfg)))


def zero_init_names(cfg):
    """ Tensors that start at exactly zero so the residual paths and the head begin as identity / zero """
    return [name for name, _, kind in _manifest(cfg) if kind == _ZEROS and
            (name in ('head.weight', 'head.bias') or '.conv2.' in name)]


class DenoiserParams(object):
    """ Named learnable tensors of the denoiser """

    @property
    def size(self):
        return int(sum(t.size for t in self.tensors.values()))

    def __init__(self, tensors):
        """
        :param tensors: ordered dict name -> Tensor
        """
        self.tensors = dict(tensors)

    def __repr__(self):
        return "DenoiserParams <tensors: {}, values: {}>".format(len(self.tensors), self.size)

    def __len__(self):
        return len(self.tensors)

    def __iter__(self):
        return iter(self.tensors)

    def __contains__(self, name):
        return name in self.tensors

    def __getitem__(self, name):
        return self.tensors[name]

    def items(self):
        return self.tensors.items()

    def zero_grad(self):
        for t in self.tensors.values():
            t.grad = None

    def is_finite(self):
        return all(np.all(np.isfinite(t.data)) for t in self.tensors.values())

    def copy(self):
        return DenoiserParams((name, Tensor(t.data.copy(), t.requires_grad)) for name, t in self.tensors.items())

    def manifest(self):
        return [(name, tuple(t.shape)) for name, t in self.tensors.items()]

    def flatten(self):
        """ All values as one little-endian float32 vector in manifest order """
        return np.concatenate([t.data.astype('<f4').ravel() for t in self.tensors.values()])

    @classmethod
    def from_flat(cls, manifest, vector):
        total = int(sum(np.prod(shape) for _, shape in manifest))
        if vector.size != total:
            raise CheckpointError("Payload holds {} values, manifest needs {}".format(vector.size, total))
        tensors, offset = [], 0
        for name, shape in manifest:
            n = int(np.prod(shape))
            tensors.append((name, Tensor(vector[offset:offset + n].astype(np.float64).reshape(shape), True)))
            offset += n
        return cls(tensors)


def init_params(cfg, seed=0):
    """ Deterministic initialization
    :param cfg: SwinConfig
    :param seed: random seed
    :return: DenoiserParams
    """
    rng = np.random.default_rng(seed)
    tensors = []
    for name, shape, kind in _manifest(cfg):
        if kind == _ONES:
            data = np.ones(shape)
        elif kind == _ZEROS:
            data = np.zeros(shape)
        elif kind == _CONV:
            fan_in = int(np.prod(shape[1:]))
            data = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)
        else:
            data = np.clip(rng.normal(0.0, 0.02, size=shape), -0.04, 0.04)
        tensors.append((name, Tensor(data, requires_grad=True)))
    return DenoiserParams(tensors)


########################################################################################################################
# Network
########################################################################################################################

def _as_input(x, channels, name):
    x = x if isinstance(x, Tensor) else Tensor(x)
    if x.ndim != 4 or x.shape[0] != channels:
        raise ShapeError("{} must be [{}, D, H, W], found {}".format(name, channels, x.shape))
    return x


def denoise_eps(x_t, t, cond, params, cfg):
    """ Predict the noise of x_t at step t given the conditioning phases
    :param x_t: Tensor or array [1, D, H, W] noisy nephrographic volume in [-1, 1]
    :param t: step index
    :param cond: Tensor or array [2, D, H, W] non-contrast and excretory volumes in [-1, 1]
    :param params: DenoiserParams
    :param cfg: SwinConfig
    :return: Tensor [out_channels, D, H, W]
    """
    x_t = _as_input(x_t, cfg.out_channels, 'x_t')
    cond = _as_input(cond, cfg.in_channels - cfg.out_channels, 'cond')
    dims = x_t.shape[1:]
    if cond.shape[1:] != dims:
        raise ShapeError("x_t {} and cond {} differ spatially".format(x_t.shape, cond.shape))
    if any(n % k for n, k in zip(dims, cfg.divisor)):
        raise ShapeError("Input dims {} must be multiples of {}".format(dims, cfg.divisor))

    c, m = cfg.embed_dim, SwinConfig.MERGE
    temb = time_mlp(t, params, cfg.time_dim)

    # patch embedding, tokens kept channels-last [D, H, W, C]
    h = conv3d(concat([x_t, cond], 0), params['embed.conv.weight'], cfg.patch[0], 0)
    h = add_channel_bias(h, params['embed.conv.bias'])
    h = layer_norm(permute(h, (1, 2, 3, 0)), params['embed.norm.weight'], params['embed.norm.bias'])
    tp = linear(reshape(temb, (1, -1)), params['embed.time.weight'], params['embed.time.bias'])
    h = add(h, expand(reshape(tp, (c,)), h.shape))

    zero = (0, 0, 0)
    for i in range(cfg.depths[0]):
        h = swin_block(h, params, 'stage1.block{}'.format(i), cfg.heads[0], cfg.window, cfg.shift if i % 2 else zero)
    skip = h

    # patch merging
    d2, h2, w2, _ = h.shape
    h = reshape(h, (d2 // m, m, h2 // m, m, w2 // m, m, c))
    h = reshape(permute(h, (0, 2, 4, 1, 3, 5, 6)), (d2 // m, h2 // m, w2 // m, m ** 3 * c))
    h = layer_norm(h, params['merge.norm.weight'], params['merge.norm.bias'])
    h = linear(h, params['merge.reduction.weight'])

    for i in range(cfg.depths[1]):
        h = swin_block(h, params, 'stage2.block{}'.format(i), cfg.heads[1], cfg.window, cfg.shift if i % 2 else zero)

    # expand back to patch resolution and fuse the skip connection
    h = pixel_shuffle(linear(h, params['expand.weight']), m, c)
    h = linear(concat([h, skip], -1), params['fuse.weight'], params['fuse.bias'])

    h = permute(h, (3, 0, 1, 2))
    for i in range(cfg.resblocks):
        h = resblock(h, params, 'res{}'.format(i), temb)

    h = layer_norm(permute(h, (1, 2, 3, 0)), params['head.norm.weight'], params['head.norm.bias'])
    h = linear(h, params['head.weight'], params['head.bias'])
    return _unpatch(h, cfg.patch, cfg.out_channels)


def _unpatch(h, patch, channels):
    """ [D', H', W', p^3 * C] -> [C, D' * pd, H' * ph, W' * pw] """
    d, hh, w, _ = h.shape
    pd, ph, pw = patch
    y = reshape(h, (d, hh, w, pd, ph, pw, channels))
    y = permute(y, (6, 0, 3, 1, 4, 2, 5))
    return reshape(y, (channels, d * pd, hh * ph, w * pw))
