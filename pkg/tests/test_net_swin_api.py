# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import pytest
import numpy as np

from dsni import net, nn
from dsni.errors import ConfigError, ShapeError

TINY = dict(embed_dim=12, heads=(1, 2), depths=(1, 1), time_dim=8, resblocks=1)


def setup_module(module):
    # Prepare miniature network
    global cfg, params

    cfg = net.SwinConfig(**TINY)
    params = net.init_params(cfg, seed=0)


def random_input(shape, seed=0):
    return nn.Tensor(np.random.default_rng(seed).uniform(-1.0, 1.0, size=shape))


def test_window_partition_single():
    x = random_input((2, 4, 4, 4))
    windows = net.window_partition(x, (4, 4, 4))
    assert windows.shape == (1, 64, 2)
    assert np.array_equal(windows.data[0, :, 1], x.data[1].ravel())


def test_window_partition_reverse():
    x = random_input((3, 8, 4, 4))
    windows = net.window_partition(x, (4, 4, 4))
    assert windows.shape == (2, 64, 3)
    assert np.array_equal(net.window_reverse(windows, (4, 4, 4), (8, 4, 4)).data, x.data)
    with pytest.raises(ShapeError):
        net.window_partition(random_input((3, 6, 4, 4)), (4, 4, 4))


def test_effective_window():
    assert net.effective_window((2, 8, 4), (4, 4, 4), (2, 2, 2)) == ((2, 4, 4), (0, 2, 0))


def test_relative_position_index():
    index = net.relative_position_index((4, 4, 4), (4, 4, 4))
    assert index.shape == (64, 64)
    assert np.all(np.diag(index) == 3 * 49 + 3 * 7 + 3)
    assert index.min() == 0 and index.max() == net.bias_table_size((4, 4, 4)) - 1


def test_shift_attention_mask():
    assert net.shift_attention_mask((8, 8, 8), (4, 4, 4), (0, 0, 0)) is None
    mask = net.shift_attention_mask((8, 8, 8), (4, 4, 4), (2, 2, 2))
    assert mask.shape == (8, 64, 64)
    # the first window holds a single region, the last one eight
    assert np.all(mask[0] == 0.0)
    assert np.isinf(mask[-1]).any()
    assert np.all(np.diagonal(mask, axis1=1, axis2=2) == 0.0)


def test_attention_weights():
    x = random_input((12, 8, 4, 4), seed=1)
    mask = net.shift_attention_mask((8, 4, 4), (4, 4, 4), (2, 0, 0))
    windows = net.window_partition(x, (4, 4, 4))
    out, attn = net.window_attention(windows, params, 'stage1.block0.attn', 1, (4, 4, 4), (4, 4, 4), mask,
                                     return_weights=True)
    assert out.shape == windows.shape
    assert attn.shape == (2, 1, 64, 64)
    assert np.allclose(attn.data.sum(axis=-1), 1.0, rtol=0, atol=1e-12)
    assert np.all(attn.data[:, 0][np.isinf(mask)] == 0.0)


def test_time_embedding():
    e = net.sinusoidal_time_embed(0, 8)
    assert e[0::2].tolist() == [0.0] * 4
    assert e[1::2].tolist() == [1.0] * 4
    for t in (0, 17, 999):
        assert np.sum(net.sinusoidal_time_embed(t, 48) ** 2) == pytest.approx(24.0)
    with pytest.raises(ConfigError):
        net.sinusoidal_time_embed(1, 7)


def test_fresh_resblock_identity():
    x = random_input((12, 4, 4, 4), seed=2)
    temb = net.time_mlp(5, params, cfg.time_dim)
    assert np.array_equal(net.resblock(x, params, 'res0', temb).data, x.data)


def test_fresh_network_zero():
    x_t = random_input((1, 8, 8, 8), seed=3)
    cond = random_input((2, 8, 8, 8), seed=4)
    out = net.denoise_eps(x_t, 10, cond, params, cfg)
    assert out.shape == (1, 8, 8, 8)
    assert np.all(out.data == 0.0)
    assert set(net.zero_init_names(cfg)) == {'head.weight', 'head.bias', 'res0.conv2.weight', 'res0.conv2.bias'}


def test_output_shape_non_cubic():
    params2 = perturbed(seed=5)
    out = net.denoise_eps(random_input((1, 8, 12, 4)), 3, random_input((2, 8, 12, 4)), params2, cfg)
    assert out.shape == (1, 8, 12, 4)
    assert np.all(np.isfinite(out.data))
    assert not np.all(out.data == 0.0)


def test_input_shape_errors():
    with pytest.raises(ShapeError):
        net.denoise_eps(random_input((1, 6, 8, 8)), 1, random_input((2, 6, 8, 8)), params, cfg)
    with pytest.raises(ShapeError):
        net.denoise_eps(random_input((1, 8, 8, 8)), 1, random_input((3, 8, 8, 8)), params, cfg)


def test_config():
    default = net.SwinConfig()
    assert default.divisor == (4, 4, 4)
    assert net.parameter_count(default) == 535766
    assert net.SwinConfig.parse(default.export()) == default
    with pytest.raises(ConfigError):
        net.SwinConfig(embed_dim=10, heads=(3, 6))
    with pytest.raises(ConfigError):
        net.SwinConfig(shift=(4, 4, 4))
    with pytest.raises(ConfigError):
        net.SwinConfig(patch=(2, 2, 1))
    with pytest.raises(ConfigError):
        net.SwinConfig.parse({'depth': 3})


def test_init_params():
    again = net.init_params(cfg, seed=0)
    assert again.manifest() == net.param_shapes(cfg)
    assert all(np.array_equal(again[name].data, params[name].data) for name in params)
    assert again.size == net.parameter_count(cfg)
    flat = again.flatten()
    restored = net.DenoiserParams.from_flat(again.manifest(), flat)
    assert np.array_equal(restored.flatten(), flat)


def perturbed(seed):
    """ Copy of the miniature parameters with the zero-initialized tensors randomized """
    out = params.copy()
    rng = np.random.default_rng(seed)
    for name in net.zero_init_names(cfg):
        out[name].data[...] = rng.normal(0.0, 0.1, size=out[name].shape)
    return out


def test_network_gradcheck():
    p = perturbed(seed=6)
    cond = random_input((2, 4, 4, 4), seed=7)
    x = nn.Tensor(random_input((1, 4, 4, 4), seed=8).data, requires_grad=True)
    assert nn.gradcheck(lambda v: net.denoise_eps(v, 7, cond, p, cfg), x) < 1e-5


def test_every_parameter_gets_gradient():
    p = perturbed(seed=12)
    # 8^3 tokens reach every relative position of the 4^3 window
    x_t = random_input((1, 16, 16, 16), seed=13)
    cond = random_input((2, 16, 16, 16), seed=14)
    target = np.random.default_rng(15).standard_normal((1, 16, 16, 16))
    nn.l1_loss(net.denoise_eps(x_t, 9, cond, p, cfg), target).backward()

    dim = {'stage1': cfg.embed_dim, 'stage2': cfg.embed_dim * net.SwinConfig.MERGE}
    for name, tensor in p.items():
        assert tensor.grad is not None, name
        grad = tensor.grad
        if name.endswith('.attn.qkv.bias'):
            # key bias cancels in the softmax, query and value parts must train
            d = dim[name.split('.')[0]]
            assert np.any(grad[:d] != 0.0), name
            assert np.any(grad[2 * d:] != 0.0), name
        else:
            assert np.any(grad != 0.0), name


def test_shifted_attention_gradcheck():
    p = perturbed(seed=9)
    x = random_input((12, 8, 4, 4), seed=10)
    table = p['stage1.block0.attn.bias_table']
    table.data[...] = np.random.default_rng(11).normal(0.0, 0.5, size=table.shape)

    def f(t):
        local = dict(p.items())
        local['stage1.block0.attn.bias_table'] = t
        return net.shifted_window_attention(x, local, 'stage1.block0.attn', 1, (4, 4, 4), (2, 2, 2))

    assert nn.gradcheck(f, table) < 1e-5
