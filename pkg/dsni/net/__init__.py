# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from .swin import effective_window, window_partition, window_reverse, relative_position_index, bias_table_size, \
                  shift_attention_mask, window_attention, shifted_window_attention, swin_block
from .blocks import sinusoidal_time_embed, time_mlp, channel_norm, resblock
from .denoiser import SwinConfig, DenoiserParams, param_shapes, parameter_count, zero_init_names, init_params, \
                      denoise_eps

__all__ = [
    # Main Classes
    'SwinConfig',
    'DenoiserParams',
    # Swin
    'effective_window',
    'window_partition',
    'window_reverse',
    'relative_position_index',
    'bias_table_size',
    'shift_attention_mask',
    'window_attention',
    'shifted_window_attention',
    'swin_block',
    # Blocks
    'sinusoidal_time_embed',
    'time_mlp',
    'channel_norm',
    'resblock',
    # Methods
    'param_shapes',
    'parameter_count',
    'zero_init_names',
    'init_params',
    'denoise_eps'
]
