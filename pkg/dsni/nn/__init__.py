# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from .tensor import Tensor, Tape, no_grad, is_grad_enabled, as_tensor, add, sub, neg, mul, matmul, reshape, permute, \
                    getitem, pad, concat, tsum, mean, expand, take, tabs
from .functional import softmax, gelu, layernorm, layer_norm, linear, conv3d, roll, pixel_shuffle, l1_loss
from .gradcheck import gradcheck
from .optim import AdamW

__all__ = [
    # Main Classes
    'Tensor',
    'Tape',
    'AdamW',
    'no_grad',
    # Core operations
    'as_tensor',
    'add',
    'sub',
    'neg',
    'mul',
    'matmul',
    'reshape',
    'permute',
    'getitem',
    'pad',
    'concat',
    'tsum',
    'mean',
    'expand',
    'take',
    'tabs',
    # Functional
    'softmax',
    'gelu',
    'layernorm',
    'layer_norm',
    'linear',
    'conv3d',
    'roll',
    'pixel_shuffle',
    'l1_loss',
    # Methods
    'is_grad_enabled',
    'gradcheck'
]
