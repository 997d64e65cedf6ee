# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from .schedule import EnumTarget, MAX_BETA, NoiseSchedule, make_schedule, default_schedule, q_sample, eps_from_x0
from .sampler import EnumVariance, SamplerConfig, Denoiser, to_model_domain, from_model_domain, posterior_mean, \
                     p_sample_step, p_sample_loop, window_starts, pad_to_divisor, synthesize
from .augment import AugmentConfig, sliding_windows, rotate_volume, flip_volume, slab, augment
from .trainer import TrainConfig, Trainer, make_items, train_step

__all__ = [
    # Main Classes
    'NoiseSchedule',
    'Denoiser',
    'Trainer',
    # Configs
    'SamplerConfig',
    'TrainConfig',
    'AugmentConfig',
    # Enums
    'EnumTarget',
    'EnumVariance',
    # Schedule
    'MAX_BETA',
    'make_schedule',
    'default_schedule',
    'q_sample',
    'eps_from_x0',
    # Sampling
    'to_model_domain',
    'from_model_domain',
    'posterior_mean',
    'p_sample_step',
    'p_sample_loop',
    'window_starts',
    'pad_to_divisor',
    'synthesize',
    # Augmentation
    'sliding_windows',
    'rotate_volume',
    'flip_volume',
    'slab',
    'augment',
    # Training
    'make_items',
    'train_step'
]
