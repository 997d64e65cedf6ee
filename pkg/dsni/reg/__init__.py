# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from .affine import AffineTransform, voxel_grid, trilinear, resample
from .register import EnumObjective, RegistrationConfig, RegistrationResult, downsample, objective_and_gradient, \
                      register_affine, register_phases, two_stage_register

__all__ = [
    # Main Classes
    'AffineTransform',
    'RegistrationConfig',
    'RegistrationResult',
    # Enums
    'EnumObjective',
    # Methods
    'voxel_grid',
    'trilinear',
    'resample',
    'downsample',
    'objective_and_gradient',
    'register_affine',
    'register_phases',
    'two_stage_register'
]
