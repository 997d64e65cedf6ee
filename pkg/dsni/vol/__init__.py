# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from .volume import EnumDomain, EnumPhase, WindowSpec, CtVolume, PhaseTriple, CropWindow, window_normalize, \
                    denormalize, match_slice_extent, crop_window, apply_crop, crop_to_mask
from .mask import threshold_mask, dice, mask_volume, ThresholdMasker
from .phantom import EnumLesion, KidneySpec, LesionSpec, PhantomSpec, PhantomTruth, generate_phantom, \
                     random_phantom_spec

__all__ = [
    # Main Classes
    'CtVolume',
    'PhaseTriple',
    'WindowSpec',
    'CropWindow',
    # Phantom
    'KidneySpec',
    'LesionSpec',
    'PhantomSpec',
    'PhantomTruth',
    # Enums
    'EnumDomain',
    'EnumPhase',
    'EnumLesion',
    # Masker
    'ThresholdMasker',
    # Methods
    'window_normalize',
    'denormalize',
    'match_slice_extent',
    'crop_window',
    'apply_crop',
    'crop_to_mask',
    'threshold_mask',
    'dice',
    'mask_volume',
    'generate_phantom',
    'random_phantom_spec'
]
