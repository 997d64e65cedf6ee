# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import logging
import numpy as np
from scipy import ndimage

from ..errors import EmptyMaskError, DimensionError
from .volume import CtVolume, EnumDomain, WindowSpec, denormalize


# 6-connectivity
_STRUCTURE = ndimage.generate_binary_structure(3, 1)


def threshold_mask(vol, hu_range, min_component_voxels=1, max_components=2):
    """ Kidney mask by intensity thresholding and connected-component filtering
    :param vol: CtVolume in HU (or MASK) domain
    :param hu_range: inclusive (low, high) range
    :param min_component_voxels: components smaller than this are dropped
    :param max_components: number of largest components kept
    :return: CtVolume in MASK domain
    """
    vol.require_domain(EnumDomain.HU, EnumDomain.MASK)
    low, high = hu_range
    raw = (vol.data >= low) & (vol.data <= high)
    labels, count = ndimage.label(raw, structure=_STRUCTURE)
    if count == 0:
        raise EmptyMaskError("No voxel inside HU range [{}, {}]".format(low, high))

    sizes = np.bincount(labels.ravel())[1:]
    # stable sort keeps the lower label first on ties
    order = np.argsort(-sizes, kind='stable')
    keep = [i + 1 for i in order[:max_components] if sizes[i] >= min_component_voxels]
    if not keep:
        raise EmptyMaskError("No component with at least {} voxels".format(min_component_voxels))

    logging.debug('Threshold mask: %d components, kept sizes %s', count, [int(sizes[i - 1]) for i in keep])
    return mask_volume(np.isin(labels, keep), vol)


def dice(a, b):
    """ Dice overlap of two binary masks (1.0 when both are empty) """
    a.require_dims(b)
    ma, mb = a.data > 0.5, b.data > 0.5
    total = int(ma.sum()) + int(mb.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(ma, mb).sum()) / total


def mask_volume(data, like):
    """ Wrap a boolean array as a MASK volume with the metadata of like """
    if data.shape != like.data.shape:
        raise DimensionError(found=data.shape, expected=like.data.shape)
    return CtVolume(data.astype(np.float64), like.spacing, like.origin, EnumDomain.MASK, like.phase)


class ThresholdMasker(object):
    """ Callable mask source for two-stage registration """

    def __init__(self, hu_range=(-40.0, 130.0), min_component_voxels=20, max_components=2, window=None):
        self.hu_range = tuple(float(v) for v in hu_range)
        self.min_component_voxels = int(min_component_voxels)
        self.max_components = int(max_components)
        self.window = WindowSpec() if window is None else window

    def __repr__(self):
        return "ThresholdMasker <HU: [{:g}, {:g}], min: {}>".format(*self.hu_range, self.min_component_voxels)

    def __call__(self, vol):
        if vol.domain == EnumDomain.NORM255:
            vol = denormalize(vol, self.window)
        return threshold_mask(vol, self.hu_range, self.min_component_voxels, self.max_components)
