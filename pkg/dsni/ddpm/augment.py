# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import numpy as np

from ..errors import ConfigError
from ..vol.volume import PhaseTriple

# array axis of every flip direction ([z, y, x] layout)
FLIP_AXES = {'x': 2, 'y': 1, 'z': 0}


class AugmentConfig(object):
    """ Sub-volume extraction and the rotation / flip variants added per sub-volume """

    def __init__(self, window=32, stride=8, rotations=(0,), flips=()):
        """
        :param window: sub-volume length in slices
        :param stride: z step between sub-volumes
        :param rotations: in-plane rotations in degrees, multiples of 90
        :param flips: axes ('x', 'y', 'z') flipped in extra variants
        """
        if window < 1 or stride < 1:
            raise ConfigError("Augment window and stride must be positive")
        if any(r % 90 for r in rotations):
            raise ConfigError("Rotations must be multiples of 90 degrees, found {}".format(rotations))
        if any(f not in FLIP_AXES for f in flips):
            raise ConfigError("Flip axes must be among x, y, z, found {}".format(flips))
        self.window = int(window)
        self.stride = int(stride)
        self.rotations = tuple(int(r) % 360 for r in rotations)
        self.flips = tuple(flips)

    def __repr__(self):
        return "AugmentConfig <window: {}, stride: {}, rotations: {}, flips: {}>".format(
            self.window, self.stride, self.rotations, self.flips)

    @property
    def variants(self):
        return len(self.rotations) + len(self.flips)


def sliding_windows(nz, window, stride):
    """ Start slices of the z windows, floor((nz - window) / stride) + 1 of them """
    if window > nz:
        raise ConfigError("Window of {} slices exceeds the volume ({} slices)".format(window, nz))
    return list(range(0, nz - window + 1, stride))


def rotate_volume(vol, degrees):
    """ In-plane rotation by a multiple of 90 degrees """
    k = (int(degrees) // 90) % 4
    if k == 0:
        return vol.copy_with()
    data = np.ascontiguousarray(np.rot90(vol.data, k, axes=(1, 2)))
    out = vol.copy_with(data=data)
    if k % 2:
        sx, sy, sz = vol.spacing
        out.spacing = (sy, sx, sz)
    return out


def flip_volume(vol, axis):
    return vol.copy_with(data=np.ascontiguousarray(np.flip(vol.data, FLIP_AXES[axis])))


def slab(vol, z0, depth):
    """ Slices z0 .. z0 + depth - 1 with the origin moved accordingly """
    origin = (vol.origin[0], vol.origin[1], vol.origin[2] + z0 * vol.spacing[2])
    return vol.copy_with(data=vol.data[z0:z0 + depth].copy(), origin=origin)


def augment(triple, cfg=None):
    """ Sliding z windows with rotation and flip variants applied jointly to all phases and masks
    :param triple: PhaseTriple
    :param cfg: AugmentConfig
    :return: list of PhaseTriple
    """
    cfg = AugmentConfig() if cfg is None else cfg
    nx, ny, nz = triple.noncontrast.dims
    if nx != ny and any((r // 90) % 2 for r in cfg.rotations):
        raise ConfigError("Odd quarter rotations need square slices, found {}x{}".format(nx, ny))

    out = []
    for z0 in sliding_windows(nz, cfg.window, cfg.stride):
        sub = triple.map(lambda v: slab(v, z0, cfg.window))
        for r in cfg.rotations:
            out.append(sub.map(lambda v: rotate_volume(v, r)))
        for axis in cfg.flips:
            out.append(sub.map(lambda v: flip_volume(v, axis)))
    return out
