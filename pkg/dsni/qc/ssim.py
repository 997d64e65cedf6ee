# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError, ConfigError
from ..vol.volume import EnumDomain


class SsimConfig(object):
    """ Uniform-window 3D SSIM parameters """

    @property
    def c1(self):
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self):
        return (self.k2 * self.data_range) ** 2

    def __init__(self, window=7, k1=0.01, k2=0.03, data_range=255.0):
        if window < 1 or window % 2 == 0:
            raise ConfigError("SSIM window must be a positive odd size, found {}".format(window))
        if k1 <= 0 or k2 <= 0:
            raise ConfigError("SSIM constants K1 and K2 must be positive")
        self.window = int(window)
        self.k1 = float(k1)
        self.k2 = float(k2)
        self.data_range = float(data_range)

    def __repr__(self):
        return "SsimConfig <window: {0}x{0}x{0}, K1: {1:g}, K2: {2:g}, L: {3:g}>".format(
            self.window, self.k1, self.k2, self.data_range)

    def export(self):
        return {'window': self.window, 'kernel': 'box', 'k1': self.k1, 'k2': self.k2, 'data_range': self.data_range}


def box_mean(data, window):
    """ Mean over every valid window^3 position, summed one axis at a time """
    out = data
    for axis in range(3):
        out = sliding_window_view(out, window, axis=axis).sum(axis=-1)
    return out / float(window ** 3)


def ssim_map(a, b, cfg=None):
    """ Local SSIM values of two equally shaped arrays at every valid window position """
    cfg = SsimConfig() if cfg is None else cfg
    w = cfg.window
    mu_a, mu_b = box_mean(a, w), box_mean(b, w)
    var_a = box_mean(a * a, w) - mu_a * mu_a
    var_b = box_mean(b * b, w) - mu_b * mu_b
    cov = box_mean(a * b, w) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + cfg.c1) * (2.0 * cov + cfg.c2)
    den = (mu_a * mu_a + mu_b * mu_b + cfg.c1) * (var_a + var_b + cfg.c2)
    return num / den


def ssim3d(a, b, cfg=None):
    """ Mean structural similarity of two Norm255 volumes
    :param a: CtVolume
    :param b: CtVolume with the same dims
    :param cfg: SsimConfig
    :return: float in [-1, 1]
    """
    cfg = SsimConfig() if cfg is None else cfg
    a.require_domain(EnumDomain.NORM255)
    b.require_domain(EnumDomain.NORM255)
    a.require_dims(b)
    if min(a.dims) < cfg.window:
        raise DimensionError("Volume {} is smaller than the SSIM window {}".format(a.dims, cfg.window))
    return float(np.mean(ssim_map(a.data, b.data, cfg)))
