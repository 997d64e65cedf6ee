# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import numpy as np

from easy_enum import Enum
from ..errors import ConfigError, ShapeError


class EnumTarget(Enum):
    """ Quantity regressed by the network """
    EPS = (0, 'Added noise')
    X0 = (1, 'Clean volume')


TARGET_NAMES = {EnumTarget.EPS: 'eps', EnumTarget.X0: 'x0'}

# upper bound of the rescaled betas of short default chains
MAX_BETA = 0.5


class NoiseSchedule(object):
    """ Variance schedule with tables indexed by step t = 0 .. T (t = 0 is the clean state) """

    @property
    def T(self):
        return len(self.betas) - 1

    def __init__(self, betas):
        """
        :param betas: beta_1 .. beta_T, each in [0, 1)
        """
        betas = np.asarray(betas, dtype=np.float64).reshape(-1)
        if betas.size < 1 or np.any(betas < 0) or np.any(betas >= 1):
            raise ConfigError("Betas must be in [0, 1)")
        self.betas = np.concatenate([[0.0], betas])
        self.alphas = 1.0 - self.betas
        self.alpha_bars = np.ones_like(self.betas)
        for t in range(1, len(self.betas)):
            self.alpha_bars[t] = self.alpha_bars[t - 1] * self.alphas[t]
        self.posterior_variance = np.zeros_like(self.betas)
        for t in range(1, len(self.betas)):
            den = 1.0 - self.alpha_bars[t]
            if den > 0:
                self.posterior_variance[t] = self.betas[t] * (1.0 - self.alpha_bars[t - 1]) / den

    def __repr__(self):
        return "NoiseSchedule <T: {}, beta: {:g} .. {:g}>".format(self.T, self.betas[1], self.betas[-1])

    def check_step(self, t):
        if not 1 <= t <= self.T:
            raise ConfigError("Step {} outside 1 .. {}".format(t, self.T))

    def respace(self, steps):
        """ Schedule over a subset of steps for stride sampling
        :param steps: number of sampling steps
        :return: (NoiseSchedule, original step of every new step, index 0 -> 0)
        """
        if not 1 <= steps <= self.T:
            raise ConfigError("Sampling steps must be in 1 .. {}, found {}".format(self.T, steps))
        taus = np.unique(np.round(np.linspace(1, self.T, steps)).astype(np.int64))
        prev = np.concatenate([[1.0], self.alpha_bars[taus[:-1]]])
        betas = 1.0 - self.alpha_bars[taus] / prev
        return NoiseSchedule(betas), np.concatenate([[0], taus])

    def export(self):
        return {'T': self.T, 'beta_1': float(self.betas[1]), 'beta_T': float(self.betas[-1])}


def make_schedule(T, beta_1, beta_T):
    """ Linear beta schedule
    :param T: number of steps
    :param beta_1: first beta
    :param beta_T: last beta
    :return: NoiseSchedule
    """
    if T < 1 or not 0 < beta_1 <= beta_T < 1:
        raise ConfigError("Schedule needs T >= 1 and 0 < beta_1 <= beta_T < 1, found {}, {}, {}".format(
            T, beta_1, beta_T))
    return NoiseSchedule(np.linspace(beta_1, beta_T, int(T)))


def default_schedule(T=1000):
    """ Linear schedule rescaled so shorter chains keep a comparable total corruption, betas capped at MAX_BETA """
    scale = 1000.0 / T
    beta_T = min(0.02 * scale, MAX_BETA)
    return make_schedule(T, min(1e-4 * scale, beta_T), beta_T)


def q_sample(x0, t, eps, schedule):
    """ Closed-form forward corruption x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps """
    x0, eps = np.asarray(x0, dtype=np.float64), np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ShapeError("Noise shape {} does not match {}".format(eps.shape, x0.shape))
    schedule.check_step(t)
    ab = schedule.alpha_bars[t]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def eps_from_x0(x_t, x0, t, schedule):
    """ Noise implied by a clean-volume estimate """
    ab = schedule.alpha_bars[t]
    if ab >= 1.0:
        return np.zeros_like(x_t)
    return (x_t - np.sqrt(ab) * x0) / np.sqrt(1.0 - ab)
