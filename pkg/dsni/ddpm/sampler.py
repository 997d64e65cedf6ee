# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import logging
import numpy as np

from easy_enum import Enum
from ..errors import ConfigError, NumericalError, ShapeError
from ..nn.tensor import no_grad
from ..net.denoiser import denoise_eps
from ..vol.volume import CtVolume, EnumDomain, EnumPhase
from .schedule import EnumTarget, eps_from_x0


class EnumVariance(Enum):
    """ Reverse-step noise variance """
    BETA_TILDE = (0, 'Posterior variance beta tilde')
    BETA = (1, 'Forward variance beta')


VARIANCE_NAMES = {EnumVariance.BETA_TILDE: 'beta_tilde', EnumVariance.BETA: 'beta'}


class SamplerConfig(object):

    def __init__(self, variance=EnumVariance.BETA_TILDE, seed=0, steps=None):
        """
        :param variance: EnumVariance value
        :param seed: noise seed
        :param steps: reduced number of sampling steps (None runs the full chain)
        """
        if variance not in EnumVariance:
            raise ConfigError("Unknown sampler variance mode: {}".format(variance))
        if steps is not None and steps < 1:
            raise ConfigError("Sampling steps must be positive, found {}".format(steps))
        self.variance = variance
        self.seed = int(seed)
        self.steps = None if steps is None else int(steps)

    def __repr__(self):
        return "SamplerConfig <{}, seed: {}, steps: {}>".format(
            VARIANCE_NAMES[self.variance], self.seed, self.steps or 'all')

    def with_seed(self, seed):
        return SamplerConfig(self.variance, seed, self.steps)


class Denoiser(object):
    """ Trained network as a noise predictor for the sampler """

    def __init__(self, params, cfg, schedule=None, target=EnumTarget.EPS):
        """
        :param params: DenoiserParams
        :param cfg: SwinConfig
        :param schedule: NoiseSchedule the network was trained with (needed for the x0 target)
        :param target: EnumTarget value
        """
        if target == EnumTarget.X0 and schedule is None:
            raise ConfigError("The x0 target needs the training schedule")
        self.params = params
        self.cfg = cfg
        self.schedule = schedule
        self.target = target

    def __call__(self, x_t, t, cond):
        with no_grad():
            out = denoise_eps(x_t, t, cond, self.params, self.cfg).data
        if self.target == EnumTarget.X0:
            out = eps_from_x0(x_t, out, t, self.schedule)
        return out


########################################################################################################################
# Model domain
########################################################################################################################

def to_model_domain(vol):
    """ Norm255 volume -> array [D, H, W] in [-1, 1] """
    vol.require_domain(EnumDomain.NORM255)
    return vol.data / 127.5 - 1.0


def from_model_domain(x, like, phase=EnumPhase.NEPH):
    """ Array in [-1, 1] -> Norm255 CtVolume with the metadata of like """
    data = np.clip((np.asarray(x, dtype=np.float64) + 1.0) * 127.5, 0.0, 255.0)
    return CtVolume(data, like.spacing, like.origin, EnumDomain.NORM255, phase)


########################################################################################################################
# Reverse process
########################################################################################################################

def posterior_mean(x_t, eps_hat, beta_t, alpha_bar_t):
    """ mu = (x_t - beta_t / sqrt(1 - abar_t) * eps_hat) / sqrt(1 - beta_t) """
    if alpha_bar_t >= 1.0:
        return x_t / np.sqrt(1.0 - beta_t)
    return (x_t - beta_t / np.sqrt(1.0 - alpha_bar_t) * eps_hat) / np.sqrt(1.0 - beta_t)


def p_sample_step(x_t, t, eps_hat, schedule, cfg, z):
    """ One reverse step x_t -> x_{t-1}
    :param x_t: array
    :param t: step index 1 .. T
    :param eps_hat: predicted noise, same shape
    :param schedule: NoiseSchedule
    :param cfg: SamplerConfig
    :param z: unit Gaussian draw, ignored at t = 1
    :return: array x_{t-1}
    """
    schedule.check_step(t)
    x_t, eps_hat = np.asarray(x_t, dtype=np.float64), np.asarray(eps_hat, dtype=np.float64)
    if eps_hat.shape != x_t.shape:
        raise ShapeError("Predicted noise {} does not match {}".format(eps_hat.shape, x_t.shape))
    mu = posterior_mean(x_t, eps_hat, schedule.betas[t], schedule.alpha_bars[t])
    if t > 1:
        var = schedule.posterior_variance[t] if cfg.variance == EnumVariance.BETA_TILDE else schedule.betas[t]
        mu = mu + np.sqrt(var) * z
    if not np.all(np.isfinite(mu)):
        raise NumericalError("Non-finite values at reverse step {}".format(t), info={'step': t})
    return mu


def p_sample_loop(cond, model, schedule, cfg=None):
    """ Generate a nephrographic volume from the conditioning pair
    :param cond: array [2, D, H, W] (non-contrast, excretory) in model domain
    :param model: callable (x_t, t, cond) -> predicted noise, e.g. Denoiser
    :param schedule: NoiseSchedule of the model
    :param cfg: SamplerConfig
    :return: array [D, H, W] in Norm255
    """
    cfg = SamplerConfig() if cfg is None else cfg
    cond = np.asarray(cond, dtype=np.float64)
    if cond.ndim != 4 or cond.shape[0] != 2:
        raise ShapeError("Condition must be [2, D, H, W], found {}".format(cond.shape))
    rng = np.random.default_rng(cfg.seed)

    if cfg.steps and cfg.steps < schedule.T:
        chain, taus = schedule.respace(cfg.steps)
    else:
        chain, taus = schedule, np.arange(schedule.T + 1)

    x = rng.standard_normal((1,) + cond.shape[1:])
    for i in range(chain.T, 0, -1):
        eps_hat = model(x, int(taus[i]), cond)
        z = rng.standard_normal(x.shape) if i > 1 else None
        x = p_sample_step(x, i, eps_hat, chain, cfg, z)
        if i % 100 == 0:
            logging.debug('Sampling step %d / %d', i, chain.T)

    return np.clip((x[0] + 1.0) * 127.5, 0.0, 255.0)


def window_starts(nz, depth):
    """ Overlapping z windows (stride depth // 2), the last one ending at the final slice """
    if depth > nz:
        raise ConfigError("Window depth {} exceeds {} slices".format(depth, nz))
    starts = list(range(0, nz - depth + 1, max(1, depth // 2)))
    if starts[-1] != nz - depth:
        starts.append(nz - depth)
    return starts


def pad_to_divisor(cond, divisor):
    """ Edge-pad the spatial axes of cond [C, D, H, W] up to multiples of divisor """
    pad = [(0, 0)] + [(0, -n % k) for n, k in zip(cond.shape[1:], divisor)]
    return np.pad(cond, pad, mode='edge') if any(after for _, after in pad) else cond


def _sample_window(cond, model, schedule, cfg):
    divisor = getattr(getattr(model, 'cfg', None), 'divisor', (1, 1, 1))
    d, h, w = cond.shape[1:]
    out = p_sample_loop(pad_to_divisor(cond, divisor), model, schedule, cfg)
    return out[:d, :h, :w]


def synthesize(model, noncontrast, excretory, schedule, cfg=None, depth=None):
    """ Synthesize the nephrographic phase of a registered case
    :param model: noise predictor (Denoiser)
    :param noncontrast: Norm255 CtVolume
    :param excretory: Norm255 CtVolume, same dims
    :param schedule: NoiseSchedule of the model
    :param cfg: SamplerConfig
    :param depth: slices per window (None uses the whole volume)
    :return: Norm255 CtVolume, windows averaged where they overlap

    Windows not divisible by the network divisor are edge-padded for sampling and cropped back.
    """
    cfg = SamplerConfig() if cfg is None else cfg
    noncontrast.require_dims(excretory)
    cond = np.stack([to_model_domain(noncontrast), to_model_domain(excretory)])
    nz = cond.shape[1]
    depth = nz if depth is None else int(depth)

    acc = np.zeros(cond.shape[1:])
    count = np.zeros((nz, 1, 1))
    for k, z0 in enumerate(window_starts(nz, depth)):
        logging.info('Synthesizing slices %d .. %d', z0, z0 + depth - 1)
        acc[z0:z0 + depth] += _sample_window(cond[:, z0:z0 + depth], model, schedule, cfg.with_seed(cfg.seed + k))
        count[z0:z0 + depth] += 1.0

    data = acc / count
    return CtVolume(data, noncontrast.spacing, noncontrast.origin, EnumDomain.NORM255, EnumPhase.NEPH)
