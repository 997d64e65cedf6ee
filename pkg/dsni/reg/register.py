# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import logging
import numpy as np

from easy_enum import Enum
from ..errors import NumericalError, ConfigError
from ..vol.volume import EnumDomain, EnumPhase, PhaseTriple, crop_window, apply_crop
from .affine import AffineTransform, voxel_grid, trilinear, resample


########################################################################################################################
# Configuration
########################################################################################################################

class EnumObjective(Enum):
    """ Image similarity objective """
    MSE = (0, 'Mean squared intensity difference')
    NCC = (1, 'Negative normalized cross-correlation')


OBJECTIVE_NAMES = {EnumObjective.MSE: 'mse', EnumObjective.NCC: 'ncc'}


class RegistrationConfig(object):

    def __init__(self, levels=3, max_iterations=200, tolerance=1e-6, step_matrix=0.02, step_translation=1.0,
                 objective=EnumObjective.MSE, min_size=4):
        """
        :param levels: number of pyramid levels (halving resolution per level)
        :param max_iterations: iteration cap per level
        :param tolerance: stop when the relative objective improvement falls below this
        :param step_matrix: largest change of a matrix entry in one full step
        :param step_translation: largest translation change (voxels) in one full step
        :param objective: EnumObjective value
        :param min_size: smallest axis length allowed at the coarsest level
        """
        if objective not in EnumObjective:
            raise ConfigError("Unknown registration objective: {}".format(objective))
        if levels < 1 or max_iterations < 1 or tolerance <= 0 or step_matrix <= 0 or step_translation <= 0:
            raise ConfigError("Registration levels, iterations, tolerance and steps must be positive")
        self.levels = int(levels)
        self.max_iterations = int(max_iterations)
        self.tolerance = float(tolerance)
        self.step_matrix = float(step_matrix)
        self.step_translation = float(step_translation)
        self.objective = objective
        self.min_size = int(min_size)

    def __repr__(self):
        return "RegistrationConfig <{}, levels: {}, iterations: {}>".format(
            OBJECTIVE_NAMES[self.objective], self.levels, self.max_iterations)


class RegistrationResult(object):

    def __init__(self, transform, objective, history, iterations, converged):
        """
        :param transform: AffineTransform (pull, fixed voxel -> moving voxel)
        :param objective: final objective value at full resolution
        :param history: per level, list of accepted objective values
        :param iterations: per level, number of iterations run
        :param converged: True if every level stopped on tolerance
        """
        self.transform = transform
        self.objective = objective
        self.history = history
        self.iterations = iterations
        self.converged = converged

    def __repr__(self):
        return "RegistrationResult <objective: {:.6g}, iterations: {}, converged: {}>".format(
            self.objective, self.iterations, self.converged)

    def export(self):
        return {'transform': self.transform.export(), 'objective': self.objective,
                'iterations': self.iterations, 'converged': self.converged}


########################################################################################################################
# Objective
########################################################################################################################

def downsample(data):
    """ Halve resolution by 2x2x2 box averaging (odd trailing planes are dropped) """
    nz, ny, nx = (s // 2 * 2 for s in data.shape)
    d = data[:nz, :ny, :nx]
    return d.reshape(nz // 2, 2, ny // 2, 2, nx // 2, 2).mean(axis=(1, 3, 5))


def objective_and_gradient(fixed, moving, params, center, objective=EnumObjective.MSE, background=0.0, grid=None):
    """ Objective value and its gradient with respect to the 12 transform parameters
    :param fixed: fixed image array [z, y, x]
    :param moving: moving image array, same shape
    :param params: [A (9, row major), t' (3)] of p -> A (p - c) + c + t'
    :param center: c as (x, y, z)
    :param objective: EnumObjective value
    :param background: moving value outside the grid
    :param grid: precomputed voxel_grid of fixed
    :return: (value, gradient[12])
    """
    nz, ny, nx = fixed.shape
    grid = voxel_grid((nx, ny, nz)) if grid is None else grid
    center = np.asarray(center, dtype=np.float64)
    matrix, shift = params[:9].reshape(3, 3), params[9:]
    rel = grid - center
    m, grad = trilinear(moving, rel.dot(matrix.T) + center + shift, background, gradient=True)
    f = fixed.ravel()

    if objective == EnumObjective.MSE:
        r = m - f
        value = float(np.mean(r * r))
        w = 2.0 * r / r.size
    else:
        a, b = m - m.mean(), f - f.mean()
        sa, sb = np.sqrt(np.sum(a * a)), np.sqrt(np.sum(b * b))
        if sa == 0.0 or sb == 0.0:
            return 0.0, np.zeros(12)
        ncc = float(np.sum(a * b) / (sa * sb))
        value = -ncc
        w = -(b / (sa * sb) - ncc * a / (sa * sa))

    if not np.isfinite(value):
        raise NumericalError("Registration objective is not finite", info={'params': params.tolist()})
    wg = grad * w[:, None]
    return value, np.concatenate([wg.T.dot(rel).ravel(), wg.sum(axis=0)])


def _optimize_level(fixed, moving, params, center, cfg, background):
    grid = voxel_grid(fixed.shape[::-1])
    value, grad = objective_and_gradient(fixed, moving, params, center, cfg.objective, background, grid)
    history = [value]
    alpha = 1.0
    converged = False
    iteration = 0

    for iteration in range(1, cfg.max_iterations + 1):
        direction = np.zeros(12)
        for sl, step in ((slice(0, 9), cfg.step_matrix), (slice(9, 12), cfg.step_translation)):
            scale = np.max(np.abs(grad[sl]))
            if scale > 0:
                direction[sl] = -grad[sl] / scale * step
        if not np.any(direction):
            converged = True
            break

        accepted = False
        while alpha >= 1e-8:
            trial = params + alpha * direction
            t_value, t_grad = objective_and_gradient(fixed, moving, trial, center, cfg.objective, background, grid)
            if t_value < value:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            converged = True
            break

        gain = (value - t_value) / max(abs(value), 1e-12)
        params, value, grad = trial, t_value, t_grad
        history.append(value)
        alpha = min(2.0 * alpha, 1.0)
        if gain < cfg.tolerance:
            converged = True
            break

    return params, history, iteration, converged


def register_affine(fixed, moving, cfg=None):
    """ Multi-resolution affine registration of moving onto fixed
    :param fixed: CtVolume (Norm255)
    :param moving: CtVolume (Norm255), same dims as fixed
    :param cfg: RegistrationConfig
    :return: RegistrationResult
    """
    cfg = RegistrationConfig() if cfg is None else cfg
    fixed.require_domain(EnumDomain.NORM255)
    moving.require_domain(EnumDomain.NORM255)
    fixed.require_dims(moving)

    pyramid = [(fixed.data, moving.data)]
    while len(pyramid) < cfg.levels and min(pyramid[-1][0].shape) // 2 >= cfg.min_size:
        f, m = pyramid[-1]
        pyramid.append((downsample(f), downsample(m)))

    # rotation center in full resolution voxels, mapped to level l by x_l = (x - (2^l - 1) / 2) / 2^l
    center = (np.array(fixed.dims, dtype=np.float64) - 1.0) / 2.0
    params = np.concatenate([np.eye(3).ravel(), np.zeros(3)])
    history, iterations, converged = [], [], True

    for level in reversed(range(len(pyramid))):
        f, m = pyramid[level]
        scale = 2.0 ** level
        c_level = (center - (scale - 1.0) / 2.0) / scale
        params, hist, its, conv = _optimize_level(f, m, params, c_level, cfg, 0.0)
        logging.debug('Registration level %d: %d iterations, objective %.6g -> %.6g', level, its, hist[0], hist[-1])
        history.insert(0, hist)
        iterations.insert(0, its)
        converged = converged and conv
        if level:
            params = params.copy()
            params[9:] *= 2.0

    matrix, shift = params[:9].reshape(3, 3), params[9:]
    xf = AffineTransform(matrix, shift + center - matrix.dot(center))
    return RegistrationResult(xf, history[0][-1], history, iterations, converged)


########################################################################################################################
# Phase registration
########################################################################################################################

def register_phases(phases, cfg=None):
    """ Register the nephrographic and excretory phases onto the non-contrast phase
    :param phases: PhaseTriple (Norm255)
    :param cfg: RegistrationConfig
    :return: (PhaseTriple, {EnumPhase: RegistrationResult})
    """
    phases.validate()
    out, results = {}, {}
    for phase, vol in ((EnumPhase.NEPH, phases.nephrographic), (EnumPhase.EXC, phases.excretory)):
        res = register_affine(phases.noncontrast, vol, cfg)
        logging.info('Registered %s: %s', EnumPhase[phase], repr(res))
        out[phase] = resample(vol, res.transform)
        results[phase] = res

    return PhaseTriple(phases.noncontrast, out[EnumPhase.NEPH], out[EnumPhase.EXC], phases.mask, phases.lesions,
                       phases.meta), results


def two_stage_register(phases, mask_source, crop_xy, cfg=None):
    """ Whole-volume registration, kidney crop, then registration of the crops
    :param phases: PhaseTriple (Norm255)
    :param mask_source: kidney mask volume, or a callable returning one for the non-contrast phase
    :param crop_xy: (X, Y) in-plane crop size
    :param cfg: RegistrationConfig
    :return: PhaseTriple of cropped registered phases with the cropped kidney mask
    """
    stage1, results1 = register_phases(phases, cfg)
    mask = mask_source(stage1.noncontrast) if callable(mask_source) else mask_source
    stage1.noncontrast.require_dims(mask)
    window = crop_window(mask, crop_xy)
    logging.info('Crop %s', repr(window))

    crop = lambda v: apply_crop(v, window)
    cropped = PhaseTriple(crop(stage1.noncontrast), crop(stage1.nephrographic), crop(stage1.excretory), crop(mask),
                          [(kind, crop(m)) for kind, m in stage1.lesions], stage1.meta)
    stage2, results2 = register_phases(cropped, cfg)
    stage2.meta.update({
        'crop': window.export(),
        'stage1': {EnumPhase[p]: r.export() for p, r in results1.items()},
        'stage2': {EnumPhase[p]: r.export() for p, r in results2.items()},
    })
    return stage2
