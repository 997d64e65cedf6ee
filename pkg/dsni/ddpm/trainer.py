# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import json
import time
import logging
import numpy as np

from ..errors import ConfigError, NumericalError
from ..nn.tensor import no_grad, mul
from ..nn.functional import l1_loss
from ..nn.optim import AdamW
from ..net.denoiser import denoise_eps
from .schedule import EnumTarget, TARGET_NAMES, q_sample
from .sampler import to_model_domain


class TrainConfig(object):

    def __init__(self, lr=2e-5, batch=4, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01, steps=1000, seed=0,
                 val_every=100, target=EnumTarget.EPS):
        """
        :param lr: AdamW learning rate
        :param batch: items per step
        :param betas: AdamW moment decay rates
        :param eps: AdamW denominator guard
        :param weight_decay: AdamW decoupled weight decay
        :param steps: number of optimizer steps
        :param seed: seed of step, noise and batch draws
        :param val_every: validation cadence in steps
        :param target: EnumTarget value regressed by the MAE loss
        """
        if lr <= 0 or batch < 1 or steps < 0 or val_every < 1:
            raise ConfigError("Training needs lr > 0, batch >= 1, steps >= 0 and val_every >= 1")
        if target not in EnumTarget:
            raise ConfigError("Unknown training target: {}".format(target))
        self.lr = float(lr)
        self.batch = int(batch)
        self.betas = tuple(float(b) for b in betas)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.steps = int(steps)
        self.seed = int(seed)
        self.val_every = int(val_every)
        self.target = target

    def __repr__(self):
        return "TrainConfig <lr: {:g}, batch: {}, steps: {}, target: {}>".format(
            self.lr, self.batch, self.steps, TARGET_NAMES[self.target])

    def export(self):
        return {'lr': self.lr, 'batch': self.batch, 'betas': list(self.betas), 'eps': self.eps,
                'weight_decay': self.weight_decay, 'steps': self.steps, 'seed': self.seed,
                'val_every': self.val_every, 'target': TARGET_NAMES[self.target]}


def make_items(triples):
    """ Training items (x0 [1, D, H, W], cond [2, D, H, W]) in model domain from registered Norm255 triples """
    items = []
    for triple in triples:
        x0 = to_model_domain(triple.nephrographic)[None]
        cond = np.stack([to_model_domain(triple.noncontrast), to_model_domain(triple.excretory)])
        items.append((x0, cond))
    return items


def train_step(batch, params, opt, schedule, cfg, rng, model_fn):
    """ One optimizer step of the MAE objective
    :param batch: list of (x0, cond) arrays sharing one shape
    :param params: DenoiserParams updated in place
    :param opt: AdamW over params
    :param schedule: NoiseSchedule
    :param cfg: TrainConfig
    :param rng: numpy Generator for step and noise draws
    :param model_fn: callable (x_t, t, cond) -> Tensor prediction
    :return: batch mean loss
    """
    opt.zero_grad()
    total, steps = 0.0, []
    for x0, cond in batch:
        t = int(rng.integers(1, schedule.T + 1))
        eps = rng.standard_normal(x0.shape)
        x_t = q_sample(x0, t, eps, schedule)
        pred = model_fn(x_t, t, cond)
        loss = l1_loss(pred, eps if cfg.target == EnumTarget.EPS else x0)
        value = loss.item()
        if not np.isfinite(value):
            raise NumericalError("Non-finite training loss", info={
                'step': opt.steps + 1, 't': t, 'loss': value, 'params_finite': params.is_finite(),
                'pred_range': [float(np.nanmin(pred.data)), float(np.nanmax(pred.data))]})
        # per-item backward keeps one graph alive at a time
        mul(loss, 1.0 / len(batch)).backward()
        total += value
        steps.append(t)

    opt.step()
    logging.debug('Train step %d: t %s, loss %.6f', opt.steps, steps, total / len(batch))
    return total / len(batch)


class Trainer(object):
    """ Training loop with validation and best-parameter tracking """

    def __init__(self, params, swin_cfg, schedule, cfg=None):
        """
        :param params: DenoiserParams
        :param swin_cfg: SwinConfig
        :param schedule: NoiseSchedule
        :param cfg: TrainConfig
        """
        self.params = params
        self.swin_cfg = swin_cfg
        self.schedule = schedule
        self.cfg = TrainConfig() if cfg is None else cfg
        self.opt = AdamW(params.tensors, self.cfg.lr, self.cfg.betas, self.cfg.eps, self.cfg.weight_decay)
        self.rng = np.random.default_rng(self.cfg.seed)
        self.best_params = None
        self.best_loss = float('inf')
        self.history = []

    def __repr__(self):
        return "Trainer <step: {}, best validation: {:.6f}>".format(self.opt.steps, self.best_loss)

    def model_fn(self, x_t, t, cond):
        return denoise_eps(x_t, t, cond, self.params, self.swin_cfg)

    def train_step(self, batch):
        return train_step(batch, self.params, self.opt, self.schedule, self.cfg, self.rng, self.model_fn)

    def validation_loss(self, items):
        """ Mean MAE over items with per-item fixed draws, comparable across steps """
        losses = []
        with no_grad():
            for i, (x0, cond) in enumerate(items):
                rng = np.random.default_rng([self.cfg.seed, i])
                t = int(rng.integers(1, self.schedule.T + 1))
                eps = rng.standard_normal(x0.shape)
                pred = self.model_fn(q_sample(x0, t, eps, self.schedule), t, cond)
                target = eps if self.cfg.target == EnumTarget.EPS else x0
                losses.append(float(np.mean(np.abs(pred.data - target))))
        return float(np.mean(losses))

    def fit(self, train_items, val_items=None, steps=None, log_path=None):
        """ Run the optimizer steps
        :param train_items: list of (x0, cond)
        :param val_items: list of (x0, cond), default the training items
        :param steps: number of steps, default cfg.steps
        :param log_path: JSON-lines loss log file, one record per step with the elapsed wall-clock seconds
        :return: list of training losses
        """
        if not train_items:
            raise ConfigError("No training items")
        val_items = train_items if not val_items else val_items
        steps = self.cfg.steps if steps is None else int(steps)
        log = open(log_path, 'w') if log_path else None
        start = time.perf_counter()

        try:
            for i in range(steps):
                index = self.rng.integers(0, len(train_items), size=self.cfg.batch)
                loss = self.train_step([train_items[j] for j in index])
                self.history.append(loss)
                record = {'step': self.opt.steps, 'loss': loss, 'lr': self.cfg.lr,
                          'seconds': round(time.perf_counter() - start, 3)}

                if (i + 1) % self.cfg.val_every == 0 or i + 1 == steps:
                    val = self.validation_loss(val_items)
                    record['val_loss'] = val
                    logging.info('Step %d: loss %.5f, validation %.5f', self.opt.steps, loss, val)
                    if val < self.best_loss:
                        self.best_loss = val
                        self.best_params = self.params.copy()

                if log:
                    log.write(json.dumps(record) + '\n')
                    log.flush()
        finally:
            if log:
                log.close()

        if self.best_params is None:
            self.best_params = self.params.copy()
        return self.history
