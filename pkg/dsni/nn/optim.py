# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import logging
import numpy as np

from ..errors import ConfigError, NumericalError


class AdamW(object):
    """ Adam with decoupled weight decay """

    def __init__(self, params, lr=2e-5, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01):
        """
        :param params: dict name -> Tensor (or a list of Tensors)
        :param lr: learning rate
        :param betas: moment decay rates
        :param eps: denominator guard
        :param weight_decay: decoupled decay factor
        """
        if lr <= 0 or eps <= 0 or weight_decay < 0 or not all(0 <= b < 1 for b in betas):
            raise ConfigError("Invalid AdamW hyper-parameters")
        self.params = params if isinstance(params, dict) else {str(i): p for i, p in enumerate(params)}
        self.lr = float(lr)
        self.betas = tuple(float(b) for b in betas)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.steps = 0
        self.m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params.items()}

    def __repr__(self):
        return "AdamW <lr: {:g}, weight decay: {:g}, steps: {}>".format(self.lr, self.weight_decay, self.steps)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        self.steps += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1 ** self.steps
        c2 = 1.0 - b2 ** self.steps

        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            if not np.all(np.isfinite(g)):
                raise NumericalError("Non-finite gradient of {}".format(name), info={'param': name, 'step': self.steps})
            p.data *= 1.0 - self.lr * self.weight_decay
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * g * g
            m_hat = self.m[name] / c1
            v_hat = self.v[name] / c2
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

        logging.debug('AdamW step %d', self.steps)
