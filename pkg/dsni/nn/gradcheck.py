# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import numpy as np

from ..errors import NumericalError
from .tensor import no_grad


def gradcheck(f, x, h=1e-5, seed=0):
    """ Compare the analytic gradient of f at x with central differences
    :param f: function Tensor -> Tensor
    :param x: Tensor with requires_grad set
    :param h: finite difference step
    :param seed: seed of the projection used for non-scalar outputs
    :return: max |analytic - numeric| / max(1, |analytic|)
    """
    x.grad = None
    out = f(x)
    proj = np.ones(out.shape) if out.size == 1 else np.random.default_rng(seed).normal(size=out.shape)
    out.backward(proj)
    analytic = np.zeros_like(x.data) if x.grad is None else x.grad.copy()

    numeric = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(np.sum(f(x).data * proj))
            flat[i] = orig - h
            down = float(np.sum(f(x).data * proj))
            flat[i] = orig
            numeric.reshape(-1)[i] = (up - down) / (2.0 * h)

    if not (np.all(np.isfinite(analytic)) and np.all(np.isfinite(numeric))):
        raise NumericalError("Non-finite gradient in gradient check")
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))
