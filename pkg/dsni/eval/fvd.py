# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import numpy as np
from scipy import linalg

from ..errors import DimensionError, NumericalError, ConfigError
from ..vol.volume import EnumDomain
from ..nn.tensor import Tensor, no_grad
from ..nn.functional import conv3d, gelu

# shrinkage applied automatically when a set has no more samples than feature dims
AUTO_SHRINKAGE = 0.1


class FeatureExtractor(object):
    """ Fixed random 3D conv network mapping a Norm255 volume to a feature vector, never trained """

    @property
    def dim(self):
        return self.channels[-1]

    def __init__(self, seed=0, channels=(16, 32, 64), kernel=3):
        """
        :param seed: seed of the orthogonal kernel draw
        :param channels: output channels of the strided conv layers
        :param kernel: cubic kernel size
        """
        if not channels or kernel < 1:
            raise ConfigError("Feature extractor needs at least one layer and a positive kernel")
        self.seed = int(seed)
        self.channels = tuple(int(c) for c in channels)
        self.kernel = int(kernel)
        rng = np.random.default_rng(self.seed)
        self.kernels = []
        c_in = 1
        for c_out in self.channels:
            self.kernels.append(orthogonal((c_out, c_in, kernel, kernel, kernel), rng))
            c_in = c_out

    def __repr__(self):
        return "FeatureExtractor <seed: {}, channels: {}>".format(self.seed, self.channels)

    def export(self):
        return {'seed': self.seed, 'channels': list(self.channels), 'kernel': self.kernel}

    def features(self, vol):
        vol.require_domain(EnumDomain.NORM255)
        x = Tensor(vol.data[None] / 127.5 - 1.0)
        with no_grad():
            for k in self.kernels:
                x = gelu(conv3d(x, k, stride=2, padding=self.kernel // 2))
        return x.data.mean(axis=(1, 2, 3))

    def extract(self, volumes):
        """ Feature matrix [N, dim] of a volume collection """
        return np.stack([self.features(v) for v in volumes])


def orthogonal(shape, rng):
    """ Kernel with orthonormal rows (or columns) of the [C_out, fan_in] flattening """
    rows, cols = shape[0], int(np.prod(shape[1:]))
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return q.reshape(shape)


########################################################################################################################
# Frechet distance
########################################################################################################################

def feature_statistics(features, shrinkage=None):
    """ Mean and covariance of a feature matrix, shrunk toward a scaled identity when requested
    :param features: array [N, d]
    :param shrinkage: None (automatic), or weight in [0, 1] of the identity target
    :return: (mu [d], sigma [d, d])
    """
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2:
        raise DimensionError("Features must be a [N, d] matrix, found shape {}".format(f.shape))
    n, d = f.shape
    if n < 2:
        raise NumericalError("Covariance needs at least 2 samples, found {}".format(n))
    if not np.all(np.isfinite(f)):
        raise NumericalError("Non-finite features")
    if shrinkage is None:
        shrinkage = AUTO_SHRINKAGE if n <= d else 0.0
    if not 0.0 <= shrinkage <= 1.0:
        raise ConfigError("Shrinkage must be in [0, 1], found {}".format(shrinkage))
    if n <= d and shrinkage == 0.0:
        raise NumericalError("Covariance of {} samples in {} dims is degenerate and shrinkage is off".format(n, d))

    mu = f.mean(axis=0)
    sigma = np.atleast_2d(np.cov(f, rowvar=False))
    if shrinkage:
        target = np.trace(sigma) / d * np.eye(d)
        sigma = (1.0 - shrinkage) * sigma + shrinkage * target
    return mu, sigma


def trace_sqrt_product(sigma_a, sigma_b):
    """ Tr((Sa Sb)^1/2) from the eigenvalues of the symmetric Sa^1/2 Sb Sa^1/2 """
    w, v = linalg.eigh(sigma_a)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    m = root @ sigma_b @ root
    ev = linalg.eigh((m + m.T) / 2.0, eigvals_only=True)
    scale = max(1.0, float(np.abs(ev).max()))
    if ev.min() < -1e-10 * scale:
        raise NumericalError("Covariance product has a negative eigenvalue: {:g}".format(ev.min()))
    # only round-off below zero is clipped, small positive eigenvalues still count
    return float(np.sqrt(np.clip(ev, 0.0, None)).sum())


def frechet_distance_features(fa, fb, shrinkage=None):
    """ Frechet distance of the Gaussians fitted to two feature matrices
    :param fa: array [Na, d]
    :param fb: array [Nb, d]
    :param shrinkage: covariance shrinkage (None selects it by sample count)
    :return: float >= 0
    """
    mu_a, sigma_a = feature_statistics(fa, shrinkage)
    mu_b, sigma_b = feature_statistics(fb, shrinkage)
    if mu_a.shape != mu_b.shape:
        raise DimensionError(found=mu_a.shape, expected=mu_b.shape)
    diff = mu_a - mu_b
    fd = diff.dot(diff) + np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * trace_sqrt_product(sigma_a, sigma_b)
    if not np.isfinite(fd):
        raise NumericalError("Non-finite Frechet distance")
    return max(float(fd), 0.0)


def frechet_distance(set_a, set_b, fx=None, shrinkage=None):
    """ Frechet distance between two volume collections in the feature space of fx """
    fx = FeatureExtractor() if fx is None else fx
    return frechet_distance_features(fx.extract(set_a), fx.extract(set_b), shrinkage)
