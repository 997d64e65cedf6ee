# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import pytest
import numpy as np

from dsni import reg
from dsni.vol import CtVolume, EnumDomain
from dsni.errors import TransformError, DsniDataError


def random_volume(shape=(6, 7, 8), seed=0, domain=EnumDomain.HU):
    return CtVolume(np.random.default_rng(seed).uniform(0.0, 200.0, size=shape), domain=domain)


def test_identity_resample():
    v = random_volume()
    out = reg.resample(v, reg.AffineTransform.identity())
    assert np.array_equal(out.data, v.data)


def test_integer_translation():
    v = random_volume()
    out = reg.resample(v, reg.AffineTransform.shift((3, 2, 1)))
    assert np.array_equal(out.data[:-1, :-2, :-3], v.data[1:, 2:, 3:])
    # voxels pulled from outside the grid get the HU background
    assert np.all(out.data[-1] == -1000.0)


def test_half_voxel_translation():
    ramp = np.broadcast_to(np.arange(8, dtype=np.float64), (3, 4, 8)).copy()
    v = CtVolume(ramp)
    out = reg.resample(v, reg.AffineTransform.shift((0.5, 0.0, 0.0)))
    assert np.allclose(out.data[:, :, :-1], ramp[:, :, :-1] + 0.5, rtol=0, atol=1e-12)


def test_transform_algebra():
    center = (3.5, 3.5, 2.0)
    a = reg.AffineTransform.rotation_z(5.0, center, (1.0, -2.0, 0.5))
    assert a.angle_z == pytest.approx(5.0)
    assert a.det == pytest.approx(1.0)
    ident = a.compose(a.inverse())
    assert np.allclose(ident.matrix, np.eye(3), atol=1e-12)
    assert np.allclose(ident.translation, 0.0, atol=1e-12)
    points = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])
    assert np.allclose(a.inverse().apply(a.apply(points)), points, atol=1e-12)


def test_transform_json():
    a = reg.AffineTransform.rotation_z(-3.0, (10.0, 10.0, 5.0), (0.25, 0.5, 0.0))
    data = a.export()
    assert data['units'] == 'voxel'
    assert reg.AffineTransform.parse(data) == a
    assert reg.AffineTransform.from_json(a.to_json()) == a
    with pytest.raises(DsniDataError):
        reg.AffineTransform.parse({'A': np.eye(3).tolist(), 't': [0, 0, 0], 'units': 'mm'})


def test_singular_transform():
    with pytest.raises(TransformError):
        reg.AffineTransform(np.zeros((3, 3)))
    with pytest.raises(TransformError):
        reg.AffineTransform(np.eye(3), (np.nan, 0.0, 0.0))


def test_norm255_resample_range():
    v = random_volume(domain=EnumDomain.NORM255)
    out = reg.resample(v, reg.AffineTransform.rotation_z(10.0, (3.5, 3.0, 2.5)))
    assert out.domain == EnumDomain.NORM255
    assert out.data.min() >= 0.0 and out.data.max() <= 255.0


def test_downsample():
    data = np.arange(4 * 4 * 4, dtype=np.float64).reshape(4, 4, 4)
    out = reg.downsample(data)
    assert out.shape == (2, 2, 2)
    assert out[0, 0, 0] == data[:2, :2, :2].mean()
    assert reg.downsample(np.zeros((5, 7, 9))).shape == (2, 3, 4)


@pytest.mark.parametrize('objective', [reg.EnumObjective.MSE, reg.EnumObjective.NCC])
def test_objective_gradient(objective):
    rng = np.random.default_rng(1)
    fixed = rng.uniform(0.0, 255.0, size=(6, 7, 8))
    moving = np.roll(fixed, 1, axis=2) + rng.normal(0.0, 5.0, size=fixed.shape)
    center = np.array([3.5, 3.0, 2.5])
    params = np.concatenate([(np.eye(3) + rng.normal(0.0, 0.01, size=(3, 3))).ravel(), [0.31, -0.17, 0.09]])

    _, grad = reg.objective_and_gradient(fixed, moving, params, center, objective)
    h = 1e-6
    numeric = np.zeros(12)
    for i in range(12):
        up, down = params.copy(), params.copy()
        up[i] += h
        down[i] -= h
        numeric[i] = (reg.objective_and_gradient(fixed, moving, up, center, objective)[0] -
                      reg.objective_and_gradient(fixed, moving, down, center, objective)[0]) / (2 * h)
    assert np.allclose(grad, numeric, rtol=1e-4, atol=1e-6 * np.max(np.abs(numeric)))
