# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import json
import pytest
import jsonschema
import numpy as np
from scipy import linalg

from dsni import eval as ev
from dsni import vol
from dsni.errors import DomainError, EmptyMaskError, NumericalError, DsniDataError

SMALL_FX = dict(channels=(4, 8), kernel=3)


def norm_volume(data):
    return vol.CtVolume(np.asarray(data, dtype=np.float64), domain=vol.EnumDomain.NORM255)


def random_norm(shape=(8, 8, 8), seed=0):
    return norm_volume(np.random.default_rng(seed).uniform(0.0, 255.0, size=shape))


def test_psnr():
    a = norm_volume(np.full((4, 4, 4), 100.0))
    b = norm_volume(np.full((4, 4, 4), 110.0))
    assert ev.psnr(a, b) == pytest.approx(10.0 * np.log10(255.0 ** 2 / 100.0))
    assert ev.psnr(a, b) == pytest.approx(28.13, abs=0.005)
    assert ev.psnr(a, a) == float('inf')
    with pytest.raises(DomainError):
        ev.psnr(vol.CtVolume(np.zeros((2, 2, 2))), vol.CtVolume(np.zeros((2, 2, 2))))


def test_mae_hu():
    a = norm_volume(np.full((3, 3, 3), 100.0))
    b = norm_volume(np.full((3, 3, 3), 101.0))
    assert ev.mae_hu(a, b) == pytest.approx(400.0 / 255.0)
    hu_a = vol.CtVolume(np.full((3, 3, 3), 40.0))
    hu_b = vol.CtVolume(np.full((3, 3, 3), 30.0))
    assert ev.mae_hu(hu_a, hu_b) == 10.0
    with pytest.raises(DomainError):
        ev.mae_hu(a, hu_a)


def test_roi_stats_uniform():
    data = np.full((6, 6, 6), -100.0)
    data[1:4, 1:4, 1:4] = 40.0
    roi = np.zeros(data.shape)
    roi[1:4, 1:4, 1:4] = 1.0
    stats = ev.roi_stats(vol.CtVolume(data), roi)
    assert stats.mean == 40.0
    assert stats.count == 27
    assert np.count_nonzero(stats.counts) == 1


def test_roi_stats_counts():
    data = np.random.default_rng(1).normal(50.0, 20.0, size=(6, 6, 6))
    roi = np.zeros(data.shape)
    roi[:, :3] = 1.0
    stats = ev.roi_stats(vol.CtVolume(data), roi, bins=8)
    assert stats.count == 108
    assert len(stats.edges) == 9
    assert stats.mean == pytest.approx(data[:, :3].mean())
    with pytest.raises(EmptyMaskError):
        ev.roi_stats(vol.CtVolume(data), np.zeros(data.shape))


def test_compare_roi():
    truth = random_norm(seed=2)
    roi = np.zeros(truth.data.shape)
    roi[2:6, 2:6, 2:6] = 1.0
    row = ev.compare_roi('case000', 'cyst', truth, truth, roi)
    assert row['delta_hu'] == 0.0
    assert row['voxels'] == 64
    assert row['truth_counts'] == row['pred_counts']


def test_frechet_distance_features():
    z = np.random.default_rng(3).standard_normal((400, 3))
    delta = np.array([1.0, -2.0, 0.5])
    assert ev.frechet_distance_features(z, z) == pytest.approx(0.0, abs=1e-9)
    assert ev.frechet_distance_features(z, z + delta) == pytest.approx(delta.dot(delta), rel=1e-6)
    with pytest.raises(NumericalError):
        ev.frechet_distance_features(z[:1], z[:1])
    with pytest.raises(NumericalError):
        ev.frechet_distance_features(z[:2], z[:2], shrinkage=0.0)


def test_trace_sqrt_product():
    s = np.diag([4.0, 9.0])
    assert ev.trace_sqrt_product(s, np.eye(2)) == pytest.approx(5.0)


def test_frechet_distance_decaying_spectrum():
    # one dominant feature, 31 features with a thousandth of its scale
    scales = np.array([1.0] + [1e-3] * 31)
    f = np.random.default_rng(11).standard_normal((200, 32)) * scales
    _, sigma = ev.feature_statistics(f, shrinkage=0.0)
    assert ev.trace_sqrt_product(sigma, sigma) == pytest.approx(np.trace(sigma), rel=1e-7)
    assert ev.frechet_distance_features(f, f, shrinkage=0.0) < 1e-6


def test_frechet_distance_gaussians():
    rng = np.random.default_rng(5)
    mu_a, sigma_a = np.zeros(2), np.array([[1.0, 0.0], [0.0, 4.0]])
    mu_b, sigma_b = np.array([1.0, 1.0]), np.array([[2.0, 0.5], [0.5, 1.0]])
    fa = rng.multivariate_normal(mu_a, sigma_a, size=10000)
    fb = rng.multivariate_normal(mu_b, sigma_b, size=10000)

    cross = np.real(np.trace(linalg.sqrtm(sigma_a @ sigma_b)))
    expected = (mu_a - mu_b).dot(mu_a - mu_b) + np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * cross
    assert ev.frechet_distance_features(fa, fb, shrinkage=0.0) == pytest.approx(expected, rel=0.05)


def test_frechet_distance_grows_with_noise():
    phantoms = [vol.generate_phantom(vol.random_phantom_spec(seed)).aligned.nephrographic for seed in range(6)]
    clean = [vol.window_normalize(v) for v in phantoms]
    base = [np.random.default_rng(100 + i).standard_normal(v.data.shape) for i, v in enumerate(phantoms)]

    distances = []
    for sigma in (5.0, 15.0, 45.0):
        noisy = [vol.window_normalize(v.copy_with(data=v.data + sigma * z)) for v, z in zip(phantoms, base)]
        per_seed = [ev.frechet_distance(clean, noisy, ev.FeatureExtractor(seed=s, **SMALL_FX)) for s in range(5)]
        distances.append(float(np.median(per_seed)))

    assert distances[0] < distances[1] < distances[2]


def test_frechet_distance_volumes():
    fx = ev.FeatureExtractor(seed=1, **SMALL_FX)
    assert fx.dim == 8
    volumes = [random_norm(seed=s) for s in range(3)]
    assert ev.frechet_distance(volumes, volumes, fx) == pytest.approx(0.0, abs=1e-9)
    other = [norm_volume(np.clip(v.data * 0.5, 0, 255)) for v in volumes]
    assert ev.frechet_distance(volumes, other, fx) > 0.0
    # same seed, same features
    again = ev.FeatureExtractor(seed=1, **SMALL_FX)
    assert np.array_equal(again.extract(volumes), fx.extract(volumes))


def test_evaluate_identical_cases():
    pairs = [('case{:03d}'.format(i), random_norm(seed=i), random_norm(seed=i)) for i in range(2)]
    report = ev.evaluate_cases(pairs, extractor=ev.FeatureExtractor(**SMALL_FX))
    assert report.psnr_db == float('inf')
    assert report.ssim == pytest.approx(1.0)
    assert report.mae_hu == 0.0
    assert report.fvd == pytest.approx(0.0, abs=1e-9)
    report.validate()
    data = json.loads(report.to_json())
    assert data['psnr_db'] == 'inf'
    assert [c['case_id'] for c in data['cases']] == ['case000', 'case001']
    assert 'PSNR:  inf dB' in report.info()


def test_evaluate_workers_and_rois():
    pairs = [('case{:03d}'.format(i), random_norm(seed=10 + i), random_norm(seed=20 + i)) for i in range(3)]
    roi = np.zeros((8, 8, 8))
    roi[2:5, 2:5, 2:5] = 1.0
    fx = ev.FeatureExtractor(**SMALL_FX)
    serial = ev.evaluate_cases(pairs, extractor=fx, rois=[('case001', 'mass', roi)])
    threaded = ev.evaluate_cases(pairs, extractor=fx, rois=[('case001', 'mass', roi)], workers=3)
    assert serial.export() == threaded.export()
    assert serial.rois[0]['label'] == 'mass'
    serial.validate()
    with pytest.raises(DsniDataError):
        ev.evaluate_cases(pairs, extractor=fx, rois=[('case009', 'mass', roi)])


def test_evaluate_single_case_skips_fvd():
    report = ev.evaluate_cases([('case000', random_norm(seed=1), random_norm(seed=2))])
    assert report.fvd is None
    report.validate()


def test_report_baseline():
    fx = ev.FeatureExtractor(**SMALL_FX)
    truth = [random_norm(seed=i) for i in range(2)]
    model = ev.evaluate_cases([(i, norm_volume(np.clip(t.data + 5.0, 0, 255)), t) for i, t in enumerate(truth)],
                              extractor=fx)
    baseline = ev.evaluate_cases([(i, norm_volume(np.clip(t.data + 20.0, 0, 255)), t) for i, t in enumerate(truth)],
                                 extractor=fx)
    model.baseline = baseline
    model.validate()
    assert model.export()['baseline']['mae_hu'] > model.export()['mae_hu']

    bad = model.export()
    bad['cases'][0]['mae_hu'] = -1.0
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, ev.REPORT_SCHEMA)
