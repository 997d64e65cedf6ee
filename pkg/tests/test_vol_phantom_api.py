# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import pytest
import numpy as np

from dsni import vol
from dsni.reg import AffineTransform
from dsni.errors import SpecError

NOISE_HU = 10.0


def setup_module(module):
    # Prepare reference phantom
    global truth

    truth = vol.generate_phantom(vol.PhantomSpec(noise_hu=NOISE_HU, seed=3))


def roi_mean(volume, mask):
    return float(volume.data[mask.data > 0.5].mean())


def lesion(kind):
    for k, mask in truth.lesions:
        if k == kind:
            return mask
    raise AssertionError('no lesion of kind {}'.format(kind))


def test_phantom_layout():
    assert len(truth.lesions) == 2
    for v in truth.aligned.phases():
        assert v.dims == (40, 40, 24)
        assert v.domain == vol.EnumDomain.HU
    assert truth.kidney_mask.domain == vol.EnumDomain.MASK
    assert [v.phase for v in truth.aligned.phases()] == [vol.EnumPhase.NC, vol.EnumPhase.NEPH, vol.EnumPhase.EXC]


def test_cyst_attenuation():
    mask = lesion(vol.EnumLesion.CYST)
    n = int(mask.data.sum())
    tol = 3 * NOISE_HU / np.sqrt(n)
    for v in truth.aligned.phases():
        assert roi_mean(v, mask) == pytest.approx(62.0, abs=tol)


def test_mass_enhancement():
    mask = lesion(vol.EnumLesion.MASS)
    tol = 3 * NOISE_HU / np.sqrt(mask.data.sum())
    assert roi_mean(truth.aligned.noncontrast, mask) == pytest.approx(49.0, abs=tol)
    assert roi_mean(truth.aligned.nephrographic, mask) == pytest.approx(122.0, abs=tol)


def test_determinism():
    again = vol.generate_phantom(vol.PhantomSpec(noise_hu=NOISE_HU, seed=3))
    for a, b in zip(truth.aligned.phases(), again.aligned.phases()):
        assert np.array_equal(a.data, b.data)
    other = vol.generate_phantom(vol.PhantomSpec(noise_hu=NOISE_HU, seed=4))
    assert not np.array_equal(truth.aligned.noncontrast.data, other.aligned.noncontrast.data)


def test_threshold_mask_matches_truth():
    masker = vol.ThresholdMasker(min_component_voxels=20)
    mask = masker(truth.aligned.noncontrast)
    assert vol.dice(mask, truth.kidney_mask) >= 0.90
    # the masker also accepts windowed input
    mask255 = masker(vol.window_normalize(truth.aligned.noncontrast))
    assert vol.dice(mask255, truth.kidney_mask) >= 0.90


def test_random_misalignment():
    spec = vol.random_phantom_spec(7, vol.PhantomSpec(noise_hu=0.0), max_rotation=5.0,
                                   max_translation=(3.0, 3.0, 1.0))
    assert vol.EnumPhase.NC not in spec.misalignment
    for phase in (vol.EnumPhase.NEPH, vol.EnumPhase.EXC):
        assert abs(spec.misalignment[phase].angle_z) <= 5.0

    result = vol.generate_phantom(spec)
    assert result.misaligned.noncontrast == result.aligned.noncontrast
    assert result.recovery[vol.EnumPhase.NC] == AffineTransform.identity()
    warp = spec.misalignment[vol.EnumPhase.NEPH]
    composed = result.recovery[vol.EnumPhase.NEPH].compose(warp)
    assert np.allclose(composed.matrix, np.eye(3), atol=1e-12)
    assert np.allclose(composed.translation, 0.0, atol=1e-12)


def test_invalid_specs():
    with pytest.raises(SpecError):
        vol.PhantomSpec(dims=(2, 40, 24))
    with pytest.raises(SpecError):
        vol.PhantomSpec(noise_hu=-1)
    with pytest.raises(SpecError):
        vol.PhantomSpec(misalignment={vol.EnumPhase.NC: AffineTransform.shift((1, 0, 0))})
    outside = vol.LesionSpec((1.0, 1.0, 1.0), 1.5, vol.EnumLesion.CYST)
    with pytest.raises(SpecError):
        vol.generate_phantom(vol.PhantomSpec(lesions=[outside]))
