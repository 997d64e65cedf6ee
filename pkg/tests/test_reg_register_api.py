# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import pytest
import numpy as np

from dsni import reg, vol, qc
from dsni.vol.phantom import ATTENUATION
from dsni.errors import ConfigError, DimensionError, DomainError

# every phase uses the nephrographic attenuation, so phases differ only by noise and pose
SAME_CONTRAST = {name: (values[1],) * 3 for name, values in ATTENUATION.items()}


def norm_phantom(misalignment=None, noise_hu=2.0, seed=0, attenuation=None):
    spec = vol.PhantomSpec(noise_hu=noise_hu, misalignment=misalignment, seed=seed, attenuation=attenuation)
    truth = vol.generate_phantom(spec)
    norm = lambda v: vol.window_normalize(v) if v.domain == vol.EnumDomain.HU else v
    return truth, truth.aligned.map(norm, masks=False), truth.misaligned.map(norm, masks=False)


def test_config_validation():
    with pytest.raises(ConfigError):
        reg.RegistrationConfig(levels=0)
    with pytest.raises(ConfigError):
        reg.RegistrationConfig(objective=5)


def test_register_identical():
    _, aligned, _ = norm_phantom()
    result = reg.register_affine(aligned.nephrographic, aligned.nephrographic)
    assert np.max(np.abs(result.transform.matrix - np.eye(3))) <= 1e-3
    assert np.max(np.abs(result.transform.translation)) <= 1e-2
    assert result.converged


def test_register_translation():
    warp = reg.AffineTransform.shift((3.0, -2.0, 1.0))
    truth, aligned, misaligned = norm_phantom({vol.EnumPhase.NEPH: warp})
    result = reg.register_affine(aligned.nephrographic, misaligned.nephrographic)
    expected = truth.recovery[vol.EnumPhase.NEPH]
    assert np.max(np.abs(result.transform.translation - expected.translation)) <= 0.5
    # the accepted objective values never increase
    for level in result.history:
        assert all(b <= a for a, b in zip(level, level[1:]))


def test_register_rotation():
    center = [(d - 1) / 2.0 for d in (40, 40, 24)]
    warp = reg.AffineTransform.rotation_z(5.0, center)
    truth, aligned, misaligned = norm_phantom({vol.EnumPhase.EXC: warp})
    result = reg.register_affine(aligned.excretory, misaligned.excretory, reg.RegistrationConfig(
        objective=reg.EnumObjective.NCC))
    assert result.transform.angle_z == pytest.approx(truth.recovery[vol.EnumPhase.EXC].angle_z, abs=1.0)


def test_register_requires_norm255():
    truth = vol.generate_phantom(vol.PhantomSpec(noise_hu=0.0))
    with pytest.raises(DomainError):
        reg.register_affine(truth.aligned.noncontrast, truth.aligned.nephrographic)


def test_two_stage_aligned():
    _, aligned, _ = norm_phantom(noise_hu=0.0)
    nc = aligned.noncontrast
    triple = vol.PhaseTriple(nc, nc.copy_with(phase=vol.EnumPhase.NEPH), nc.copy_with(phase=vol.EnumPhase.EXC))
    out = reg.two_stage_register(triple, vol.ThresholdMasker(), (32, 32))

    window = vol.CropWindow(*(out.meta['crop']['offset'] + out.meta['crop']['size']))
    for v in out.phases():
        assert v.dims[:2] == (32, 32)
        assert np.max(np.abs(v.data - vol.apply_crop(nc, window).data)) <= 1.0
    assert out.mask.dims == out.noncontrast.dims
    assert set(out.meta) == {'crop', 'stage1', 'stage2'}
    assert set(out.meta['stage2']) == {'NEPH', 'EXC'}


def test_two_stage_crop_too_large():
    _, aligned, _ = norm_phantom()
    with pytest.raises(DimensionError):
        reg.two_stage_register(aligned, vol.ThresholdMasker(), (64, 64))


def test_two_stage_improves_gate_score():
    spec = vol.random_phantom_spec(11, vol.PhantomSpec(noise_hu=2.0, attenuation=SAME_CONTRAST))
    truth = vol.generate_phantom(spec)
    moving = truth.misaligned.map(vol.window_normalize, masks=False)
    masker = vol.ThresholdMasker(hu_range=(40.0, 300.0))
    out = reg.two_stage_register(moving, masker, (32, 32))

    window = vol.CropWindow(*(out.meta['crop']['offset'] + out.meta['crop']['size']))
    before = moving.map(lambda v: vol.apply_crop(v, window), masks=False)
    assert qc.ssim_select(out).ssim_select > qc.ssim_select(before).ssim_select


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(20))
def test_two_stage_kidney_overlap(seed):
    spec = vol.random_phantom_spec(seed, vol.PhantomSpec(noise_hu=2.0, attenuation=SAME_CONTRAST),
                                   max_rotation=5.0, max_translation=(5.0, 5.0, 1.0))
    truth = vol.generate_phantom(spec)
    moving = truth.misaligned.map(vol.window_normalize, masks=False)
    masker = vol.ThresholdMasker(hu_range=(40.0, 300.0))
    out = reg.two_stage_register(moving, masker, (32, 32))
    masks = [masker(v) for v in out.phases()]
    assert vol.dice(masks[0], masks[1]) >= 0.95
    assert vol.dice(masks[0], masks[2]) >= 0.95
