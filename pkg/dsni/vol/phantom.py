# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import logging
import numpy as np

from easy_enum import Enum
from ..errors import SpecError
from .volume import CtVolume, PhaseTriple, EnumDomain, EnumPhase


########################################################################################################################
# Tissue model
########################################################################################################################

class EnumLesion(Enum):
    """ Renal lesion kind """
    CYST = (0, 'Simple cyst, not enhancing')
    MASS = (1, 'Solid enhancing mass')


LESION_NAMES = {EnumLesion.CYST: 'cyst', EnumLesion.MASS: 'mass'}

# Mean attenuation (HU) per tissue for the NC, NEPH and EXC phases
ATTENUATION = {
    'air':        (-1000.0, -1000.0, -1000.0),
    'fat':        (-100.0, -100.0, -100.0),
    'bone':       (700.0, 700.0, 700.0),
    'cortex':     (30.0, 180.0, 140.0),
    'medulla':    (30.0, 100.0, 140.0),
    'collecting': (10.0, 80.0, 400.0),
    'cyst':       (62.0, 62.0, 62.0),
    'mass':       (49.0, 122.0, 90.0),
}

PHASE_INDEX = {EnumPhase.NC: 0, EnumPhase.NEPH: 1, EnumPhase.EXC: 2}


class KidneySpec(object):
    """ Ellipsoidal kidney with cortex shell, medulla and central collecting system """

    def __init__(self, center, semi_axes, cortex_fraction=0.3, collecting_fraction=0.35):
        """
        :param center: (x, y, z) voxel position
        :param semi_axes: (a, b, c) in voxels
        :param cortex_fraction: outer part of the normalized radius taken by the cortex
        :param collecting_fraction: inner part of the normalized radius taken by the collecting system
        """
        self.center = tuple(float(v) for v in center)
        self.semi_axes = tuple(float(v) for v in semi_axes)
        self.cortex_fraction = float(cortex_fraction)
        self.collecting_fraction = float(collecting_fraction)
        if min(self.semi_axes) <= 0:
            raise SpecError("Kidney semi-axes must be positive, found {}".format(self.semi_axes))
        if not 0 < self.collecting_fraction < 1 - self.cortex_fraction < 1:
            raise SpecError("Invalid kidney layer fractions")

    def radius(self, grid):
        """ Normalized ellipsoid radius of every grid point """
        return np.sqrt(sum(((g - c) / a) ** 2 for g, c, a in zip(grid, self.center, self.semi_axes)))


class LesionSpec(object):
    """ Spherical lesion """

    def __init__(self, center, radius, kind=EnumLesion.CYST):
        assert kind in EnumLesion
        self.center = tuple(float(v) for v in center)
        self.radius = float(radius)
        self.kind = kind
        if self.radius <= 0:
            raise SpecError("Lesion radius must be positive, found {}".format(self.radius))

    def __repr__(self):
        return "LesionSpec <{}, r: {:.2f}>".format(LESION_NAMES[self.kind], self.radius)

    def mask(self, grid):
        return sum((g - c) ** 2 for g, c in zip(grid, self.center)) <= self.radius ** 2


class PhantomSpec(object):
    """ Parameters of a synthetic three-phase abdominal phantom """

    def __init__(self, dims=(40, 40, 24), spacing=(1.5, 1.5, 3.0), kidneys=None, lesions=None, attenuation=None,
                 noise_hu=10.0, misalignment=None, seed=0):
        """
        :param dims: volume size (X, Y, Z)
        :param spacing: voxel size in mm
        :param kidneys: list of KidneySpec, default two kidneys placed relative to dims
        :param lesions: list of LesionSpec, default one cyst and one mass
        :param attenuation: tissue -> (NC, NEPH, EXC) HU table, default ATTENUATION
        :param noise_hu: standard deviation of the additive Gaussian noise
        :param misalignment: phase -> AffineTransform applied to the NEPH / EXC copies
        :param seed: noise seed
        """
        self.dims = tuple(int(d) for d in dims)
        self.spacing = tuple(float(s) for s in spacing)
        if len(self.dims) != 3 or min(self.dims) < 4:
            raise SpecError("Phantom dims must be 3 values >= 4, found {}".format(dims))
        nx, ny, nz = self.dims

        if kidneys is None:
            axes = (0.12 * nx, 0.2 * ny, 0.35 * nz)
            kidneys = [KidneySpec((0.3 * nx, 0.5 * ny, 0.5 * nz), axes),
                       KidneySpec((0.7 * nx, 0.5 * ny, 0.5 * nz), axes)]
        if lesions is None:
            lesions = []
            for kidney, kind in zip(kidneys, (EnumLesion.CYST, EnumLesion.MASS)):
                cx, cy, cz = kidney.center
                lesions.append(LesionSpec((cx, cy + 0.3 * kidney.semi_axes[1], cz),
                                          0.45 * min(kidney.semi_axes), kind))
        self.kidneys = list(kidneys)
        self.lesions = list(lesions)
        self.attenuation = dict(ATTENUATION)
        if attenuation:
            self.attenuation.update(attenuation)
        self.noise_hu = float(noise_hu)
        if self.noise_hu < 0:
            raise SpecError("Noise level must be non-negative, found {}".format(noise_hu))
        self.misalignment = dict(misalignment) if misalignment else {}
        if EnumPhase.NC in self.misalignment:
            raise SpecError("The non-contrast phase is the alignment reference and cannot be misaligned")
        self.seed = int(seed)

    def __repr__(self):
        return "PhantomSpec <{}x{}x{}, kidneys: {}, lesions: {}, noise: {:g} HU>".format(
            *self.dims, len(self.kidneys), len(self.lesions), self.noise_hu)


class PhantomTruth(object):
    """ Ground truth of a generated phantom """

    def __init__(self, aligned, misaligned, kidney_mask, lesions, recovery):
        """
        :param aligned: PhaseTriple of noisy phases before misalignment
        :param misaligned: PhaseTriple handed to registration
        :param kidney_mask: MASK volume
        :param lesions: list of (EnumLesion, MASK volume)
        :param recovery: phase -> AffineTransform mapping misaligned back to aligned
        """
        self.aligned = aligned
        self.misaligned = misaligned
        self.kidney_mask = kidney_mask
        self.lesions = lesions
        self.recovery = recovery


########################################################################################################################
# Generator
########################################################################################################################

def _grid(dims):
    nx, ny, nz = dims
    z, y, x = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing='ij')
    return x.astype(np.float64), y.astype(np.float64), z.astype(np.float64)


def _tissue_labels(spec, grid):
    """ Per-voxel tissue name index map and the kidney mask """
    nx, ny, _ = spec.dims
    x, y, z = grid
    names = ['air', 'fat', 'bone', 'cortex', 'medulla', 'collecting', 'cyst', 'mass']
    labels = np.zeros(x.shape, dtype=np.int64)

    body = ((x - 0.5 * (nx - 1)) / (0.4 * nx)) ** 2 + ((y - 0.5 * (ny - 1)) / (0.38 * ny)) ** 2 <= 1.0
    labels[body] = names.index('fat')
    spine = ((x - 0.5 * (nx - 1)) / (0.07 * nx)) ** 2 + ((y - 0.78 * ny) / (0.07 * ny)) ** 2 <= 1.0
    labels[spine & body] = names.index('bone')

    kidney_mask = np.zeros(x.shape, dtype=bool)
    for kidney in spec.kidneys:
        r = kidney.radius(grid)
        inside = r <= 1.0
        kidney_mask |= inside
        labels[inside] = names.index('medulla')
        labels[inside & (r > 1.0 - kidney.cortex_fraction)] = names.index('cortex')
        labels[inside & (r < kidney.collecting_fraction)] = names.index('collecting')

    lesion_masks = []
    for lesion in spec.lesions:
        m = lesion.mask(grid)
        if not m.any():
            raise SpecError("{} covers no voxel".format(repr(lesion)))
        if np.any(m & ~kidney_mask):
            raise SpecError("{} at {} is not contained in a kidney".format(repr(lesion), lesion.center))
        labels[m] = names.index(LESION_NAMES[lesion.kind])
        lesion_masks.append((lesion.kind, m))

    return names, labels, kidney_mask, lesion_masks


def generate_phantom(spec):
    """ Build a three-phase phantom with its ground truth
    :param spec: PhantomSpec
    :return: PhantomTruth
    """
    # resampling is owned by the registration package
    from ..reg.affine import AffineTransform, resample

    grid = _grid(spec.dims)
    names, labels, kidney_mask, lesion_masks = _tissue_labels(spec, grid)
    rng = np.random.default_rng(spec.seed)
    origin = (0.0, 0.0, 0.0)

    aligned, misaligned, recovery = [], [], {}
    for phase in (EnumPhase.NC, EnumPhase.NEPH, EnumPhase.EXC):
        table = np.array([spec.attenuation[n][PHASE_INDEX[phase]] for n in names])
        data = table[labels]
        if spec.noise_hu > 0:
            data = data + rng.normal(0.0, spec.noise_hu, size=data.shape)
        vol = CtVolume(data, spec.spacing, origin, EnumDomain.HU, phase)
        aligned.append(vol)

        warp = spec.misalignment.get(phase)
        if warp is None or warp == AffineTransform.identity():
            misaligned.append(vol.copy_with())
            recovery[phase] = AffineTransform.identity()
        else:
            misaligned.append(resample(vol, warp))
            recovery[phase] = warp.inverse()

    mask = CtVolume(kidney_mask.astype(np.float64), spec.spacing, origin, EnumDomain.MASK, EnumPhase.NC)
    lesions = [(kind, CtVolume(m.astype(np.float64), spec.spacing, origin, EnumDomain.MASK, EnumPhase.NC))
               for kind, m in lesion_masks]
    logging.info('Generated %s', repr(spec))

    return PhantomTruth(PhaseTriple(*aligned, mask=mask, lesions=lesions),
                        PhaseTriple(*misaligned, mask=mask, lesions=lesions),
                        mask, lesions, recovery)


def random_phantom_spec(seed, base=None, max_rotation=5.0, max_translation=(5.0, 5.0, 1.0)):
    """ Phantom spec with random in-plane rotation and translation of the NEPH and EXC phases
    :param seed: random seed (also used for the noise)
    :param base: PhantomSpec supplying geometry and noise, default PhantomSpec()
    :param max_rotation: rotation limit in degrees
    :param max_translation: (x, y, z) translation limit in voxels
    :return: PhantomSpec
    """
    from ..reg.affine import AffineTransform

    base = PhantomSpec() if base is None else base
    rng = np.random.default_rng(seed)
    center = [(d - 1) / 2.0 for d in base.dims]
    misalignment = {}
    for phase in (EnumPhase.NEPH, EnumPhase.EXC):
        angle = rng.uniform(-max_rotation, max_rotation)
        shift = [rng.uniform(-m, m) for m in max_translation]
        misalignment[phase] = AffineTransform.rotation_z(angle, center, shift)

    return PhantomSpec(base.dims, base.spacing, base.kidneys, base.lesions, base.attenuation, base.noise_hu,
                       misalignment, seed)
