# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import json
import logging
import numpy as np

from easy_enum import Enum
from ..errors import DomainError, DimensionError, CoverageError, EmptyMaskError, DsniDataError
from .misc import atomic_write


########################################################################################################################
# Enums
########################################################################################################################

class EnumDomain(Enum):
    """ Value domain of volume voxels """
    HU = (0, 'Hounsfield units')
    NORM255 = (1, 'Windowed and normalized to 0 .. 255')
    MASK = (2, 'Binary mask with values 0 or 1')


class EnumPhase(Enum):
    """ CT urography acquisition phase """
    NONE = (0, 'Unspecified')
    NC = (1, 'Non-contrast phase')
    NEPH = (2, 'Nephrographic phase')
    EXC = (3, 'Excretory (urographic) phase')


# Names used in volume file headers
DOMAIN_NAMES = {EnumDomain.HU: 'HU', EnumDomain.NORM255: 'Norm255', EnumDomain.MASK: 'MASK'}
PHASE_NAMES = {EnumPhase.NC: 'NC', EnumPhase.NEPH: 'NEPH', EnumPhase.EXC: 'EXC'}

# Out-of-field fill value per domain (air)
BACKGROUND = {EnumDomain.HU: -1000.0, EnumDomain.NORM255: 0.0, EnumDomain.MASK: 0.0}

HEADER_EXT = '.ctvol.json'
RAW_EXT = '.ctvol.raw'


########################################################################################################################
# Classes
########################################################################################################################

class WindowSpec(object):
    """ Display window: width centered at level, both in HU """

    @property
    def low(self):
        return self.level - self.width / 2.0

    @property
    def high(self):
        return self.level + self.width / 2.0

    def __init__(self, width=400.0, level=50.0):
        if not width > 0:
            raise DsniDataError("Window width must be positive, found {}".format(width))
        self.width = float(width)
        self.level = float(level)

    def __repr__(self):
        return "WindowSpec <W: {:g}, L: {:g}>".format(self.width, self.level)

    def __eq__(self, obj):
        return isinstance(obj, WindowSpec) and self.width == obj.width and self.level == obj.level

    def export(self):
        return {'width': self.width, 'level': self.level}


class CtVolume(object):
    """ Dense scalar grid with spacing/origin metadata.

    Voxels are held as a numpy array indexed [z, y, x], so the flattened order is x-fastest.
    Dimensions, spacing and origin are reported in (x, y, z) order.
    """

    @property
    def dims(self):
        nz, ny, nx = self.data.shape
        return nx, ny, nz

    @property
    def voxels(self):
        """ Flat voxel values, x-fastest """
        return self.data.ravel()

    @property
    def is_mask(self):
        return self.domain == EnumDomain.MASK

    @property
    def slice_positions(self):
        """ Axial position (mm) of every slice """
        return self.origin[2] + self.spacing[2] * np.arange(self.data.shape[0])

    def __init__(self, data, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0), domain=EnumDomain.HU,
                 phase=EnumPhase.NONE):
        """ Initialize volume
        :param data: 3D array indexed [z, y, x]
        :param spacing: voxel size in mm (x, y, z)
        :param origin: position of the first voxel in mm (x, y, z)
        :param domain: EnumDomain value
        :param phase: EnumPhase value
        """
        assert domain in EnumDomain
        assert phase in EnumPhase
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 3 or min(data.shape) < 1:
            raise DimensionError("Volume data must be a non-empty 3D array, found shape {}".format(data.shape))
        spacing = tuple(float(s) for s in spacing)
        if len(spacing) != 3 or min(spacing) <= 0:
            raise DsniDataError("Spacing must be 3 positive values, found {}".format(spacing))
        origin = tuple(float(o) for o in origin)
        if len(origin) != 3:
            raise DsniDataError("Origin must have 3 values, found {}".format(origin))
        if domain == EnumDomain.NORM255 and (data.min() < 0.0 or data.max() > 255.0):
            raise DomainError("Norm255 voxels out of range [{}, {}]".format(data.min(), data.max()))

        self.data = data
        self.spacing = spacing
        self.origin = origin
        self.domain = domain
        self.phase = phase

    def __repr__(self):
        return "CtVolume <{}x{}x{}, {}, {}>".format(*self.dims, EnumDomain[self.domain], EnumPhase[self.phase])

    def __eq__(self, obj):
        if not isinstance(obj, CtVolume):
            return False
        if self.domain != obj.domain or self.spacing != obj.spacing or self.origin != obj.origin:
            return False
        return self.data.shape == obj.data.shape and np.array_equal(self.data, obj.data)

    def __ne__(self, obj):
        return not self.__eq__(obj)

    def info(self):
        msg  = " Dims:    {} x {} x {}\n".format(*self.dims)
        msg += " Spacing: {:.3f} x {:.3f} x {:.3f} mm\n".format(*self.spacing)
        msg += " Origin:  {:.3f}, {:.3f}, {:.3f} mm\n".format(*self.origin)
        msg += " Domain:  {}\n".format(EnumDomain.desc(self.domain))
        msg += " Phase:   {}\n".format(EnumPhase.desc(self.phase))
        msg += " Range:   {:.3f} .. {:.3f}\n".format(self.data.min(), self.data.max())
        return msg

    def copy_with(self, data=None, domain=None, phase=None, origin=None):
        """ New volume sharing this volume's metadata unless overridden """
        return CtVolume(self.data.copy() if data is None else data,
                        self.spacing,
                        self.origin if origin is None else origin,
                        self.domain if domain is None else domain,
                        self.phase if phase is None else phase)

    def require_domain(self, *domains):
        if self.domain not in domains:
            raise DomainError(found=EnumDomain[self.domain], expected='/'.join(EnumDomain[d] for d in domains))

    def require_dims(self, obj):
        if self.dims != obj.dims:
            raise DimensionError(found=self.dims, expected=obj.dims)

    def export_header(self):
        return {
            'dims': list(self.dims),
            'spacing_mm': list(self.spacing),
            'origin_mm': list(self.origin),
            'domain': DOMAIN_NAMES[self.domain],
            'phase': PHASE_NAMES.get(self.phase),
            'order': 'x-fastest'
        }

    def export_raw(self):
        return np.ascontiguousarray(self.data, dtype='<f4').tobytes()

    def save(self, base):
        """ Write '<base>.ctvol.json' and '<base>.ctvol.raw'
        :param base: output path without extension
        :return: path of the header file
        """
        if base.endswith(HEADER_EXT):
            base = base[:-len(HEADER_EXT)]
        atomic_write(base + RAW_EXT, self.export_raw())
        header = json.dumps(self.export_header(), indent=2, sort_keys=True)
        atomic_write(base + HEADER_EXT, header.encode('utf-8'))
        logging.debug('Saved volume %s (%s)', base, repr(self))
        return base + HEADER_EXT

    @classmethod
    def parse(cls, header, raw):
        """ Build volume from header dict and raw payload bytes """
        try:
            nx, ny, nz = (int(v) for v in header['dims'])
            domain = {v: k for k, v in DOMAIN_NAMES.items()}[header['domain']]
            phase = {v: k for k, v in PHASE_NAMES.items()}.get(header.get('phase'), EnumPhase.NONE)
            spacing = header['spacing_mm']
            origin = header['origin_mm']
        except (KeyError, TypeError, ValueError) as e:
            raise DsniDataError("Malformed volume header: {}".format(e))
        if header.get('order', 'x-fastest') != 'x-fastest':
            raise DsniDataError("Unsupported voxel order: {}".format(header['order']))
        if len(raw) != nx * ny * nz * 4:
            raise DimensionError("Raw payload has {} bytes, expected {}".format(len(raw), nx * ny * nz * 4))
        data = np.frombuffer(raw, dtype='<f4').astype(np.float64).reshape(nz, ny, nx)
        return cls(data, spacing, origin, domain, phase)

    @classmethod
    def load(cls, path):
        """ Read volume from '<base>.ctvol.json' (the raw file is found next to it) """
        base = path[:-len(HEADER_EXT)] if path.endswith(HEADER_EXT) else path
        with open(base + HEADER_EXT, 'r') as f:
            try:
                header = json.load(f)
            except ValueError as e:
                raise DsniDataError("Malformed volume header {}: {}".format(base + HEADER_EXT, e))
        with open(base + RAW_EXT, 'rb') as f:
            raw = f.read()
        return cls.parse(header, raw)


class PhaseTriple(object):
    """ The three CT urography phases of one case """

    def __init__(self, noncontrast, nephrographic, excretory, mask=None, lesions=None, meta=None):
        """
        :param noncontrast: CtVolume
        :param nephrographic: CtVolume
        :param excretory: CtVolume
        :param mask: optional kidney mask aligned with the phases
        :param lesions: optional list of (kind, mask) pairs aligned with the phases
        :param meta: processing record (crop window, transforms, ...)
        """
        self.noncontrast = noncontrast
        self.nephrographic = nephrographic
        self.excretory = excretory
        self.mask = mask
        self.lesions = list(lesions) if lesions else []
        self.meta = dict(meta) if meta else {}

    def __repr__(self):
        return "PhaseTriple <NC: {}, NEPH: {}, EXC: {}>".format(
            self.noncontrast.dims, self.nephrographic.dims, self.excretory.dims)

    def __iter__(self):
        return iter(self.phases())

    def phases(self):
        return [self.noncontrast, self.nephrographic, self.excretory]

    def map(self, fn, masks=True):
        """ Apply fn to every phase (and to the masks when masks is True) """
        return PhaseTriple(fn(self.noncontrast), fn(self.nephrographic), fn(self.excretory),
                           fn(self.mask) if (masks and self.mask is not None) else self.mask,
                           [(kind, fn(m)) for kind, m in self.lesions] if masks else self.lesions, self.meta)

    def validate(self):
        dims = self.noncontrast.dims
        for vol in self.phases():
            if vol.dims != dims or vol.spacing != self.noncontrast.spacing:
                raise DimensionError(found=vol.dims, expected=dims)


class CropWindow(object):
    """ Voxel box kept by a crop """

    def __init__(self, x0, y0, z0, nx, ny, nz):
        self.x0, self.y0, self.z0 = x0, y0, z0
        self.nx, self.ny, self.nz = nx, ny, nz

    def __repr__(self):
        return "CropWindow <x: [{}, {}), y: [{}, {}), z: [{}, {})>".format(
            self.x0, self.x0 + self.nx, self.y0, self.y0 + self.ny, self.z0, self.z0 + self.nz)

    def __eq__(self, obj):
        return isinstance(obj, CropWindow) and self.export() == obj.export()

    def export(self):
        return {'offset': [self.x0, self.y0, self.z0], 'size': [self.nx, self.ny, self.nz]}


########################################################################################################################
# Methods
########################################################################################################################

def window_normalize(vol, w=None):
    """ Map HU to [0, 255] through the display window (clamp, then scale)
    :param vol: CtVolume in HU domain
    :param w: WindowSpec (default width 400, level 50)
    :return: CtVolume in Norm255 domain
    """
    w = WindowSpec() if w is None else w
    vol.require_domain(EnumDomain.HU)
    data = np.clip((vol.data - w.low) / w.width, 0.0, 1.0) * 255.0
    return vol.copy_with(data=data, domain=EnumDomain.NORM255)


def denormalize(vol, w=None):
    """ Inverse of window_normalize on values inside the window
    :param vol: CtVolume in Norm255 domain
    :param w: WindowSpec used for the normalization
    :return: CtVolume in HU domain
    """
    w = WindowSpec() if w is None else w
    vol.require_domain(EnumDomain.NORM255)
    data = vol.data / 255.0 * w.width + w.low
    return vol.copy_with(data=data, domain=EnumDomain.HU)


def match_slice_extent(phases):
    """ Trim the phases to the axial range of the phase with the fewest slices
    :param phases: PhaseTriple
    :return: PhaseTriple with equal slice counts
    """
    vols = phases.phases()
    ref = min(vols, key=lambda v: v.data.shape[0])
    nz = ref.data.shape[0]
    ref_pos = ref.slice_positions
    out, starts = [], []

    for vol in vols:
        pos = vol.slice_positions
        if ref_pos[0] > pos[-1] + vol.spacing[2] / 2 or ref_pos[-1] < pos[0] - vol.spacing[2] / 2:
            raise CoverageError("Slice range [{:.2f}, {:.2f}] does not overlap [{:.2f}, {:.2f}]".format(
                pos[0], pos[-1], ref_pos[0], ref_pos[-1]))
        start = int(np.argmin(np.abs(pos - ref_pos[0])))
        if abs(pos[start] - ref_pos[0]) > vol.spacing[2] / 2 + 1e-9 or start + nz > len(pos):
            raise CoverageError("Phase {} does not cover slices {:.2f} .. {:.2f}".format(
                EnumPhase[vol.phase], ref_pos[0], ref_pos[-1]))
        origin = (vol.origin[0], vol.origin[1], float(pos[start]))
        out.append(vol.copy_with(data=vol.data[start:start + nz].copy(), origin=origin))
        starts.append(start)
        if start or len(pos) != nz:
            logging.info('Phase %s trimmed to slices %d .. %d', EnumPhase[vol.phase], start, start + nz - 1)

    def trim(mask):
        # masks live on the non-contrast grid
        origin = (mask.origin[0], mask.origin[1], float(mask.slice_positions[starts[0]]))
        return mask.copy_with(data=mask.data[starts[0]:starts[0] + nz].copy(), origin=origin)

    mask = None if phases.mask is None else trim(phases.mask)
    lesions = [(kind, trim(m)) for kind, m in phases.lesions]
    return PhaseTriple(out[0], out[1], out[2], mask, lesions, phases.meta)


def crop_window(mask, target_xy):
    """ Crop box of in-plane size target_xy centered on the mask bounding box

    The z range spans the first to the last masked slice, slices without mask voxels in between are kept.
    :param mask: binary CtVolume
    :param target_xy: (X, Y) in-plane output size
    :return: CropWindow
    """
    nx, ny, _ = mask.dims
    tx, ty = int(target_xy[0]), int(target_xy[1])
    if tx > nx or ty > ny or tx < 1 or ty < 1:
        raise DimensionError("Crop target {}x{} does not fit volume {}x{}".format(tx, ty, nx, ny))
    idx = np.argwhere(mask.data > 0.5)
    if idx.size == 0:
        raise EmptyMaskError()
    (z_lo, y_lo, x_lo), (z_hi, y_hi, x_hi) = idx.min(axis=0), idx.max(axis=0)

    x0 = min(max((x_lo + x_hi) // 2 - tx // 2, 0), nx - tx)
    y0 = min(max((y_lo + y_hi) // 2 - ty // 2, 0), ny - ty)
    return CropWindow(int(x0), int(y0), int(z_lo), tx, ty, int(z_hi - z_lo + 1))


def apply_crop(vol, window):
    """ Cut the crop window out of the volume, shifting the origin by offset * spacing """
    x0, y0, z0 = window.x0, window.y0, window.z0
    if x0 + window.nx > vol.dims[0] or y0 + window.ny > vol.dims[1] or z0 + window.nz > vol.dims[2]:
        raise DimensionError("{} does not fit volume {}".format(window, vol.dims))
    data = vol.data[z0:z0 + window.nz, y0:y0 + window.ny, x0:x0 + window.nx].copy()
    origin = tuple(o + i * s for o, i, s in zip(vol.origin, (x0, y0, z0), vol.spacing))
    return vol.copy_with(data=data, origin=origin)


def crop_to_mask(vol, mask, target_xy):
    """ Crop vol in-plane to target_xy around the mask and drop slices without mask voxels """
    vol.require_dims(mask)
    return apply_crop(vol, crop_window(mask, target_xy))
