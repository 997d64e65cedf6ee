# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import json
import numpy as np

from ..errors import TransformError, DsniDataError
from ..vol.volume import CtVolume, EnumDomain, BACKGROUND


########################################################################################################################
# Affine Transform
########################################################################################################################

class AffineTransform(object):
    """ Voxel-space affine map p -> A * p + t, points in (x, y, z) order.

    Used with the pull convention: the value of an output voxel p is read from the moving volume at A * p + t.
    """

    MIN_DET = 1e-12

    @property
    def det(self):
        return float(np.linalg.det(self.matrix))

    @property
    def angle_z(self):
        """ In-plane rotation angle (deg) of the linear part """
        return float(np.degrees(np.arctan2(self.matrix[1, 0], self.matrix[0, 0])))

    def __init__(self, matrix=None, translation=None):
        self.matrix = np.eye(3) if matrix is None else np.array(matrix, dtype=np.float64).reshape(3, 3)
        self.translation = np.zeros(3) if translation is None else np.array(translation, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(self.matrix)) or not np.all(np.isfinite(self.translation)):
            raise TransformError("Transform contains non-finite values")
        if abs(self.det) < self.MIN_DET:
            raise TransformError("Singular transform matrix (det = {:g})".format(self.det))

    def __repr__(self):
        return "AffineTransform <det: {:.4f}, t: [{:.3f}, {:.3f}, {:.3f}]>".format(self.det, *self.translation)

    def __eq__(self, obj):
        return isinstance(obj, AffineTransform) and np.array_equal(self.matrix, obj.matrix) and \
               np.array_equal(self.translation, obj.translation)

    def __ne__(self, obj):
        return not self.__eq__(obj)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def shift(cls, translation):
        return cls(None, translation)

    @classmethod
    def rotation_z(cls, degrees, center, translation=(0.0, 0.0, 0.0)):
        """ In-plane rotation about center followed by a translation """
        a = np.radians(degrees)
        rot = np.array([[np.cos(a), -np.sin(a), 0.0],
                        [np.sin(a), np.cos(a), 0.0],
                        [0.0, 0.0, 1.0]])
        center = np.asarray(center, dtype=np.float64)
        return cls(rot, center - rot.dot(center) + np.asarray(translation, dtype=np.float64))

    def apply(self, points):
        """ Map an [N, 3] array of (x, y, z) points """
        points = np.asarray(points, dtype=np.float64)
        return points.dot(self.matrix.T) + self.translation

    def compose(self, other):
        """ self after other: p -> self(other(p)) """
        return AffineTransform(self.matrix.dot(other.matrix), self.matrix.dot(other.translation) + self.translation)

    def inverse(self):
        inv = np.linalg.inv(self.matrix)
        return AffineTransform(inv, -inv.dot(self.translation))

    def export(self):
        return {'A': self.matrix.tolist(), 't': self.translation.tolist(), 'units': 'voxel'}

    @classmethod
    def parse(cls, data):
        try:
            if data.get('units', 'voxel') != 'voxel':
                raise DsniDataError("Unsupported transform units: {}".format(data['units']))
            return cls(data['A'], data['t'])
        except (KeyError, TypeError, ValueError) as e:
            raise DsniDataError("Malformed transform: {}".format(e))

    def to_json(self):
        return json.dumps(self.export())

    @classmethod
    def from_json(cls, text):
        return cls.parse(json.loads(text))


########################################################################################################################
# Resampling
########################################################################################################################

def voxel_grid(dims):
    """ All voxel coordinates of a grid as [N, 3] (x, y, z) points, x-fastest """
    nx, ny, nz = dims
    z, y, x = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing='ij')
    return np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1).astype(np.float64)


def trilinear(data, points, background=0.0, gradient=False):
    """ Trilinear interpolation of a [z, y, x] array at (x, y, z) points
    :param data: 3D array
    :param points: [N, 3] sample positions in voxel units
    :param background: value of lattice positions outside the array
    :param gradient: also return d(value)/d(x, y, z) as [N, 3]
    :return: values [N] (and gradient)
    """
    nz, ny, nx = data.shape
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    x0, y0, z0 = np.floor(x), np.floor(y), np.floor(z)
    fx, fy, fz = x - x0, y - y0, z - z0
    x0, y0, z0 = x0.astype(np.int64), y0.astype(np.int64), z0.astype(np.int64)

    def corner(dz, dy, dx):
        cz, cy, cx = z0 + dz, y0 + dy, x0 + dx
        inside = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny) & (cz >= 0) & (cz < nz)
        out = np.full(x.shape, background, dtype=np.float64)
        out[inside] = data[cz[inside], cy[inside], cx[inside]]
        return out

    c = {(dz, dy, dx): corner(dz, dy, dx) for dz in (0, 1) for dy in (0, 1) for dx in (0, 1)}
    gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz

    c00 = c[0, 0, 0] * gx + c[0, 0, 1] * fx
    c01 = c[0, 1, 0] * gx + c[0, 1, 1] * fx
    c10 = c[1, 0, 0] * gx + c[1, 0, 1] * fx
    c11 = c[1, 1, 0] * gx + c[1, 1, 1] * fx
    c0 = c00 * gy + c01 * fy
    c1 = c10 * gy + c11 * fy
    values = c0 * gz + c1 * fz
    if not gradient:
        return values

    dx = ((c[0, 0, 1] - c[0, 0, 0]) * gy + (c[0, 1, 1] - c[0, 1, 0]) * fy) * gz + \
         ((c[1, 0, 1] - c[1, 0, 0]) * gy + (c[1, 1, 1] - c[1, 1, 0]) * fy) * fz
    dy = (c01 - c00) * gz + (c11 - c10) * fz
    dz = c1 - c0
    return values, np.stack([dx, dy, dz], axis=1)


def resample(moving, xf, out_dims=None, background=None):
    """ Resample moving onto an output grid through the pull transform xf
    :param moving: CtVolume
    :param xf: AffineTransform, output voxel p is read at xf.apply(p)
    :param out_dims: output (X, Y, Z), default moving dims
    :param background: fill value, default per moving domain
    :return: CtVolume
    """
    if abs(xf.det) < AffineTransform.MIN_DET:
        raise TransformError()
    out_dims = moving.dims if out_dims is None else tuple(int(d) for d in out_dims)
    background = BACKGROUND[moving.domain] if background is None else background
    values = trilinear(moving.data, xf.apply(voxel_grid(out_dims)), background)
    data = values.reshape(out_dims[2], out_dims[1], out_dims[0])
    if moving.domain == EnumDomain.NORM255:
        data = np.clip(data, 0.0, 255.0)
    return CtVolume(data, moving.spacing, moving.origin, moving.domain, moving.phase)
