# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import json
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import jsonschema

from ..errors import DomainError, DimensionError, EmptyMaskError, DsniDataError
from ..vol.volume import CtVolume, EnumDomain, WindowSpec, DOMAIN_NAMES, denormalize
from ..qc.ssim import SsimConfig, ssim3d
from .fvd import FeatureExtractor, frechet_distance

# smallest set size for which the Frechet distance is reported
MIN_FVD_CASES = 2

_NUMBER_OR_INF = {'oneOf': [{'type': 'number'}, {'enum': ['inf']}]}

REPORT_SCHEMA = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'title': 'dsni metrics report',
    'type': 'object',
    'required': ['psnr_db', 'ssim', 'mae_hu', 'fvd', 'cases', 'config'],
    'additionalProperties': False,
    'properties': {
        'psnr_db': _NUMBER_OR_INF,
        'ssim': {'type': 'number'},
        'mae_hu': {'type': 'number', 'minimum': 0},
        'fvd': {'type': ['number', 'null'], 'minimum': 0},
        'cases': {
            'type': 'array',
            'items': {
                'type': 'object',
                'required': ['case_id', 'psnr_db', 'ssim', 'mae_hu'],
                'additionalProperties': False,
                'properties': {
                    'case_id': {'type': 'string'},
                    'psnr_db': _NUMBER_OR_INF,
                    'ssim': {'type': 'number'},
                    'mae_hu': {'type': 'number', 'minimum': 0}
                }
            }
        },
        'rois': {
            'type': 'array',
            'items': {
                'type': 'object',
                'required': ['case_id', 'label', 'voxels', 'truth_mean_hu', 'pred_mean_hu', 'delta_hu'],
                'properties': {
                    'case_id': {'type': 'string'},
                    'label': {'type': 'string'},
                    'voxels': {'type': 'integer', 'minimum': 1},
                    'truth_mean_hu': {'type': 'number'},
                    'pred_mean_hu': {'type': 'number'},
                    'delta_hu': {'type': 'number'},
                    'bin_edges': {'type': 'array', 'items': {'type': 'number'}},
                    'truth_counts': {'type': 'array', 'items': {'type': 'integer'}},
                    'pred_counts': {'type': 'array', 'items': {'type': 'integer'}}
                }
            }
        },
        'config': {
            'type': 'object',
            'required': ['window', 'ssim', 'extractor'],
            'properties': {
                'window': {'type': 'object'},
                'ssim': {'type': 'object'},
                'extractor': {'type': 'object'}
            }
        },
        'baseline': {'$ref': '#'}
    }
}


########################################################################################################################
# Image metrics
########################################################################################################################

def psnr(a, b, data_range=255.0):
    """ Peak signal-to-noise ratio in dB of two Norm255 volumes (+inf for identical inputs) """
    a.require_domain(EnumDomain.NORM255)
    b.require_domain(EnumDomain.NORM255)
    a.require_dims(b)
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return float('inf')
    return 10.0 * np.log10(data_range ** 2 / mse)


def mae_hu(a, b, w=None):
    """ Mean absolute attenuation error in HU
    :param a: CtVolume in HU or Norm255 domain
    :param b: CtVolume in the same domain and dims
    :param w: WindowSpec of Norm255 inputs
    :return: float HU
    """
    a.require_dims(b)
    if a.domain != b.domain:
        raise DomainError(found=DOMAIN_NAMES[b.domain], expected=DOMAIN_NAMES[a.domain])
    if a.domain == EnumDomain.NORM255:
        a, b = denormalize(a, w), denormalize(b, w)
    elif a.domain != EnumDomain.HU:
        raise DomainError(found=DOMAIN_NAMES[a.domain], expected='HU/Norm255')
    return float(np.mean(np.abs(a.data - b.data)))


class RoiStats(object):
    """ Attenuation summary of a region of interest """

    def __init__(self, mean, edges, counts):
        self.mean = float(mean)
        self.edges = np.asarray(edges, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.int64)

    def __repr__(self):
        return "RoiStats <mean: {:.2f} HU, voxels: {}, bins: {}>".format(self.mean, self.count, len(self.counts))

    @property
    def count(self):
        return int(self.counts.sum())

    def export(self):
        return {'mean_hu': self.mean, 'voxels': self.count,
                'bin_edges': self.edges.tolist(), 'counts': self.counts.tolist()}


def roi_stats(vol, roi, bins=16):
    """ Mean HU and histogram inside a binary region
    :param vol: CtVolume in HU domain
    :param roi: binary CtVolume or array with the volume's shape
    :param bins: number of bins over the value range, or explicit bin edges (values are clipped into them)
    :return: RoiStats
    """
    vol.require_domain(EnumDomain.HU)
    mask = roi.data if isinstance(roi, CtVolume) else np.asarray(roi)
    if mask.shape != vol.data.shape:
        raise DimensionError(found=mask.shape, expected=vol.data.shape)
    values = vol.data[mask > 0.5]
    if values.size == 0:
        raise EmptyMaskError("Region of interest is empty")

    # offset by the first value so a uniform region reproduces its value exactly
    mean = values[0] + np.mean(values - values[0])
    if np.isscalar(bins) or np.ndim(bins) == 0:
        edges = np.histogram_bin_edges(values, int(bins), range=(values.min(), values.max()))
    else:
        edges = np.asarray(bins, dtype=np.float64)
        values = np.clip(values, edges[0], edges[-1])
    counts, _ = np.histogram(values, edges)
    return RoiStats(mean, edges, counts)


########################################################################################################################
# Report
########################################################################################################################

class MetricsReport(object):
    """ Per-case and aggregate metrics of a set of synthetic / reference volume pairs """

    def __init__(self, cases, fvd=None, rois=None, window=None, ssim_cfg=None, extractor=None):
        """
        :param cases: list of dicts (case_id, psnr_db, ssim, mae_hu)
        :param fvd: Frechet distance of the sets or None
        :param rois: list of ROI comparison dicts
        :param window: WindowSpec used by the HU metrics
        :param ssim_cfg: SsimConfig
        :param extractor: FeatureExtractor behind the Frechet distance
        """
        if not cases:
            raise DsniDataError("Metrics report needs at least one case")
        self.cases = cases
        self.fvd = None if fvd is None else float(fvd)
        self.rois = rois or []
        self.window = WindowSpec() if window is None else window
        self.ssim_cfg = SsimConfig() if ssim_cfg is None else ssim_cfg
        self.extractor = FeatureExtractor() if extractor is None else extractor
        self.baseline = None

    def __repr__(self):
        return "MetricsReport <cases: {}, PSNR: {:.2f} dB, SSIM: {:.4f}, MAE: {:.2f} HU>".format(
            len(self.cases), self.psnr_db, self.ssim, self.mae_hu)

    @property
    def psnr_db(self):
        return float(np.mean([c['psnr_db'] for c in self.cases]))

    @property
    def ssim(self):
        return float(np.mean([c['ssim'] for c in self.cases]))

    @property
    def mae_hu(self):
        return float(np.mean([c['mae_hu'] for c in self.cases]))

    def info(self):
        msg  = " Cases: {}\n".format(len(self.cases))
        msg += " PSNR:  {:.3f} dB\n".format(self.psnr_db)
        msg += " SSIM:  {:.4f}\n".format(self.ssim)
        msg += " MAE:   {:.3f} HU\n".format(self.mae_hu)
        msg += " FVD:   {}\n".format('-' if self.fvd is None else '{:.4f}'.format(self.fvd))
        for roi in self.rois:
            msg += " ROI {} / {}: {:.1f} HU (reference {:.1f} HU)\n".format(
                roi['case_id'], roi['label'], roi['pred_mean_hu'], roi['truth_mean_hu'])
        return msg

    def export(self):
        def db(value):
            return 'inf' if np.isinf(value) else value

        data = {
            'psnr_db': db(self.psnr_db),
            'ssim': self.ssim,
            'mae_hu': self.mae_hu,
            'fvd': self.fvd,
            'cases': [dict(c, psnr_db=db(c['psnr_db'])) for c in self.cases],
            'rois': self.rois,
            'config': {'window': self.window.export(), 'ssim': self.ssim_cfg.export(),
                       'extractor': self.extractor.export()}
        }
        if self.baseline is not None:
            data['baseline'] = self.baseline.export()
        return data

    def validate(self):
        jsonschema.validate(self.export(), REPORT_SCHEMA)

    def to_json(self):
        return json.dumps(self.export(), indent=2, sort_keys=True)


def case_metrics(case_id, pred, truth, window=None, ssim_cfg=None):
    """ PSNR, SSIM and MAE of one Norm255 volume pair """
    return {'case_id': str(case_id),
            'psnr_db': psnr(pred, truth),
            'ssim': ssim3d(pred, truth, ssim_cfg),
            'mae_hu': mae_hu(pred, truth, window)}


def compare_roi(case_id, label, pred, truth, roi, window=None, bins=16):
    """ ROI attenuation of a synthetic volume against its reference, both histograms on the reference bins """
    ref = roi_stats(denormalize(truth, window), roi, bins)
    out = roi_stats(denormalize(pred, window), roi, ref.edges)
    return {'case_id': str(case_id), 'label': label, 'voxels': ref.count,
            'truth_mean_hu': ref.mean, 'pred_mean_hu': out.mean, 'delta_hu': out.mean - ref.mean,
            'bin_edges': ref.edges.tolist(), 'truth_counts': ref.counts.tolist(), 'pred_counts': out.counts.tolist()}


def evaluate_cases(pairs, window=None, ssim_cfg=None, extractor=None, rois=None, min_fvd=MIN_FVD_CASES, workers=1,
                   bins=16):
    """ Metrics report over case pairs
    :param pairs: list of (case_id, pred, truth) Norm255 CtVolumes
    :param window: WindowSpec of the normalization
    :param ssim_cfg: SsimConfig
    :param extractor: FeatureExtractor for the Frechet distance
    :param rois: list of (case_id, label, mask) regions for attenuation statistics
    :param min_fvd: smallest number of pairs for which the Frechet distance is computed
    :param workers: threads used for the per-case metrics (results keep case order)
    :param bins: histogram bins of the ROI statistics
    :return: MetricsReport
    """
    window = WindowSpec() if window is None else window
    ssim_cfg = SsimConfig() if ssim_cfg is None else ssim_cfg
    extractor = FeatureExtractor() if extractor is None else extractor

    def run(pair):
        return case_metrics(pair[0], pair[1], pair[2], window, ssim_cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cases = list(pool.map(run, pairs))
    else:
        cases = [run(p) for p in pairs]

    fvd = None
    if len(pairs) >= min_fvd:
        fvd = frechet_distance([p[1] for p in pairs], [p[2] for p in pairs], extractor)
    else:
        logging.info('Frechet distance skipped: %d cases, %d needed', len(pairs), min_fvd)

    volumes = {str(p[0]): p for p in pairs}
    roi_rows = []
    for case_id, label, mask in rois or []:
        if str(case_id) not in volumes:
            raise DsniDataError("ROI refers to unknown case: {}".format(case_id))
        _, pred, truth = volumes[str(case_id)]
        roi_rows.append(compare_roi(case_id, label, pred, truth, mask, window, bins))

    return MetricsReport(cases, fvd, roi_rows, window, ssim_cfg, extractor)
