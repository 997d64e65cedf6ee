# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import json
import logging

from ..errors import ConfigError, DsniDataError
from .ssim import SsimConfig, ssim3d


class GateConfig(object):
    """ Weights of the combined registration score and the acceptance threshold """

    def __init__(self, weights=(0.2, 0.1, 0.7), threshold=0.65):
        """
        :param weights: (w_NN, w_NU, w_UN)
        :param threshold: a case is accepted when its score is strictly above this value
        """
        weights = tuple(float(w) for w in weights)
        if len(weights) != 3 or min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-9:
            raise ConfigError("Gate weights must be 3 non-negative values summing to 1, found {}".format(weights))
        self.weights = weights
        self.threshold = float(threshold)

    def __repr__(self):
        return "GateConfig <weights: {}, threshold: {:g}>".format(self.weights, self.threshold)

    def export(self):
        return {'weights': list(self.weights), 'threshold': self.threshold}


class GateRecord(object):
    """ Registration quality of one case """

    FIELDS = ('case_id', 'ssim_nn', 'ssim_nu', 'ssim_un', 'ssim_select', 'accepted')

    def __init__(self, case_id, ssim_nn, ssim_nu, ssim_un, ssim_select, accepted):
        self.case_id = case_id
        self.ssim_nn = ssim_nn
        self.ssim_nu = ssim_nu
        self.ssim_un = ssim_un
        self.ssim_select = ssim_select
        self.accepted = accepted

    def __repr__(self):
        return "GateRecord <{}: {:.4f}, {}>".format(self.case_id, self.ssim_select,
                                                   'accepted' if self.accepted else 'rejected')

    def __eq__(self, obj):
        return isinstance(obj, GateRecord) and self.to_dict() == obj.to_dict()

    def to_dict(self):
        return {name: getattr(self, name) for name in self.FIELDS}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(*(data[name] for name in cls.FIELDS))
        except KeyError as e:
            raise DsniDataError("Gate record without field {}".format(e))


def combine_ssim(s_nn, s_nu, s_un, g=None):
    """ Weighted registration score w_NN * s_nn + w_NU * s_nu + w_UN * s_un """
    g = GateConfig() if g is None else g
    w_nn, w_nu, w_un = g.weights
    return w_nn * s_nn + w_nu * s_nu + w_un * s_un


def gate(score, g=None):
    """ True when score is strictly above the threshold """
    g = GateConfig() if g is None else g
    return score > g.threshold


def ssim_select(phases, ssim_cfg=None, gate_cfg=None, case_id=None):
    """ Score a registered triple
    :param phases: PhaseTriple (Norm255)
    :param ssim_cfg: SsimConfig
    :param gate_cfg: GateConfig
    :param case_id: identifier stored in the record
    :return: GateRecord
    """
    ssim_cfg = SsimConfig() if ssim_cfg is None else ssim_cfg
    gate_cfg = GateConfig() if gate_cfg is None else gate_cfg
    nc, neph, exc = phases.phases()
    s_nn = ssim3d(nc, neph, ssim_cfg)
    s_nu = ssim3d(nc, exc, ssim_cfg)
    s_un = ssim3d(exc, neph, ssim_cfg)
    score = combine_ssim(s_nn, s_nu, s_un, gate_cfg)
    record = GateRecord(case_id, s_nn, s_nu, s_un, score, gate(score, gate_cfg))
    logging.info('Gate %s', repr(record))
    return record


def export_gate_report(records, ssim_cfg=None, gate_cfg=None):
    """ JSON text of a gate report (config echo plus one row per case) """
    ssim_cfg = SsimConfig() if ssim_cfg is None else ssim_cfg
    gate_cfg = GateConfig() if gate_cfg is None else gate_cfg
    report = {
        'ssim': ssim_cfg.export(),
        'gate': gate_cfg.export(),
        'accepted': sum(1 for r in records if r.accepted),
        'total': len(records),
        'cases': [r.to_dict() for r in records]
    }
    return json.dumps(report, indent=2)
