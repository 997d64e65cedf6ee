# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import os
import copy
import yaml
import jsonschema

from ..errors import ConfigError
from ..vol.volume import WindowSpec
from ..vol.mask import ThresholdMasker
from ..vol.phantom import PhantomSpec
from ..reg.register import RegistrationConfig, OBJECTIVE_NAMES
from ..qc.ssim import SsimConfig
from ..qc.gate import GateConfig
from ..net.denoiser import SwinConfig
from ..ddpm.schedule import TARGET_NAMES, make_schedule, default_schedule
from ..ddpm.sampler import SamplerConfig, VARIANCE_NAMES
from ..ddpm.augment import AugmentConfig
from ..ddpm.trainer import TrainConfig
from ..eval.fvd import FeatureExtractor

# environment variable capping the case worker threads
THREADS_ENV = 'DSNI_THREADS'

DEFAULTS = {
    'seed': 0,
    'window': {'width': 400.0, 'level': 50.0},
    'phantom': {'dims': [40, 40, 24], 'spacing': [1.5, 1.5, 3.0], 'noise_hu': 10.0,
                'max_rotation': 5.0, 'max_translation': [5.0, 5.0, 1.0]},
    'mask': {'hu_range': [-40.0, 130.0], 'min_component_voxels': 20, 'max_components': 2},
    'crop': {'xy': [32, 32]},
    'registration': {'levels': 3, 'max_iterations': 200, 'tolerance': 1e-6, 'step_matrix': 0.02,
                     'step_translation': 1.0, 'objective': 'mse', 'min_size': 4},
    'ssim': {'window': 7, 'k1': 0.01, 'k2': 0.03},
    'gate': {'weights': [0.2, 0.1, 0.7], 'threshold': 0.65},
    'split': {'val': 1, 'test': 1},
    'swin': SwinConfig().export(),
    'schedule': {'T': 1000, 'beta_1': None, 'beta_T': None},
    'train': {'lr': 2e-5, 'batch': 4, 'steps': 1000, 'val_every': 100, 'weight_decay': 0.01, 'target': 'eps'},
    'sampler': {'variance': 'beta_tilde', 'steps': None, 'depth': None},
    'augment': {'window': 16, 'stride': 4, 'rotations': [0], 'flips': []},
    'evaluate': {'bins': 16, 'extractor_seed': 0, 'min_fvd': 2}
}


def _obj(properties):
    return {'type': 'object', 'additionalProperties': False, 'properties': properties}


_NUM = {'type': 'number'}
_INT = {'type': 'integer'}
_POS = {'type': 'integer', 'minimum': 1}
_OPT_POS = {'type': ['integer', 'null'], 'minimum': 1}
_OPT_NUM = {'type': ['number', 'null']}


def _vec(item, n=None):
    out = {'type': 'array', 'items': item}
    if n is not None:
        out.update(minItems=n, maxItems=n)
    return out


SCHEMA = _obj({
    'seed': {'type': 'integer', 'minimum': 0},
    'window': _obj({'width': {'type': 'number', 'exclusiveMinimum': 0}, 'level': _NUM}),
    'phantom': _obj({'dims': _vec(_POS, 3), 'spacing': _vec(_NUM, 3), 'noise_hu': {'type': 'number', 'minimum': 0},
                     'max_rotation': _NUM, 'max_translation': _vec(_NUM, 3)}),
    'mask': _obj({'hu_range': _vec(_NUM, 2), 'min_component_voxels': _POS, 'max_components': _POS}),
    'crop': _obj({'xy': _vec(_POS, 2)}),
    'registration': _obj({'levels': _POS, 'max_iterations': _INT, 'tolerance': _NUM, 'step_matrix': _NUM,
                          'step_translation': _NUM, 'objective': {'enum': list(OBJECTIVE_NAMES.values())},
                          'min_size': _POS}),
    'ssim': _obj({'window': _POS, 'k1': _NUM, 'k2': _NUM}),
    'gate': _obj({'weights': _vec(_NUM, 3), 'threshold': _NUM}),
    'split': _obj({'val': {'type': 'integer', 'minimum': 0}, 'test': {'type': 'integer', 'minimum': 0}}),
    'swin': _obj({'in_channels': _POS, 'out_channels': _POS, 'patch': _vec(_POS, 3), 'window': _vec(_POS, 3),
                  'shift': _vec(_INT, 3), 'embed_dim': _POS, 'heads': _vec(_POS, 2), 'depths': _vec(_POS, 2),
                  'time_dim': _POS, 'mlp_ratio': _POS, 'resblocks': _INT}),
    'schedule': _obj({'T': _POS, 'beta_1': _OPT_NUM, 'beta_T': _OPT_NUM}),
    'train': _obj({'lr': _NUM, 'batch': _POS, 'steps': _INT, 'val_every': _POS, 'weight_decay': _NUM,
                   'target': {'enum': list(TARGET_NAMES.values())}}),
    'sampler': _obj({'variance': {'enum': list(VARIANCE_NAMES.values())}, 'steps': _OPT_POS, 'depth': _OPT_POS}),
    'augment': _obj({'window': _POS, 'stride': _POS, 'rotations': _vec(_INT),
                     'flips': _vec({'enum': ['x', 'y', 'z']})}),
    'evaluate': _obj({'bins': _POS, 'extractor_seed': {'type': 'integer', 'minimum': 0}, 'min_fvd': _POS})
})


def _merge(base, update):
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _key(names, value, what):
    for k, v in names.items():
        if v == value:
            return k
    raise ConfigError("Unknown {}: {}".format(what, value))


class RunConfig(object):
    """ Validated run configuration with builders for every module config """

    def __init__(self, data=None):
        """
        :param data: nested dict overriding DEFAULTS
        """
        data = {} if data is None else data
        if not isinstance(data, dict):
            raise ConfigError("Run configuration must be a mapping, found {}".format(type(data).__name__))
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as e:
            path = '.'.join(str(p) for p in e.absolute_path) or '<root>'
            raise ConfigError("Invalid run configuration at {}: {}".format(path, e.message))
        self.data = _merge(DEFAULTS, data)

    def __repr__(self):
        return "RunConfig <seed: {}>".format(self.data['seed'])

    def __getitem__(self, section):
        return self.data[section]

    @property
    def seed(self):
        return self.data['seed']

    def override(self, section=None, **values):
        """ Apply command-line values (None means 'not given') and re-validate
        :param section: config section, None for top-level keys
        :return: self
        """
        values = {k: v for k, v in values.items() if v is not None}
        if values:
            update = values if section is None else {section: values}
            self.data = RunConfig(_merge(self.data, update)).data
        return self

    def export(self):
        return copy.deepcopy(self.data)

    @classmethod
    def load(cls, path):
        """ Read a YAML or JSON configuration file """
        with open(path, 'r') as f:
            try:
                data = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError("Malformed configuration file {}: {}".format(path, e))
        return cls(data or {})

    # builders

    def window(self):
        return WindowSpec(**self.data['window'])

    def phantom_base(self):
        p = self.data['phantom']
        return PhantomSpec(p['dims'], p['spacing'], noise_hu=p['noise_hu'])

    def masker(self):
        m = self.data['mask']
        return ThresholdMasker(tuple(m['hu_range']), m['min_component_voxels'], m['max_components'], self.window())

    def crop_xy(self):
        return tuple(self.data['crop']['xy'])

    def registration(self):
        r = dict(self.data['registration'])
        r['objective'] = _key(OBJECTIVE_NAMES, r['objective'], 'registration objective')
        return RegistrationConfig(**r)

    def ssim(self):
        return SsimConfig(**self.data['ssim'])

    def gate(self):
        g = self.data['gate']
        return GateConfig(tuple(g['weights']), g['threshold'])

    def swin(self):
        return SwinConfig.parse(self.data['swin'])

    def schedule(self):
        s = self.data['schedule']
        if s['beta_1'] is None and s['beta_T'] is None:
            return default_schedule(s['T'])
        defaults = default_schedule(s['T'])
        beta_1 = defaults.betas[1] if s['beta_1'] is None else s['beta_1']
        beta_T = defaults.betas[-1] if s['beta_T'] is None else s['beta_T']
        return make_schedule(s['T'], beta_1, beta_T)

    def train(self):
        t = dict(self.data['train'])
        t['target'] = _key(TARGET_NAMES, t['target'], 'training target')
        return TrainConfig(seed=self.seed, **t)

    def sampler(self):
        s = self.data['sampler']
        return SamplerConfig(_key(VARIANCE_NAMES, s['variance'], 'sampler variance'), self.seed, s['steps'])

    def augment(self):
        a = self.data['augment']
        return AugmentConfig(a['window'], a['stride'], tuple(a['rotations']), tuple(a['flips']))

    def extractor(self):
        return FeatureExtractor(self.data['evaluate']['extractor_seed'])


def thread_count():
    """ Worker threads for independent cases, from DSNI_THREADS (default 1) """
    value = os.environ.get(THREADS_ENV, '1')
    try:
        count = int(value)
    except ValueError:
        raise ConfigError("{} must be an integer, found '{}'".format(THREADS_ENV, value))
    if count < 1:
        raise ConfigError("{} must be at least 1, found {}".format(THREADS_ENV, count))
    return count
