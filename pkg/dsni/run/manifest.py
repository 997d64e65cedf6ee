# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import os
import json

import numpy as np
from easy_enum import Enum

from ..errors import DsniDataError
from ..vol.misc import atomic_write

MANIFEST_NAME = 'manifest.json'


class EnumSplit(Enum):
    """ Dataset split of an accepted case """
    TRAIN = (0, 'Training')
    VAL = (1, 'Validation')
    TEST = (2, 'Testing')


SPLIT_NAMES = {EnumSplit.TRAIN: 'train', EnumSplit.VAL: 'val', EnumSplit.TEST: 'test'}


class CaseRecord(object):
    """ One case of a dataset: volume files, gate scores and split """

    def __init__(self, case_id, paths=None, gate=None, accepted=None, split=None, meta=None):
        """
        :param case_id: case identifier
        :param paths: volume key ('nc', 'neph', 'exc', 'mask', ...) -> header path relative to the dataset root
        :param gate: GateRecord dict or None
        :param accepted: gate decision, None before preprocessing
        :param split: EnumSplit value or None
        :param meta: extra JSON data (registration record, phantom truth transforms)
        """
        self.case_id = str(case_id)
        self.paths = dict(paths) if paths else {}
        self.gate = gate
        self.accepted = accepted
        self.split = split
        self.meta = dict(meta) if meta else {}

    def __repr__(self):
        return "CaseRecord <{}, accepted: {}, split: {}>".format(
            self.case_id, self.accepted, SPLIT_NAMES.get(self.split, '-'))

    def __eq__(self, obj):
        return isinstance(obj, CaseRecord) and self.to_dict() == obj.to_dict()

    def to_dict(self):
        return {'case_id': self.case_id, 'paths': self.paths, 'gate': self.gate, 'accepted': self.accepted,
                'split': SPLIT_NAMES.get(self.split), 'meta': self.meta}

    @classmethod
    def from_dict(cls, data):
        try:
            split = data.get('split')
            if split is not None:
                split = {v: k for k, v in SPLIT_NAMES.items()}[split]
            return cls(data['case_id'], data.get('paths'), data.get('gate'), data.get('accepted'), split,
                       data.get('meta'))
        except (KeyError, AttributeError, TypeError) as e:
            raise DsniDataError("Malformed case record {}: {}".format(data, e))


class CaseManifest(object):
    """ Case list of a dataset directory """

    def __init__(self, root, cases=None, kind='phantom'):
        """
        :param root: dataset directory
        :param cases: list of CaseRecord
        :param kind: 'phantom' or 'registered'
        """
        self.root = root
        self.cases = list(cases) if cases else []
        self.kind = kind

    def __repr__(self):
        return "CaseManifest <{}, cases: {}>".format(self.kind, len(self.cases))

    def __len__(self):
        return len(self.cases)

    def __iter__(self):
        return iter(self.cases)

    def add(self, record):
        if any(c.case_id == record.case_id for c in self.cases):
            raise DsniDataError("Duplicate case id: {}".format(record.case_id))
        self.cases.append(record)

    def path(self, record, key):
        """ Absolute header path of a case volume """
        if key not in record.paths:
            raise DsniDataError("Case {} has no '{}' volume".format(record.case_id, key))
        return os.path.join(self.root, record.paths[key])

    def by_split(self, split):
        return [c for c in self.cases if c.split == split]

    def validate(self):
        ids = [c.case_id for c in self.cases]
        if len(set(ids)) != len(ids):
            raise DsniDataError("Duplicate case ids in manifest")
        for c in self.cases:
            if c.split is not None and not c.accepted:
                raise DsniDataError("Rejected case {} is assigned to a split".format(c.case_id))

    def export(self):
        return {'kind': self.kind, 'cases': [c.to_dict() for c in self.cases]}

    def save(self, path=None):
        self.validate()
        path = os.path.join(self.root, MANIFEST_NAME) if path is None else path
        atomic_write(path, json.dumps(self.export(), indent=2, sort_keys=True).encode('utf-8'))
        return path

    @classmethod
    def load(cls, root):
        """ Read '<root>/manifest.json' (root may also name the file itself) """
        path = root if os.path.isfile(root) else os.path.join(root, MANIFEST_NAME)
        with open(path, 'r') as f:
            try:
                data = json.load(f)
            except ValueError as e:
                raise DsniDataError("Malformed manifest {}: {}".format(path, e))
        if not isinstance(data, dict) or not isinstance(data.get('cases'), list):
            raise DsniDataError("Manifest {} has no case list".format(path))
        obj = cls(os.path.dirname(os.path.abspath(path)), [CaseRecord.from_dict(c) for c in data['cases']],
                  data.get('kind', 'phantom'))
        obj.validate()
        return obj


def assign_splits(manifest, val, test, seed=0):
    """ Seeded shuffle of the accepted cases into validation, test and training splits
    :param manifest: CaseManifest updated in place
    :param val: number of validation cases
    :param test: number of test cases
    :param seed: shuffle seed
    :return: {EnumSplit: [case ids]}
    """
    accepted = sorted(c.case_id for c in manifest if c.accepted)
    order = [accepted[i] for i in np.random.default_rng(seed).permutation(len(accepted))]
    split = {}
    for i, case_id in enumerate(order):
        split[case_id] = EnumSplit.VAL if i < val else EnumSplit.TEST if i < val + test else EnumSplit.TRAIN
    for c in manifest:
        c.split = split.get(c.case_id)
    return {s: sorted(k for k, v in split.items() if v == s) for s in (EnumSplit.TRAIN, EnumSplit.VAL, EnumSplit.TEST)}
