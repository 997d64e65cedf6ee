# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import json
import logging
from struct import pack, unpack_from, calcsize

import numpy as np

from ..errors import CheckpointError
from ..vol.misc import atomic_write
from ..net.denoiser import SwinConfig, DenoiserParams, param_shapes
from ..ddpm.schedule import TARGET_NAMES, make_schedule
from ..ddpm.sampler import Denoiser

CHECKPOINT_EXT = '.dsni'


def payload_text(nbytes):
    """ Byte count of a checkpoint payload as bytes, KiB or MiB """
    nbytes = int(nbytes)
    if nbytes < 1024:
        return "{} bytes".format(nbytes)
    if nbytes < 1024 ** 2:
        return "{:.1f} KiB".format(nbytes / 1024.0)
    return "{:.2f} MiB".format(nbytes / 1024.0 ** 2)


class Checkpoint(object):
    """ Trained denoiser with everything needed to sample from it

    Layout: header (magic, version, reserved, metadata length), JSON metadata, float32 LE payload
    """
    MAGIC = b'DSNI'
    VERSION = 1
    FORMAT = '<4sHHL'
    SIZE = calcsize(FORMAT)

    def __init__(self, params, swin, schedule, target, info=None):
        """
        :param params: DenoiserParams
        :param swin: SwinConfig
        :param schedule: NoiseSchedule (linear betas)
        :param target: EnumTarget value the network was trained on
        :param info: extra metadata (run config snapshot, training record)
        """
        self.params = params
        self.swin = swin
        self.schedule = schedule
        self.target = target
        self.info_data = dict(info) if info else {}

    def __repr__(self):
        return "Checkpoint <values: {}, T: {}, target: {}>".format(
            self.params.size, self.schedule.T, TARGET_NAMES[self.target])

    def info(self):
        msg  = " Format:     {} v{}\n".format(self.MAGIC.decode(), self.VERSION)
        msg += " Tensors:    {}\n".format(len(self.params))
        msg += " Values:     {} ({})\n".format(self.params.size, payload_text(self.params.size * 4))
        msg += " Schedule:   T = {}\n".format(self.schedule.T)
        msg += " Target:     {}\n".format(TARGET_NAMES[self.target])
        return msg

    def metadata(self):
        manifest, offset = [], 0
        for name, shape in self.params.manifest():
            manifest.append({'name': name, 'shape': list(shape), 'offset': offset})
            offset += int(np.prod(shape))
        return {
            'swin': self.swin.export(),
            'schedule': self.schedule.export(),
            'target': TARGET_NAMES[self.target],
            'manifest': manifest,
            'info': self.info_data
        }

    def denoiser(self):
        return Denoiser(self.params, self.swin, self.schedule, self.target)

    def export(self):
        meta = json.dumps(self.metadata(), sort_keys=True, separators=(',', ':')).encode('utf-8')
        payload = np.ascontiguousarray(self.params.flatten(), dtype='<f4').tobytes()
        return pack(self.FORMAT, self.MAGIC, self.VERSION, 0, len(meta)) + meta + payload

    @classmethod
    def parse(cls, data):
        """ Parse checkpoint
        :param data: raw data as bytes
        :return: Checkpoint object
        """
        if len(data) < cls.SIZE:
            raise CheckpointError("Checkpoint too short: {} bytes".format(len(data)))
        magic, version, _, length = unpack_from(cls.FORMAT, data)
        if magic != cls.MAGIC:
            raise CheckpointError("Invalid checkpoint magic {!r}, expected {!r}".format(magic, cls.MAGIC))
        if version != cls.VERSION:
            raise CheckpointError("Unsupported checkpoint version {}, expected {}".format(version, cls.VERSION))
        try:
            meta = json.loads(data[cls.SIZE:cls.SIZE + length].decode('utf-8'))
            swin = SwinConfig.parse(meta['swin'])
            sched = meta['schedule']
            schedule = make_schedule(sched['T'], sched['beta_1'], sched['beta_T'])
            target = {v: k for k, v in TARGET_NAMES.items()}[meta['target']]
            manifest = [(m['name'], tuple(m['shape'])) for m in meta['manifest']]
        except (ValueError, KeyError, TypeError) as e:
            raise CheckpointError("Malformed checkpoint metadata: {}".format(e))

        payload = data[cls.SIZE + length:]
        if len(payload) % 4:
            raise CheckpointError("Payload of {} bytes is not a float32 array".format(len(payload)))
        params = DenoiserParams.from_flat(manifest, np.frombuffer(payload, dtype='<f4'))
        if params.manifest() != [(name, tuple(shape)) for name, shape in param_shapes(swin)]:
            raise CheckpointError("Parameter manifest does not match the network config")
        return cls(params, swin, schedule, target, meta.get('info'))

    def save(self, path):
        data = self.export()
        atomic_write(path, data)
        logging.info('Saved checkpoint %s (%s)', path, payload_text(len(data)))
        return path

    @classmethod
    def load(cls, path):
        with open(path, 'rb') as f:
            return cls.parse(f.read())
