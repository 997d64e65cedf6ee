# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import os
import json
import pytest
import shutil
import numpy as np

from dsni import eval as ev
from dsni import run, vol

# Used Directories
DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')
TEMP_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'temp_pipeline')

CONFIG = os.path.join(DATA_DIR, 'desk_run.yaml')

# mean absolute value of standard normal noise, the loss of a network predicting zero
ZERO_HEAD_LOSS = np.sqrt(2.0 / np.pi)


def temp(*names):
    return os.path.join(TEMP_DIR, *names)


def setup_module(module):
    # Create temp directory
    os.makedirs(TEMP_DIR, exist_ok=True)


def teardown_module(module):
    # Delete created files
    shutil.rmtree(TEMP_DIR)


@pytest.mark.slow
def test_phantom_training_and_synthesis():
    cfg = run.RunConfig.load(CONFIG)
    run.run_phantom(cfg, temp('phantom'), 10)
    manifest, records = run.run_preprocess(cfg, temp('phantom'), temp('registered'), workers=1)
    assert all(r.accepted for r in records)

    path, trainer = run.run_train(cfg, temp('registered'), temp('model'))
    with open(temp('model', run.LOSS_LOG)) as f:
        losses = [json.loads(line)['loss'] for line in f if line.strip()]
    assert len(losses) == cfg.train().steps
    assert losses[0] == pytest.approx(ZERO_HEAD_LOSS, rel=0.05)
    assert np.mean(losses[-100:]) <= 0.5 * ZERO_HEAD_LOSS

    record = manifest.by_split(run.EnumSplit.TEST)[0]
    triple = run.load_triple(manifest, record)
    synthetic, _ = run.run_synthesize(cfg, path, manifest.path(record, 'nc'), manifest.path(record, 'exc'),
                                      temp('synthetic'))
    truth = triple.nephrographic
    window = cfg.window()
    assert ev.mae_hu(synthetic, truth, window) < ev.mae_hu(triple.excretory, truth, window)

    hu = vol.denormalize(synthetic, window)
    kinds = {}
    for kind, mask in triple.lesions:
        kinds[kind] = ev.roi_stats(hu, mask).mean
    # cysts do not enhance, solid masses move from 49 HU towards 122 HU
    assert abs(kinds[vol.EnumLesion.CYST] - 62.0) <= 10.0
    assert kinds[vol.EnumLesion.MASS] - 49.0 >= 0.5 * (122.0 - 49.0)
