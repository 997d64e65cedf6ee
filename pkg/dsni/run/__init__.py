# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from .config import DEFAULTS, SCHEMA, THREADS_ENV, RunConfig, thread_count
from .checkpoint import CHECKPOINT_EXT, Checkpoint
from .manifest import MANIFEST_NAME, EnumSplit, SPLIT_NAMES, CaseRecord, CaseManifest, assign_splits
from .pipeline import GATE_REPORT, LOSS_LOG, CHECKPOINT_NAME, load_config, load_triple, preprocess_case, \
                      run_phantom, run_preprocess, run_train, run_synthesize, run_evaluate

__all__ = [
    # Enums
    'EnumSplit',
    'SPLIT_NAMES',
    # Constants
    'DEFAULTS',
    'SCHEMA',
    'THREADS_ENV',
    'CHECKPOINT_EXT',
    'CHECKPOINT_NAME',
    'MANIFEST_NAME',
    'GATE_REPORT',
    'LOSS_LOG',
    # Classes
    'RunConfig',
    'Checkpoint',
    'CaseRecord',
    'CaseManifest',
    # Methods
    'thread_count',
    'assign_splits',
    'load_config',
    'load_triple',
    'preprocess_case',
    'run_phantom',
    'run_preprocess',
    'run_train',
    'run_synthesize',
    'run_evaluate'
]
