# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from .ssim import SsimConfig, box_mean, ssim_map, ssim3d
from .gate import GateConfig, GateRecord, combine_ssim, gate, ssim_select, export_gate_report

__all__ = [
    # Configs
    'SsimConfig',
    'GateConfig',
    # Records
    'GateRecord',
    # Methods
    'box_mean',
    'ssim_map',
    'ssim3d',
    'combine_ssim',
    'gate',
    'ssim_select',
    'export_gate_report'
]
