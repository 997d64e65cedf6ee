# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long acceptance run (registration sweeps, desk-scale training)')
