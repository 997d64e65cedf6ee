# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from . import errors, vol, reg, qc, nn, net, ddpm, eval, run

__author__  = "The dsni developers"
__contact__ = "dsni@users.noreply.github.com"
__version__ = "0.1.0"
__license__ = "BSD3"
__status__  = "Development"
