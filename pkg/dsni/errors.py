# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import sys


########################################################################################################################
# Base Exception
########################################################################################################################

class DsniGenericError(Exception):
    """ Base Exception class for the whole package
    """
    fmt = 'dsni error'   #: format string

    def __init__(self, msg=None, **kw):
        """ Initialize the Exception with the given message. """
        self.msg = msg
        for key, value in kw.items():
            setattr(self, key, value)

    def __str__(self):
        """ Return the message in this Exception. """
        if self.msg:
            return self.msg
        try:
            return self.fmt % self.__dict__
        except (NameError, ValueError, KeyError, TypeError):
            e = sys.exc_info()[1]     # current exception
            return 'Unprintable exception %s: %s' % (repr(e), str(e))


########################################################################################################################
# Data and configuration errors (CLI exit code 2)
########################################################################################################################

class DsniDataError(DsniGenericError):
    fmt = 'Invalid data'


class DomainError(DsniDataError):
    fmt = 'Wrong volume domain: %(found)s, expected %(expected)s'


class DimensionError(DsniDataError):
    fmt = 'Dimension mismatch: %(found)s vs %(expected)s'


class CoverageError(DsniDataError):
    fmt = 'Slice ranges do not overlap'


class SpecError(DsniDataError):
    fmt = 'Invalid phantom specification'


class EmptyMaskError(DsniDataError):
    fmt = 'Mask is empty'


class TransformError(DsniDataError):
    fmt = 'Singular or invalid transform'


class ShapeError(DsniDataError):
    fmt = 'Tensor shape mismatch'


class ConfigError(DsniDataError):
    fmt = 'Invalid configuration'


class CheckpointError(DsniDataError):
    fmt = 'Corrupted checkpoint'


########################################################################################################################
# Numerical errors (CLI exit code 3)
########################################################################################################################

class NumericalError(DsniGenericError):
    fmt = 'Non-finite value encountered'

    @property
    def diagnostics(self):
        return getattr(self, "info", {})


class UndefinedStatisticError(NumericalError):
    fmt = 'Statistic is undefined for the given data'
