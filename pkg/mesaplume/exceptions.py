# -*- coding: utf-8 -*-
'''Exceptions used by mesaplume.

Exception hierarchy::

    MesaplumeError

        ConfigError

        DomainError

        GridMismatchError

        FitError
            InsufficientDataError

        StabilityError

        NumericalError

        StorageError

    UserError

'''

class MesaplumeError(Exception):
    pass


class ConfigError(MesaplumeError):
    '''Raised for unreadable config files or invalid config values.

    ``lineno`` is set when the parser could tell where the problem is.'''

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = '{} (line {})'.format(message, lineno)
        super().__init__(message)
        self.lineno = lineno


class DomainError(MesaplumeError):
    '''Raised when a point, region or slab lies outside the grid.'''
    pass


class GridMismatchError(MesaplumeError):
    pass


class FitError(MesaplumeError):
    pass


class InsufficientDataError(FitError):
    '''Not enough usable samples to estimate the release parameters.'''
    pass


class StabilityError(MesaplumeError):
    '''Raised when a time step violates the CFL limits.

    ``step`` is the index of the offending step for runtime violations,
    *None* for the pre-check.'''

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NumericalError(MesaplumeError):
    '''Raised when a non-finite value shows up in a field.'''

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class StorageError(MesaplumeError):
    pass


class UserError(Exception):
    '''Raised for bad input, missing parameters, ...'''
    pass
