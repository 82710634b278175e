#-*- coding: utf-8 -*-
'''
Helpers used by multiple modules.
'''
import logging
import os
import re

LOG = logging.getLogger(__name__)


_RANGE = re.compile(r'^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$')


def require_directory(dirname):
    '''Create the given directory if it does not exist.'''
    try:
        os.makedirs(dirname)
    except FileExistsError:
        pass


def delete_if_exists(filename):
    '''Delete the given filename (absolute path) if it exists.'''
    try:
        os.unlink(filename)
    except FileNotFoundError:
        pass


def parse_seeds(text):
    '''Parse ``1..5`` (inclusive) or ``1,2,3`` into a list of ints.'''
    match = _RANGE.match(text)
    if match:
        first, last = int(match.group(1)), int(match.group(2))
        if last < first:
            raise ValueError('Empty seed range {!r}.'.format(text))
        return list(range(first, last + 1))
    seeds = [int(part) for part in re.split(r'[,\s]+', text.strip()) if part]
    if not seeds:
        raise ValueError('No seeds in {!r}.'.format(text))
    return seeds


def run_label(target):
    '''Directory name for a preset name or a deployment file.'''
    name = os.path.basename(target)
    if name.lower().endswith('.csv'):
        name = name[:-len('.csv')]
    return name


def hours_label(hours):
    '''``1.0 -> '1h'``, ``0.5 -> '0.5h'``.'''
    return '{:g}h'.format(hours)
