"""
File input and output for the runner: flat configuration files, per-slot
traces and sweep CSVs.

Usage::

        from crowdcache.io import IO
        io = IO()
        values = io.read_config('scenario.conf')
        io.write_csv('sweep.csv', header, rows)

Floats are written with ``repr`` so that files are locale independent and
byte-identical across reruns.
"""
from __future__ import generator_stop

import csv
import os
from typing import Dict, Iterable, Sequence

from crowdcache import CrowdcacheError
from crowdcache.logging import get_logger
from crowdcache.stats import get_stats


class OutputError(CrowdcacheError):
    pass


def parse_config_text(text: str) -> Dict[str, str]:
    """
    Parse ``key = value`` lines. Blank lines and ``#`` comments are skipped;
    a later key overrides an earlier one.
    """
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep or not key.strip():
            raise ValueError('line %d: expected key = value, got %r' % (number, raw))
        values[key.strip().replace('-', '_')] = value.strip()
    return values


def format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class IO(object):
    """
    File routines with logging and error accounting.
    """

    def __init__(self, logger=None, stats=None):
        """
        :keyword logger: The logger utility. Defaults to
        :py:func:`logging.get_logger <crowdcache.logging.get_logger>`

        :keyword stats: The stats utility. Defaults to
        :py:func:`stats.get_stats <crowdcache.stats.get_stats>`
        """
        self.logger = logger if logger else get_logger(name='crowdcache.io')
        self.stats = stats if stats else get_stats(prefix='io')

    def read_config(self, path: str) -> Dict[str, str]:
        self.logger.debug('Reading configuration from %s', path)
        try:
            with open(path, 'r', encoding='utf-8') as handle:
                return parse_config_text(handle.read())
        except OSError as err:
            self.stats.incr('error.read_config')
            raise OutputError('cannot read configuration %s: %s' % (path, err))
        except ValueError as err:
            self.stats.incr('error.read_config')
            raise OutputError('malformed configuration %s: %s' % (path, err))

    def write_csv(self, path: str, header: Sequence[str], rows: Iterable[Sequence]) -> int:
        """Write HEADER and ROWS; returns the number of data rows written."""
        count = 0
        try:
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            with open(path, 'w', newline='', encoding='utf-8') as handle:
                writer = csv.writer(handle, lineterminator='\n')
                writer.writerow(header)
                for row in rows:
                    writer.writerow([format_cell(v) for v in row])
                    count += 1
        except OSError as err:
            self.stats.incr('error.write_csv')
            self.logger.error('Cannot write %s: %s', path, err)
            raise OutputError('cannot write %s: %s' % (path, err))

        self.logger.info('Wrote %d rows to %s', count, path)
        return count

    def write_text(self, path: str, text: str):
        try:
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write(text)
        except OSError as err:
            self.stats.incr('error.write_text')
            raise OutputError('cannot write %s: %s' % (path, err))
