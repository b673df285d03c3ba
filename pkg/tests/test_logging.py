"""
Unit tests for the crowdcache.logging module.
"""
from __future__ import generator_stop
import logging

import pytest
from mock import MagicMock, patch

import crowdcache.logging


def test_quiet_logger():
    """
    A logger that does not log to stdout leaves the root alone and stops propagating
    """
    with patch('crowdcache.logging.setup') as mock_setup:
        logger = crowdcache.logging.get_logger('test-logging.quiet', log_to_stdout=False)

    assert not mock_setup.called
    assert not logger.propagate
    assert logger.level == logging.NOTSET


def test_stdout_logger_level():
    with patch('crowdcache.logging.setup') as mock_setup:
        logger = crowdcache.logging.get_logger('test-logging.stdout', level='debug')

    mock_setup.assert_called_once_with('debug')
    assert logger.level == logging.DEBUG


def test_stdout_logger_default_level():
    with patch('crowdcache.logging.setup') as mock_setup:
        crowdcache.logging.get_logger('test-logging.default')

    mock_setup.assert_called_once_with(crowdcache.logging.DEFAULT_LOG_LEVEL)


def test_setup_rejects_unknown_level():
    with pytest.raises(ValueError):
        crowdcache.logging.setup('verbose')


def test_levels_most_severe_first():
    assert list(crowdcache.logging.LEVELS.values()) == sorted(crowdcache.logging.LEVELS.values(), reverse=True)


def test_slot_logger_adapter():
    """
    SlotLoggerAdapter prefixes the policy name and the current slot
    """
    logger = MagicMock()
    logger.isEnabledFor.return_value = True
    adapter = crowdcache.logging.SlotLoggerAdapter(logger, 'proposed')
    adapter.slot = 17

    message, kwargs = adapter.process('reusing task 3', {})
    adapter.warning('cap hit on user %d', 2)

    assert message == '[proposed t=17] reusing task 3'
    assert kwargs == {}
    assert adapter.slot == 17
    logger.log.assert_called_once_with(logging.WARNING, '[proposed t=17] cap hit on user %d', 2)
