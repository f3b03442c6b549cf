"""
Unit tests for logging setup
"""

import logging

import pytest

from src.utils import logger as logger_module
from src.utils.logger import configure_logging, get_logger, setup_logger


@pytest.fixture(autouse=True)
def restore_defaults(monkeypatch):
    """Keep configure_logging from leaking into other tests"""
    monkeypatch.setattr(logger_module, "_defaults", dict(logger_module._defaults))


class TestSetupLogger:
    """Test setup_logger"""

    def test_writes_to_file(self, tmp_path):
        """Test messages reach the log file"""
        log_file = tmp_path / "logs" / "app.log"
        log = setup_logger("src.tests.file", "DEBUG", log_file)
        log.info("weights.budget.done rows=6")
        for handler in log.handlers:
            handler.flush()

        assert "weights.budget.done rows=6" in log_file.read_text(encoding="utf-8")

    def test_console_on_stderr(self, tmp_path, capsys):
        """Test warnings go to stderr and leave stdout clean"""
        log = setup_logger("src.tests.console", "INFO", tmp_path / "app.log")
        log.warning("lcv.limit.inconclusive sigma=1")

        captured = capsys.readouterr()
        assert captured.out == ""
        assert "lcv.limit.inconclusive" in captured.err

    def test_repeated_setup_keeps_one_pair(self, tmp_path):
        """Test a second setup replaces the handlers"""
        setup_logger("src.tests.repeat", "INFO", tmp_path / "app.log")
        log = setup_logger("src.tests.repeat", "INFO", tmp_path / "app.log")
        assert len(log.handlers) == 2


class TestConfigureLogging:
    """Test configure_logging"""

    def test_existing_loggers_follow(self, tmp_path):
        """Test existing package loggers pick up the new level"""
        log = get_logger("src.tests.existing")
        configure_logging("ERROR", tmp_path / "app.log")
        assert log.level == logging.ERROR

    def test_new_loggers_follow(self, tmp_path):
        """Test loggers created afterwards use the configured level"""
        configure_logging("DEBUG", tmp_path / "app.log")
        log = get_logger("src.tests.created_later")
        assert log.level == logging.DEBUG

    def test_foreign_loggers_untouched(self, tmp_path):
        """Test loggers outside the package keep their handlers"""
        foreign = logging.getLogger("thirdparty.module")
        foreign.handlers.clear()
        configure_logging("DEBUG", tmp_path / "app.log")
        assert foreign.handlers == []
