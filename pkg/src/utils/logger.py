import logging
import os
import sys
from datetime import datetime
from typing import Optional, Union

PACKAGE_LOGGER = "src"


class LoggerSetup:
    """Centralized logger setup for the ribbon-poisson tools"""

    @staticmethod
    def setup_logger(name: str = PACKAGE_LOGGER,
                     log_file: Optional[str] = None,
                     log_level: Union[int, str] = logging.INFO,
                     log_dir: Optional[str] = None) -> logging.Logger:
        """
        Setup and configure logger

        Args:
            name: Logger name (the package logger by default, so every module logger inherits it)
            log_file: Log file name (if None, uses default naming)
            log_level: Logging level, as a number or a name such as "DEBUG"
            log_dir: Directory for log files; no file handler when None

        Returns:
            Configured logger instance
        """
        if isinstance(log_level, str):
            log_level = logging.getLevelName(log_level.upper())
            if not isinstance(log_level, int):
                log_level = logging.INFO

        logger = logging.getLogger(name)
        logger.setLevel(log_level)

        # Remove existing handlers to avoid duplicates
        logger.handlers.clear()
        logger.propagate = False

        detailed_formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        simple_formatter = logging.Formatter(
            '%(levelname)s - %(message)s'
        )

        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
            if not log_file:
                timestamp = datetime.now().strftime('%Y%m%d')
                log_file = f"ribbon_poisson_{timestamp}.log"
            file_handler = logging.FileHandler(os.path.join(log_dir, log_file), encoding='utf-8')
            file_handler.setLevel(log_level)
            file_handler.setFormatter(detailed_formatter)
            logger.addHandler(file_handler)

        # stdout carries the JSON reports
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(log_level)
        console_handler.setFormatter(simple_formatter)
        logger.addHandler(console_handler)

        return logger


def get_logger(name: str = PACKAGE_LOGGER, **kwargs) -> logging.Logger:
    """Convenience function to get a configured logger"""
    return LoggerSetup.setup_logger(name, **kwargs)
