"""Logging utilities."""
import logging
import sys
from pathlib import Path
from typing import Optional

CONSOLE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'


def setup_logger(name: str = "src", level: str = "INFO", log_file: Optional[Path] = None) -> logging.Logger:
    """
    Setup logger with console and optional file output.

    Console output goes to stderr so reports printed on stdout stay
    machine-readable. Calling this again replaces the handlers it added
    before instead of stacking duplicates.

    Args:
        name: Logger name (the package root, so every module logger inherits it)
        level: Log level (DEBUG, INFO, WARNING, ERROR)
        log_file: Optional log file path

    Returns:
        Configured logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper()))

    for handler in [h for h in logger.handlers if getattr(h, "_stgt_handler", False)]:
        logger.removeHandler(handler)
        handler.close()

    # Console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, level.upper()))
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
    console_handler._stgt_handler = True
    logger.addHandler(console_handler)

    # File handler (optional)
    if log_file:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)  # Always DEBUG for file
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
        file_handler._stgt_handler = True
        logger.addHandler(file_handler)

    return logger
