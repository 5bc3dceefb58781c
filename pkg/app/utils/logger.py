"""
Logging configuration for the BSDE laboratory.
Logs the experiment workflow: config received -> checks run -> verdicts written
"""
import logging
import sys
from pathlib import Path
from datetime import datetime

from pythonjsonlogger import jsonlogger

from app.utils.config import config

CONSOLE_FORMAT = "[%(asctime)s] [%(levelname)s] [%(module)s] - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logger(name: str = "BsdeLab") -> logging.Logger:
    """
    Configure logger with a console handler and a JSON-lines file handler.

    Console format: [TIMESTAMP] [LEVEL] [Module] - Message
    Example: [2026-02-06 11:43:15] [INFO] [graph] - 📍 NODE: solve_pde
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, config.log_level, logging.INFO))

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    # Console handler
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(console_handler)

    # File handler - one JSON-lines file per day
    try:
        log_dir = Path(config.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d")
        file_handler = logging.FileHandler(log_dir / f"lab_{timestamp}.log", encoding="utf-8")
        file_handler.setFormatter(
            jsonlogger.JsonFormatter("%(asctime)s %(levelname)s %(module)s %(message)s")
        )
        logger.addHandler(file_handler)
    except OSError as e:
        logger.warning(f"⚠️ File logging disabled: {e}")

    logger.propagate = False
    return logger


# Global logger instance
logger = setup_logger()
