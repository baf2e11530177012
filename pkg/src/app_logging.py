import logging
import os

from dotenv import load_dotenv

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def configure_logging(level=None, log_file=None, stream=True):
    """Configure root logging once for a CLI run: log file (optional) plus stderr (optional)"""
    load_dotenv()
    log_file = log_file or os.getenv("FORECAST_LOG")
    level_name = (level or os.getenv("FORECAST_LOG_LEVEL", "INFO")).upper()

    handlers = []
    if log_file:
        os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
        handlers.append(logging.FileHandler(log_file))  # Log to file
    if stream:
        handlers.append(logging.StreamHandler())  # stderr
    if not handlers:
        # keeps logging's last-resort handler off stderr
        handlers.append(logging.NullHandler())

    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
    # numba's compiler logging is noisy at DEBUG
    logging.getLogger("numba").setLevel(logging.WARNING)
    return logging.getLogger("forecast")
