import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Generator

RUN_LOG_FORMAT = "[%(asctime)s] %(levelname)s %(message)s"


@contextmanager
def setup_logger(
    name: str, log_path: Path, level: int = logging.INFO
) -> Generator[logging.Logger, None, None]:
    """
    Isolated file logger for one sweep run.

    The logger does not propagate to the root logger, so per-point run records
    stay out of the console log. Handlers are closed on exit.

    Args:
        name: Logger name, unique per concurrent run
        log_path: File to write; parent directories are created
        level: Minimum level recorded

    Yields:
        Configured logger instance
    """
    log_path.parent.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False
    logger.handlers.clear()

    file_handler = logging.FileHandler(log_path, mode="w", encoding="utf-8")
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(RUN_LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    logger.addHandler(file_handler)

    try:
        yield logger
    finally:
        for handler in logger.handlers[:]:
            handler.close()
            logger.removeHandler(handler)
