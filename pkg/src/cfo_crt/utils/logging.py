"""Package logging: rich console output on stderr plus an optional log file."""

import logging
import time
from pathlib import Path
from typing import Optional, Union

from rich.console import Console
from rich.logging import RichHandler

from ..config.manager import config_manager

PACKAGE = "cfo_crt"
FALLBACK_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# stdout carries command output (JSON lines, tables)
stderr_console = Console(stderr=True)


def _as_level(level: Union[str, int, None]) -> int:
    if isinstance(level, int):
        return level
    return getattr(logging, (level or "INFO").upper(), logging.INFO)


def _package_root() -> logging.Logger:
    root = logging.getLogger(PACKAGE)
    if getattr(root, "_cfo_crt_ready", False):
        return root

    level = _as_level(config_manager.get("log_level", "INFO"))
    root.setLevel(level)
    root.propagate = False
    root.handlers.clear()
    root.addHandler(RichHandler(
        console=stderr_console, level=level, show_path=False, markup=False, rich_tracebacks=True,
    ))
    if config_manager.get("log_file"):
        root.addHandler(_file_handler(config_manager.get("log_file"), level))

    root._cfo_crt_ready = True
    return root


def _file_handler(path: Union[str, Path], level: int) -> logging.FileHandler:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(config_manager.get("log_format") or FALLBACK_FORMAT))
    return handler


def get_logger(name: str) -> logging.Logger:
    """Child logger ``cfo_crt.<name>``; the package handlers are installed on first use."""
    _package_root()
    return logging.getLogger(f"{PACKAGE}.{name}")


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """Apply command-line overrides on top of the YAML settings."""
    root = _package_root()
    if level:
        numeric = _as_level(level)
        root.setLevel(numeric)
        for handler in root.handlers:
            handler.setLevel(numeric)
    if log_file:
        root.addHandler(_file_handler(log_file, _as_level(level) if level else root.level))


class ProgressLogger:
    """Chunk progress of one sweep point, reported in tenths.

    ``finish`` reports the elapsed wall time and is expected once per point.
    """

    def __init__(self, logger: logging.Logger, total: int, description: str = "Processing"):
        self.logger = logger
        self.total = total
        self.description = description
        self.done = 0
        self._reported_tenth = 0
        self._started = time.perf_counter()

    def update(self, increment: int = 1) -> None:
        self.done += increment
        tenth = 10 * self.done // self.total if self.total else 10
        if tenth > self._reported_tenth and self.done < self.total:
            self._reported_tenth = tenth
            self.logger.debug(f"{self.description}: {self.done}/{self.total} chunks")

    def finish(self) -> None:
        elapsed = time.perf_counter() - self._started
        self.logger.info(f"{self.description}: {self.total} chunks done in {elapsed:.2f} s")

    def error(self, message: str) -> None:
        self.logger.error(f"{self.description}: failed after {self.done}/{self.total} chunks: {message}")
