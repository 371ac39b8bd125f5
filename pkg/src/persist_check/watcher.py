"""
Litmus directory watcher.

WHAT IT DOES:
    1. Monitors a directory of litmus files (optionally recursively)
    2. Tracks editor save patterns (write, rename-into-place)
    3. Waits for edits to settle (debounce)
    4. Skips files whose content has not changed since the last check
    5. Re-runs the strongest check the file supports and logs the result
"""

import argparse
import logging
import threading
import time
from pathlib import Path
from typing import Dict, Optional, Set

from watchdog.events import FileSystemEvent, FileSystemEventHandler
from watchdog.observers import Observer

from persist_check import config, utils
from persist_check.errors import PersistCheckError

logger = logging.getLogger("persist_check.watcher")


def run(
    path: Path,
    recursive: bool = False,
    args: Optional[argparse.Namespace] = None,
    verbose: bool = False,
) -> None:
    """
    Watch `path` until interrupted.

    Args:
        path: Directory of litmus files
        recursive: Also watch subdirectories
        args: CLI options forwarded to each check (step bound, CAS read mode)
        verbose: Enable verbose logging
    """
    utils.setup_logging("persist_check", verbose)

    if not path.is_dir():
        logger.error(f"Not a directory: {path}")
        return

    existing = utils.find_litmus_files(path, recursive)
    logger.info("=" * config.SUMMARY_WIDTH)
    logger.info("Litmus Watcher")
    logger.info("=" * config.SUMMARY_WIDTH)
    logger.info(f"Watching: {path}{' (recursive)' if recursive else ''}")
    logger.info(f"Litmus files present: {len(existing)}")
    logger.info(f"Debounce delay: {config.DEBOUNCE_SECONDS} seconds")
    logger.info("Press Ctrl+C to stop")
    logger.info("=" * config.SUMMARY_WIDTH)

    handler = LitmusHandler(args=args)
    observer = Observer()
    observer.schedule(handler, str(path), recursive=recursive)
    observer.start()

    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        logger.info("Stopping watcher...")
        observer.stop()

    observer.join()
    logger.info("Watcher stopped")


class LitmusHandler(FileSystemEventHandler):
    """Schedules a check of every litmus file that is created, modified or moved into place."""

    def __init__(
        self,
        args: Optional[argparse.Namespace] = None,
        debounce: float = config.DEBOUNCE_SECONDS,
        min_interval: float = config.MIN_RUN_INTERVAL,
    ):
        super().__init__()
        self.args = args
        self.debounce = debounce
        self.min_interval = min_interval
        self.pending: Set[str] = set()
        self.checksums: Dict[str, str] = {}
        self.last_run: Dict[str, float] = {}
        self.results: Dict[str, int] = {}
        self.lock = threading.Lock()

    def on_created(self, event: FileSystemEvent) -> None:
        if not event.is_directory:
            self._file_event(Path(event.src_path), "created")

    def on_modified(self, event: FileSystemEvent) -> None:
        if not event.is_directory:
            self._file_event(Path(event.src_path), "modified")

    def on_moved(self, event: FileSystemEvent) -> None:
        """Editors often save by renaming a temporary file over the target."""
        if event.is_directory:
            return
        dest = Path(event.dest_path)
        logger.debug(f"File renamed: {Path(event.src_path).name} -> {dest.name}")
        self._file_event(dest, "renamed")

    def _file_event(self, path: Path, event_type: str) -> None:
        if not utils.is_litmus_file(path):
            return
        logger.debug(f"Litmus file {event_type}: {path.name}")
        self.schedule(path)

    def schedule(self, path: Path) -> None:
        """Check `path` once edits have settled for the debounce delay."""
        key = str(path)
        with self.lock:
            if key in self.pending:
                return
            self.pending.add(key)

        def check_after_debounce() -> None:
            time.sleep(self.debounce)
            with self.lock:
                self.pending.discard(key)
            self.process(path)

        threading.Thread(target=check_after_debounce, daemon=True).start()

    def process(self, path: Path) -> Optional[int]:
        """
        Check `path` unless it vanished, is unchanged, or was checked too recently.

        Returns:
            The check's exit code, or None if the check was skipped or errored
        """
        key = str(path)
        if not path.is_file():
            logger.debug(f"File no longer exists: {path.name}")
            return None

        try:
            checksum = utils.get_file_checksum(path)
        except OSError as e:
            logger.error(f"Cannot read {path.name}: {e}")
            return None

        now = time.monotonic()
        with self.lock:
            if self.checksums.get(key) == checksum:
                logger.debug(f"Unchanged: {path.name}")
                return None
            if now - self.last_run.get(key, float("-inf")) < self.min_interval:
                logger.debug(f"Skipping {path.name} (checked too recently)")
                return None
            self.checksums[key] = checksum
            self.last_run[key] = now

        from persist_check import cli

        logger.info(f"Checking {path.name}")
        try:
            code = cli.check_file(path, self._forwarded_args())
        except PersistCheckError as e:
            logger.error(f"{path.name}: {e}")
            return None
        except Exception as e:
            logger.error(f"Unexpected error checking {path.name}: {e}")
            return None

        with self.lock:
            self.results[key] = code
        outcome = "PASS" if code == cli.EXIT_PASS else "FAIL"
        logger.info(f"{path.name}: {outcome}")
        return code

    def _forwarded_args(self) -> argparse.Namespace:
        forwarded = argparse.Namespace()
        for key in ("max_steps", "strict_cas_read", "format"):
            if self.args is not None and hasattr(self.args, key):
                setattr(forwarded, key, getattr(self.args, key))
        return forwarded
