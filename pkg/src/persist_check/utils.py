"""
Shared utilities for persist-check.

This module provides functionality used by the CLI and the watcher:
- Logging setup
- File checksums and litmus file discovery
- Conversion of states, NVMs and traces to JSON-ready dictionaries
"""

import hashlib
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from persist_check import config
from persist_check.assertions import NvmMap
from persist_check.semantics import MachineState

# =============================================================================
# LOGGING
# =============================================================================


def setup_logging(
    name: str = "persist_check",
    verbose: bool = False,
    log_file: Optional[Union[str, Path]] = None,
) -> logging.Logger:
    """
    Set up logging with a console handler and an optional file handler.

    The console handler writes to stderr; stdout carries reports and JSON.

    Args:
        name: Logger name
        verbose: If True, set DEBUG level; otherwise INFO
        log_file: Optional path of a persistent log (defaults to config.LOG_FILE)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.DEBUG if verbose else logging.INFO)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    log_file = log_file or config.LOG_FILE
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


# =============================================================================
# FILE OPERATIONS
# =============================================================================


def get_file_checksum(file_path: Path, algorithm: str = "md5") -> str:
    """
    Calculate checksum of a file.

    Args:
        file_path: Path to the file
        algorithm: Hash algorithm (md5, sha256, etc.)

    Returns:
        Hex digest of the file's checksum
    """
    hash_func = hashlib.new(algorithm)
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(8192), b""):
            hash_func.update(chunk)
    return hash_func.hexdigest()


def is_litmus_file(path: Path) -> bool:
    return path.suffix.lower() == config.LITMUS_EXTENSION and not path.name.startswith(".")


def find_litmus_files(folder: Path, recursive: bool = False) -> List[Path]:
    """Litmus files in `folder`, sorted by name."""
    pattern = f"**/*{config.LITMUS_EXTENSION}" if recursive else f"*{config.LITMUS_EXTENSION}"
    return sorted(p for p in folder.glob(pattern) if p.is_file() and is_litmus_file(p))


def corpus_files() -> List[Path]:
    """Litmus files bundled with the package."""
    return find_litmus_files(config.CORPUS_DIR)


def corpus_path(name: str) -> Path:
    """Path of the bundled corpus file `name` (extension optional)."""
    if not name.endswith(config.LITMUS_EXTENSION):
        name += config.LITMUS_EXTENSION
    return config.CORPUS_DIR / name


# =============================================================================
# JSON CONVERSION
# =============================================================================


def state_to_dict(state: MachineState) -> Dict[str, Any]:
    """Every field of a machine state, with per-location views keyed by location."""
    locs = state.mem.locs
    threads = {}
    for tid, ts in zip(state.tids, state.threads):
        threads[str(tid)] = {
            "pc": state.pc_of(tid),
            "coh": dict(zip(locs, ts.coh)),
            "vr_new": ts.vr_new,
            "vp_ready": ts.vp_ready,
            "vp_async": dict(zip(locs, ts.vp_async)),
            "vp_commit": dict(zip(locs, ts.vp_commit)),
            "registers": dict(ts.regs),
        }
    return {
        "memory": [{"loc": m.loc, "val": m.val} for m in state.mem.msgs],
        "threads": threads,
        "aux": dict(state.aux),
    }


def nvm_to_dict(nvm: NvmMap) -> Dict[str, int]:
    return dict(nvm)


def trace_to_list(trace: Sequence[Tuple[Optional[int], MachineState]]) -> List[Dict[str, Any]]:
    return [{"thread": tid, "state": state_to_dict(state)} for tid, state in trace]


def format_state(state: MachineState) -> str:
    """Compact one-line rendering: memory, then per-thread pc and registers."""
    memory = " ".join(f"{m.loc}:={m.val}" for m in state.mem.msgs)
    threads = []
    for tid, ts in zip(state.tids, state.threads):
        regs = ",".join(f"{r}={v}" for r, v in ts.regs)
        threads.append(f"T{tid}@{state.pc_of(tid)}" + (f"[{regs}]" if regs else ""))
    text = f"M=[{memory}] " + " ".join(threads)
    if state.aux:
        text += " aux{" + ",".join(f"{k}={v}" for k, v in state.aux) + "}"
    return text
