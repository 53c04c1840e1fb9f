import json
import logging
import os
import zlib
from typing import Any, Dict, Optional, Sequence

import numpy as np

from config.rover_config import DEFAULT_LOG_LEVEL, LOG_DATE_FORMAT, LOG_FORMAT

_LOGGING_READY = False


def setup_logging(level: str = DEFAULT_LOG_LEVEL, log_file: Optional[str] = None) -> None:
    """
    Configure the root logger once for CLI and dashboard entry points.

    Args:
        level: Logging level name (DEBUG, INFO, ...)
        log_file: Optional path; when given, records are also written there
    """
    global _LOGGING_READY
    root = logging.getLogger()
    root.setLevel(level.upper())
    if _LOGGING_READY:
        return

    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT)
    handler = logging.StreamHandler()
    handler.setFormatter(formatter)
    root.addHandler(handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    _LOGGING_READY = True


def load_json(path: str) -> Dict[str, Any]:
    """Read a JSON document from disk."""
    with open(path, 'r', encoding='utf-8') as fh:
        return json.load(fh)


def save_json(data: Dict[str, Any], path: str) -> None:
    """Write a JSON document, creating the parent folder if needed."""
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(data, fh, indent=2, sort_keys=False)
        fh.write('\n')


def stable_key(label: str) -> int:
    """Process-independent integer key for a string (used in seed derivation)."""
    return zlib.crc32(label.encode('utf-8'))


def derive_seed(*parts: int) -> int:
    """
    Deterministic 63-bit seed from a tuple of non-negative integers.

    Args:
        parts: master seed, trial index, stream ids ...

    Returns:
        Integer seed usable by numpy.random.default_rng
    """
    seq = np.random.SeedSequence([int(p) for p in parts])
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """numpy Generator for (seed, *stream)."""
    return np.random.default_rng([int(seed), *[int(s) for s in stream]])
