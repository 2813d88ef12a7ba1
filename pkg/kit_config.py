#!/usr/bin/env python3
"""
Process-wide settings for the BEV topology kit

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

This program is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with this program.  If not, see <https://www.gnu.org/licenses/>.
"""

import logging
import os
from dataclasses import dataclass
from typing import Mapping, Optional

from kit_errors import ConfigurationError

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "BEV_KIT_THREADS"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class KitSettings:
    """Settings read from the environment."""

    max_threads: Optional[int] = None

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "KitSettings":
        """Build settings from environment variables."""
        environ = os.environ if environ is None else environ
        raw = environ.get(THREADS_ENV_VAR, "").strip()
        if not raw:
            return cls()
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
        if threads < 1:
            raise ConfigurationError(f"{THREADS_ENV_VAR} must be >= 1, got {threads}")
        return cls(max_threads=threads)

    def apply_thread_limit(self) -> int:
        """Cap numba's worker pool; returns the thread count in effect."""
        import numba

        available = numba.config.NUMBA_NUM_THREADS
        if self.max_threads is None:
            return numba.get_num_threads()
        threads = min(self.max_threads, available)
        numba.set_num_threads(threads)
        logger.debug("numba threads capped at %d (of %d)", threads, available)
        return threads


def configure_logging(verbosity: int = 0):
    """Configure root logging for command-line use."""
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)
