"""Deterministic RNG stream derivation.

All randomness in the package flows from one 64-bit master seed through
counter-based Philox streams keyed as (master_seed, purpose << 32 | index).
Purposes are fixed module-wide constants, so batch index j is reproducible
on its own, independent of the order or thread in which batches run.

Stream map:
  * PURPOSE_TIMESERIES, index = record index       (synth_timeseries)
  * PURPOSE_SPECTRUM,   index = spectrum index     (synth_averaged_spectrum)
  * PURPOSE_FIT,        index = spectrum index     (fit_exponent uniforms)
  * PURPOSE_BOOTSTRAP,  index = 0                  (bootstrap resampling)
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

PURPOSE_TIMESERIES = 1
PURPOSE_SPECTRUM = 2
PURPOSE_FIT = 3
PURPOSE_BOOTSTRAP = 4

_MAX_SEED = 2**64
_MAX_INDEX = 2**32


def stream(master_seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    """Independent Generator for (seed, purpose, index)."""
    if not (0 <= int(master_seed) < _MAX_SEED):
        raise ConfigError("master seed must fit in an unsigned 64-bit integer")
    if not (0 <= int(index) < _MAX_INDEX):
        raise ConfigError("stream index must fit in 32 bits")
    key = [int(master_seed), (int(purpose) << 32) | int(index)]
    return np.random.Generator(np.random.Philox(key=key))
