"""
Counter-based normal variates.

The generator is Philox4x32-10 (Salmon et al., "Parallel random numbers: as
easy as 1, 2, 3", SC 2011). Draw ``(path, step)`` under a 64-bit ``seed`` is a
pure function of those three integers:

* key     = (seed mod 2**32, seed >> 32)
* counter = (step mod 2**32, step >> 32, path mod 2**32, path >> 32)
* the first two output words ``w0, w1`` form a 52-bit uniform
  ``u = ((w0 >> 6) * 2**26 + (w1 >> 6) + 0.5) / 2**52``; the half-offset is
  exact below 2**52, so ``u`` lies strictly inside (0, 1)
* the normal variate is ``Phi^{-1}(u)`` (``scipy.special.ndtri``)

Because no state is carried between draws, any partition of the work across
threads or processes yields bit-identical numbers.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

MAX_SEED = 2**64 - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def philox4x32(counter, key, rounds: int = 10):
    """Philox4x32 block function, vectorised over broadcastable counter words.

    Parameters
    ----------
    counter : 4 array_like of uint32 values
    key : 2 integers (uint32)

    Returns
    -------
    tuple of 4 uint64 arrays holding 32-bit output words
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK for c in counter)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0 = np.uint64(int(key[0]) & 0xFFFFFFFF)
    k1 = np.uint64(int(key[1]) & 0xFFFFFFFF)
    for _ in range(rounds):
        p0 = c0 * _M0
        p1 = c2 * _M1
        c0, c1, c2, c3 = (p1 >> _S32) ^ c1 ^ k0, p1 & _MASK, (p0 >> _S32) ^ c3 ^ k1, p0 & _MASK
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


def uniforms(seed: int, path, step) -> np.ndarray:
    """Open-interval uniforms for broadcastable ``path`` and ``step`` index arrays."""
    seed = check_seed(seed)
    path = np.asarray(path, dtype=np.uint64)
    step = np.asarray(step, dtype=np.uint64)
    w0, w1, _, _ = philox4x32(
        (step & _MASK, step >> _S32, path & _MASK, path >> _S32),
        (seed & 0xFFFFFFFF, seed >> 32),
    )
    bits = ((w0 >> np.uint64(6)) << np.uint64(26)) | (w1 >> np.uint64(6))
    return (bits.astype(np.float64) + 0.5) * 2.0**-52


def standard_normals(seed: int, path, step) -> np.ndarray:
    """Standard normal draws indexed by ``(path, step)``; see module docstring."""
    return ndtri(uniforms(seed, path, step))


def normal_block(seed: int, path_start: int, n_paths: int, step_start: int, n_steps: int) -> np.ndarray:
    """Matrix ``z[i, j] = standard_normals(seed, path_start + i, step_start + j)``."""
    p = np.arange(path_start, path_start + n_paths, dtype=np.uint64)[:, None]
    k = np.arange(step_start, step_start + n_steps, dtype=np.uint64)[None, :]
    return standard_normals(seed, p, k)
