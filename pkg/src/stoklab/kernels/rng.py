"""Counter-based uniforms and gaussians (Philox4x32-10 + AS241 inverse normal).

Draw number ``i`` of stream ``(seed, stream_id)`` is a pure function of the
triple: Philox block ``i >> 1`` is computed with the 128-bit counter
``(block, stream_id)`` and 64-bit key ``seed``; even draws take output words
0-1, odd draws words 2-3.  The top 52 bits of the 64-bit word pair give the
uniform ``(k + 0.5) / 2**52``, which lies strictly inside (0, 1) and is
symmetric under ``u -> 1 - u``.  Gaussians are ``ppf(uniform)``.

Both backends produce bit-identical uniforms.  Gaussians agree to a few ulp
(the numpy and libm ``log`` may round differently).
"""

from __future__ import annotations

import math

import numpy as np

from .. import _backend
from .._backend import njit

MASK64 = (1 << 64) - 1

_M0 = 0xD2511F53
_M1 = 0xCD9E8D57
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_LOW32 = 0xFFFFFFFF
_SCALE = 2.0**-52

# AS241 (PPND16) coefficients.
_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _split64(value: int) -> tuple[int, int]:
    value &= MASK64
    return value & _LOW32, value >> 32


# ---------------------------------------------------------------------------
# numpy implementation
# ---------------------------------------------------------------------------


def _philox_numpy(c0, c1, c2, c3, k0, k1):
    """Ten Philox4x32 rounds on uint64 arrays holding 32-bit lanes."""
    m0 = np.uint64(_M0)
    m1 = np.uint64(_M1)
    low = np.uint64(_LOW32)
    shift = np.uint64(32)
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    for _ in range(10):
        p0 = m0 * c0
        p1 = m1 * c2
        c0, c1, c2, c3 = (p1 >> shift) ^ c1 ^ k0, p1 & low, (p0 >> shift) ^ c3 ^ k1, p0 & low
        k0 = (k0 + np.uint64(_W0)) & low
        k1 = (k1 + np.uint64(_W1)) & low
    return c0, c1, c2, c3


def philox4x32(counter: tuple[int, int, int, int], key: tuple[int, int]) -> tuple[int, ...]:
    """Single Philox4x32-10 block (known-answer testing helper)."""
    words = [np.array([w], dtype=np.uint64) for w in counter]
    out = _philox_numpy(*words, key[0], key[1])
    return tuple(int(w[0]) for w in out)


def _words_to_uniform_numpy(hi, lo):
    k = ((hi << np.uint64(32)) | lo) >> np.uint64(12)
    return (k.astype(np.float64) + 0.5) * _SCALE


def _uniform_grid_numpy(seed: int, stream0: int, n_streams: int, start: int, n: int) -> np.ndarray:
    k0, k1 = _split64(seed)
    first_block = start >> 1
    last_block = (start + n - 1) >> 1
    n_blocks = last_block - first_block + 1
    streams = (np.uint64(stream0 & MASK64) + np.arange(n_streams, dtype=np.uint64))[:, None]
    blocks = (np.uint64(first_block) + np.arange(n_blocks, dtype=np.uint64))[None, :]
    low = np.uint64(_LOW32)
    c0 = np.broadcast_to(blocks & low, (n_streams, n_blocks))
    c1 = np.broadcast_to(blocks >> np.uint64(32), (n_streams, n_blocks))
    c2 = np.broadcast_to(streams & low, (n_streams, n_blocks))
    c3 = np.broadcast_to(streams >> np.uint64(32), (n_streams, n_blocks))
    w0, w1, w2, w3 = _philox_numpy(c0, c1, c2, c3, k0, k1)
    out = np.empty((n_streams, 2 * n_blocks), dtype=np.float64)
    out[:, 0::2] = _words_to_uniform_numpy(w0, w1)
    out[:, 1::2] = _words_to_uniform_numpy(w2, w3)
    offset = start & 1
    return out[:, offset : offset + n]


def _poly(coefs, x):
    acc = np.zeros_like(x) + coefs[-1]
    for c in coefs[-2::-1]:
        acc = acc * x + c
    return acc


def ppf_numpy(u: np.ndarray) -> np.ndarray:
    """Standard normal quantile of ``u`` in (0, 1), AS241 accuracy (~1e-16)."""
    u = np.asarray(u, dtype=np.float64)
    q = u - 0.5
    out = np.empty_like(u)
    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if tail.any():
        qt = q[tail]
        r = np.where(qt < 0.0, u[tail], 1.0 - u[tail])
        # libm log (as in the jitted kernel); numpy's SIMD log can differ by an ulp
        r = np.sqrt(-np.fromiter(map(math.log, r), dtype=np.float64, count=r.size))
        near = r <= 5.0
        val = np.empty_like(r)
        rn = r[near] - 1.6
        val[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        val[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(qt < 0.0, -val, val)
    return out


# ---------------------------------------------------------------------------
# numba implementation
# ---------------------------------------------------------------------------


@njit(inline="always")
def philox_block_nb(c0, c1, c2, c3, k0, k1):
    m0 = np.uint64(_M0)
    m1 = np.uint64(_M1)
    low = np.uint64(_LOW32)
    shift = np.uint64(32)
    for _ in range(10):
        p0 = m0 * c0
        p1 = m1 * c2
        n0 = (p1 >> shift) ^ c1 ^ k0
        n2 = (p0 >> shift) ^ c3 ^ k1
        c1 = p1 & low
        c3 = p0 & low
        c0 = n0
        c2 = n2
        k0 = (k0 + np.uint64(_W0)) & low
        k1 = (k1 + np.uint64(_W1)) & low
    return c0, c1, c2, c3


@njit(inline="always")
def words_to_uniform_nb(hi, lo):
    k = ((hi << np.uint64(32)) | lo) >> np.uint64(12)
    return (np.float64(k) + 0.5) * _SCALE


@njit(inline="always")
def uniform_pair_nb(seed_lo, seed_hi, stream, block):
    """Two consecutive uniforms (draws ``2*block`` and ``2*block+1``)."""
    low = np.uint64(_LOW32)
    w0, w1, w2, w3 = philox_block_nb(
        block & low, block >> np.uint64(32), stream & low, stream >> np.uint64(32), seed_lo, seed_hi
    )
    return words_to_uniform_nb(w0, w1), words_to_uniform_nb(w2, w3)


@njit(inline="always")
def uniform_at_nb(seed_lo, seed_hi, stream, counter):
    a, b = uniform_pair_nb(seed_lo, seed_hi, stream, counter >> np.uint64(1))
    if counter & np.uint64(1):
        return b
    return a


@njit
def ppf_nb(u):
    q = u - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (
            ((((((_A[7] * r + _A[6]) * r + _A[5]) * r + _A[4]) * r + _A[3]) * r + _A[2]) * r + _A[1]) * r
            + _A[0]
        )
        den = (
            ((((((_B[7] * r + _B[6]) * r + _B[5]) * r + _B[4]) * r + _B[3]) * r + _B[2]) * r + _B[1]) * r
            + _B[0]
        )
        return q * num / den
    if q < 0.0:
        r = u
    else:
        r = 1.0 - u
    r = np.sqrt(-np.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (
            ((((((_C[7] * r + _C[6]) * r + _C[5]) * r + _C[4]) * r + _C[3]) * r + _C[2]) * r + _C[1]) * r
            + _C[0]
        )
        den = (
            ((((((_D[7] * r + _D[6]) * r + _D[5]) * r + _D[4]) * r + _D[3]) * r + _D[2]) * r + _D[1]) * r
            + _D[0]
        )
    else:
        r -= 5.0
        num = (
            ((((((_E[7] * r + _E[6]) * r + _E[5]) * r + _E[4]) * r + _E[3]) * r + _E[2]) * r + _E[1]) * r
            + _E[0]
        )
        den = (
            ((((((_F[7] * r + _F[6]) * r + _F[5]) * r + _F[4]) * r + _F[3]) * r + _F[2]) * r + _F[1]) * r
            + _F[0]
        )
    val = num / den
    if q < 0.0:
        return -val
    return val


@njit
def _fill_uniform_row_nb(out, p, seed_lo, seed_hi, stream, start, n):
    k = 0
    if start & 1:
        out[p, 0] = uniform_at_nb(seed_lo, seed_hi, stream, np.uint64(start))
        k = 1
    while k + 1 < n:
        a, b = uniform_pair_nb(seed_lo, seed_hi, stream, np.uint64((start + k) >> 1))
        out[p, k] = a
        out[p, k + 1] = b
        k += 2
    if k < n:
        out[p, k] = uniform_at_nb(seed_lo, seed_hi, stream, np.uint64(start + k))


@njit
def _uniform_grid_nb(seed_lo, seed_hi, stream0, n_streams, start, n):
    out = np.empty((n_streams, n), dtype=np.float64)
    for p in range(n_streams):
        _fill_uniform_row_nb(out, p, seed_lo, seed_hi, stream0 + np.uint64(p), start, n)
    return out


@njit
def _gaussian_grid_nb(seed_lo, seed_hi, stream0, n_streams, start, n):
    out = _uniform_grid_nb(seed_lo, seed_hi, stream0, n_streams, start, n)
    for p in range(n_streams):
        for k in range(n):
            out[p, k] = ppf_nb(out[p, k])
    return out


@njit
def _ppf_array_nb(u):
    flat = u.ravel()
    out = np.empty_like(flat)
    for i in range(flat.size):
        out[i] = ppf_nb(flat[i])
    return out.reshape(u.shape)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def seed_words(seed: int) -> tuple[np.uint64, np.uint64]:
    lo, hi = _split64(seed)
    return np.uint64(lo), np.uint64(hi)


def uniform_grid(seed: int, stream0: int, n_streams: int, start: int, n: int) -> np.ndarray:
    """Uniform draws ``[p, k] = U(seed, stream0 + p, start + k)``, shape (n_streams, n)."""
    if n_streams <= 0 or n <= 0:
        return np.empty((max(n_streams, 0), max(n, 0)))
    if _backend.use_numba():
        lo, hi = seed_words(seed)
        return _uniform_grid_nb(lo, hi, np.uint64(stream0 & MASK64), n_streams, start, n)
    return _uniform_grid_numpy(seed, stream0, n_streams, start, n)


def gaussian_grid(seed: int, stream0: int, n_streams: int, start: int, n: int) -> np.ndarray:
    """Standard normal draws laid out like :func:`uniform_grid`."""
    if n_streams <= 0 or n <= 0:
        return np.empty((max(n_streams, 0), max(n, 0)))
    if _backend.use_numba():
        lo, hi = seed_words(seed)
        return _gaussian_grid_nb(lo, hi, np.uint64(stream0 & MASK64), n_streams, start, n)
    return ppf_numpy(_uniform_grid_numpy(seed, stream0, n_streams, start, n))


def uniforms_at(seed: int, streams, counters) -> np.ndarray:
    """Elementwise U(seed, streams[i], counters[i]) (numpy; for ragged active sets)."""
    streams = np.asarray(streams, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    k0, k1 = _split64(seed)
    low = np.uint64(_LOW32)
    blocks = counters >> np.uint64(1)
    w0, w1, w2, w3 = _philox_numpy(
        blocks & low, blocks >> np.uint64(32), streams & low, streams >> np.uint64(32), k0, k1
    )
    odd = (counters & np.uint64(1)).astype(bool)
    return np.where(odd, _words_to_uniform_numpy(w2, w3), _words_to_uniform_numpy(w0, w1))


def gaussians_at(seed: int, streams, counters) -> np.ndarray:
    return ppf_numpy(uniforms_at(seed, streams, counters))


def ppf(u: np.ndarray) -> np.ndarray:
    u = np.ascontiguousarray(u, dtype=np.float64)
    if _backend.use_numba():
        return _ppf_array_nb(u)
    return ppf_numpy(u)
