"""Hot loops: counter-based RNG and end-to-end SINR.

Two interchangeable backends live here.  The numba one is used unless
``COGRELAY_DISABLE_NUMBA=1`` is set or numba fails to import; the numpy one
is always available as ``NUMPY``.  Uniform variates are bit-identical between
them, derived quantities agree to rounding.

The generator is SplitMix64 addressed by counter: the 64-bit word for
(key, ctr) is mix(key + (ctr + 1) * GOLDEN), which is exactly the SplitMix64
stream seeded with ``key``.  Any sample can be regenerated on its own, so
chunks need no shared state.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_TWO53 = 1.0 / 9007199254740992.0

# parameter vector layout for e2e_sinr; the block holds channel gains that
# already carry their mean, so no path-loss terms appear here
P_SCENARIO, P_EH, P_H, P_THETA, P_SM, P_RM, P_PP, P_N0R, P_N0D = range(9)
N_PARAMS = 9

SCENARIO_CODE = {"interference_plus_noise": 0, "interference_dominant": 1, "noise_dominant": 2}


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a Python int (used for seeding)."""
    z &= 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def stream_key(seed: int) -> int:
    return mix64(int(seed) + 0x9E3779B97F4A7C15)


def stride(L: int) -> int:
    """Words per sample: g_sr, g_rd, then six length-L groups."""
    return 2 + 6 * L


# slot offsets within one sample
def slots(L: int) -> dict[str, slice]:
    out = {"g_sr": slice(0, 1), "g_rd": slice(1, 2)}
    for k, name in enumerate(("g_ir", "g_id", "g_is", "g_i", "g_si", "g_ri")):
        out[name] = slice(2 + k * L, 2 + (k + 1) * L)
    return out


# ---------------------------------------------------------------- numpy


def _np_words(key: int, start: int, count: int) -> np.ndarray:
    ctr = np.arange(count, dtype=np.uint64) + np.uint64(start + 1)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + ctr * GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _np_uniforms(key: int, start: int, count: int) -> np.ndarray:
    return (_np_words(key, start, count) >> _S11).astype(np.float64) * _TWO53


def _np_exp_block(key: int, first_sample: int, n: int, width: int) -> np.ndarray:
    u = _np_uniforms(key, first_sample * width, n * width)
    return (-np.log1p(-u)).reshape(n, width)


def _ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / den
    return np.where(num > 0, r, 0.0)


def _np_e2e_sinr(block: np.ndarray, L: int, p: np.ndarray) -> np.ndarray:
    g_sr, g_rd = block[:, 0], block[:, 1]
    g_ir = block[:, 2 : 2 + L].sum(axis=1)
    g_id = block[:, 2 + L : 2 + 2 * L].sum(axis=1)
    g_is = block[:, 2 + 2 * L : 2 + 3 * L].sum(axis=1)
    theta, P_Sm, P_Rm, P_p = p[P_THETA], p[P_SM], p[P_RM], p[P_PP]
    if p[P_EH] != 0.0:
        ps = np.minimum(theta * P_p * g_is, P_Sm)
    else:
        ps = np.full_like(g_sr, P_Sm)
    x = ps * g_sr
    if p[P_SCENARIO] == 2.0:
        u = np.zeros_like(g_sr)
        z = np.zeros_like(g_sr)
    else:
        u = P_p * g_ir
        z = P_p * g_id
    if p[P_EH] != 0.0:
        pr = np.minimum(theta * u, P_Rm)
    else:
        pr = np.minimum(theta * (x + p[P_H] * u), P_Rm)
    g1 = _ratio(x, u + p[P_N0R])
    g2 = _ratio(pr * g_rd, z + p[P_N0D])
    return np.minimum(g1, g2)


def _np_sinr_chunk(key: int, first_sample: int, n: int, L: int, scale: np.ndarray, p: np.ndarray) -> np.ndarray:
    return _np_e2e_sinr(_np_exp_block(key, first_sample, n, stride(L)) * scale, L, p)


NUMPY = SimpleNamespace(
    name="numpy",
    uniforms=_np_uniforms,
    exp_block=_np_exp_block,
    e2e_sinr=_np_e2e_sinr,
    sinr_chunk=_np_sinr_chunk,
)


# ---------------------------------------------------------------- numba


def _build_numba():
    from numba import njit

    @njit(cache=True, nogil=True, inline="always")
    def _word(key, ctr):
        z = key + (ctr + np.uint64(1)) * GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)

    @njit(cache=True, nogil=True)
    def uniforms_impl(key, start, count):
        out = np.empty(count, dtype=np.float64)
        for i in range(count):
            w = _word(key, start + np.uint64(i))
            out[i] = np.float64(w >> _S11) * _TWO53
        return out

    @njit(cache=True, nogil=True)
    def exp_block_impl(key, first, n, width):
        out = np.empty((n, width), dtype=np.float64)
        base = first * np.uint64(width)
        for i in range(n):
            for j in range(width):
                w = _word(key, base + np.uint64(i * width + j))
                out[i, j] = -np.log1p(-(np.float64(w >> _S11) * _TWO53))
        return out

    @njit(cache=True, nogil=True, inline="always")
    def _safe_ratio(num, den):
        if num > 0.0:
            return num / den if den > 0.0 else np.inf
        return 0.0

    @njit(cache=True, nogil=True, inline="always")
    def _sinr_one(g_sr, g_rd, g_ir, g_id, g_is, p):
        theta, P_Sm, P_Rm, P_p = p[P_THETA], p[P_SM], p[P_RM], p[P_PP]
        eh = p[P_EH] != 0.0
        nd = p[P_SCENARIO] == 2.0
        ps = min(theta * P_p * g_is, P_Sm) if eh else P_Sm
        x = ps * g_sr
        u = 0.0 if nd else P_p * g_ir
        z = 0.0 if nd else P_p * g_id
        if eh:
            pr = min(theta * u, P_Rm)
        else:
            pr = min(theta * (x + p[P_H] * u), P_Rm)
        g1 = _safe_ratio(x, u + p[P_N0R])
        g2 = _safe_ratio(pr * g_rd, z + p[P_N0D])
        return min(g1, g2)

    @njit(cache=True, nogil=True)
    def e2e_sinr_impl(block, L, p):
        n = block.shape[0]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            g_ir = 0.0
            g_id = 0.0
            g_is = 0.0
            for k in range(L):
                g_ir += block[i, 2 + k]
                g_id += block[i, 2 + L + k]
                g_is += block[i, 2 + 2 * L + k]
            out[i] = _sinr_one(block[i, 0], block[i, 1], g_ir, g_id, g_is, p)
        return out

    @njit(cache=True, nogil=True, inline="always")
    def _gain(key, ctr, scale):
        return -np.log1p(-(np.float64(_word(key, ctr) >> _S11) * _TWO53)) * scale

    @njit(cache=True, nogil=True)
    def sinr_chunk_impl(key, first, n, L, scale, p):
        # fused exp_block + e2e_sinr: only the slots the SINR reads are drawn
        width = 2 + 6 * L
        out = np.empty(n, dtype=np.float64)
        eh = p[P_EH] != 0.0
        nd = p[P_SCENARIO] == 2.0
        for i in range(n):
            base = (first + np.uint64(i)) * np.uint64(width)
            g_sr = _gain(key, base, scale[0])
            g_rd = _gain(key, base + np.uint64(1), scale[1])
            g_ir = 0.0
            g_id = 0.0
            g_is = 0.0
            for k in range(L):
                if not nd:
                    g_ir += _gain(key, base + np.uint64(2 + k), scale[2 + k])
                    g_id += _gain(key, base + np.uint64(2 + L + k), scale[2 + L + k])
                if eh:
                    g_is += _gain(key, base + np.uint64(2 + 2 * L + k), scale[2 + 2 * L + k])
            out[i] = _sinr_one(g_sr, g_rd, g_ir, g_id, g_is, p)
        return out

    def uniforms(key, start, count):
        return uniforms_impl(np.uint64(key), np.uint64(start), count)

    def exp_block(key, first_sample, n, width):
        return exp_block_impl(np.uint64(key), np.uint64(first_sample), n, width)

    def e2e_sinr(block, L, p):
        return e2e_sinr_impl(np.ascontiguousarray(block), L, np.asarray(p, dtype=np.float64))

    def sinr_chunk(key, first_sample, n, L, scale, p):
        return sinr_chunk_impl(
            np.uint64(key), np.uint64(first_sample), n, L,
            np.asarray(scale, dtype=np.float64), np.asarray(p, dtype=np.float64),
        )

    return SimpleNamespace(
        name="numba", uniforms=uniforms, exp_block=exp_block, e2e_sinr=e2e_sinr, sinr_chunk=sinr_chunk
    )


def _load_numba():
    try:
        return _build_numba()
    except ImportError:
        return None


NUMBA = None if os.environ.get("COGRELAY_DISABLE_NUMBA", "") == "1" else _load_numba()
BACKEND = NUMBA if NUMBA is not None else NUMPY


def get_backend(name: str | None = None):
    """Return a backend namespace by name ("numba" or "numpy"); ``None``
    gives the active default."""
    if name is None:
        return BACKEND
    if name == "numpy":
        return NUMPY
    if name == "numba":
        if NUMBA is None:
            nb = _load_numba()
            if nb is None:
                raise RuntimeError("numba is not available")
            return nb
        return NUMBA
    raise ValueError(f"unknown backend {name!r}")
