"""numba kernels; same signatures and arithmetic as the numpy fallback."""
import math

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53


@njit(cache=True, nogil=True)
def _mulhilo(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    mid = (ll >> _S32) + (lh & _LO32) + (hl & _LO32)
    hi = a_hi * b_hi + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    return hi, a * b


@njit(cache=True, nogil=True)
def _philox(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = k0 + _W0
        k1 = k1 + _W1
    return c0, c1, c2, c3


@njit(cache=True, nogil=True)
def _philox_arrays(c0, c1, c2, c3, k0, k1):
    n = c0.shape[0]
    o0 = np.empty(n, np.uint64)
    o1 = np.empty(n, np.uint64)
    o2 = np.empty(n, np.uint64)
    o3 = np.empty(n, np.uint64)
    for i in range(n):
        o0[i], o1[i], o2[i], o3[i] = _philox(c0[i], c1[i], c2[i], c3[i], k0, k1)
    return o0, o1, o2, o3


def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64-10 block function on uint64 arrays (broadcasting)."""
    arrs = np.broadcast_arrays(*(np.asarray(c, dtype=np.uint64) for c in (c0, c1, c2, c3)))
    shape = arrs[0].shape
    flat = [np.ascontiguousarray(a).ravel() for a in arrs]
    out = _philox_arrays(flat[0], flat[1], flat[2], flat[3], np.uint64(k0), np.uint64(k1))
    return tuple(o.reshape(shape) for o in out)


@njit(cache=True, nogil=True)
def _to_unit(x):
    return (float(x >> _S11) + 0.5) * _TWO_M53


@njit(cache=True, nogil=True)
def _uniforms(k0, k1, block0, step, streams, tags, k):
    n = streams.shape[0]
    out = np.empty((n, k), np.float64)
    for i in range(n):
        j = 0
        b = np.uint64(block0)
        while j < k:
            w = _philox(b, step, streams[i], tags[i], k0, k1)
            for q in range(4):
                if j + q < k:
                    out[i, j + q] = _to_unit(w[q])
            j += 4
            b += np.uint64(1)
    return out


def uniforms(k0, k1, block0, step, streams, tags, k):
    """Open-interval uniforms, shape (len(streams), k).

    Slot j of row i comes from counter (block0 + j // 4, step, streams[i], tags[i]).
    """
    return _uniforms(np.uint64(k0), np.uint64(k1), np.uint64(block0), np.uint64(step),
                     np.ascontiguousarray(streams, dtype=np.uint64),
                     np.ascontiguousarray(tags, dtype=np.uint64), int(k))


@njit(cache=True, nogil=True)
def _box_muller(u):
    n, m = u.shape
    z = np.empty((n, m), np.float64)
    for i in range(n):
        for j in range(0, m, 2):
            r = math.sqrt(-2.0 * math.log(u[i, j]))
            theta = 2.0 * math.pi * u[i, j + 1]
            z[i, j] = r * math.cos(theta)
            z[i, j + 1] = r * math.sin(theta)
    return z


def box_muller(u):
    """Standard normals from uniforms; consumes columns pairwise (even width)."""
    return _box_muller(np.ascontiguousarray(u, dtype=np.float64))


@njit(cache=True, nogil=True)
def _cms_scalar(ua, ue, a):
    v = math.pi * (ua - 0.5)
    if a == 1.0:
        return math.tan(v)
    w = -math.log(ue)
    return (math.sin(a * v) / math.cos(v) ** (1.0 / a)
            * (math.cos(v - a * v) / w) ** ((1.0 - a) / a))


@njit(cache=True, nogil=True)
def _cms_flat(ua, ue, a):
    out = np.empty(ua.shape[0], np.float64)
    for i in range(ua.shape[0]):
        out[i] = _cms_scalar(ua[i], ue[i], a[i])
    return out


def cms_symmetric(u_angle, u_exp, alpha):
    """Chambers-Mallows-Stuck transform to standard symmetric alpha-stable.

    Output has characteristic function exp(-|xi|**alpha).
    """
    ua, ue, a = np.broadcast_arrays(np.asarray(u_angle, dtype=np.float64),
                                    np.asarray(u_exp, dtype=np.float64),
                                    np.asarray(alpha, dtype=np.float64))
    shape = ua.shape
    out = _cms_flat(np.ascontiguousarray(ua).ravel(), np.ascontiguousarray(ue).ravel(),
                    np.ascontiguousarray(a).ravel())
    return out.reshape(shape)


@njit(cache=True, nogil=True)
def _poisson_scalar(u, mu):
    if mu <= 0.0:
        return 0
    if mu < 30.0:
        p = math.exp(-mu)
        cdf = p
        k = 0
        while u > cdf and k < 200:
            k += 1
            p *= mu / k
            cdf += p
        return k
    start = max(0.0, math.floor(mu - 12.0 * math.sqrt(mu)))
    stop = mu + 40.0 * math.sqrt(mu) + 100.0
    p = math.exp(start * math.log(mu) - mu - math.lgamma(start + 1.0))
    cdf = p
    k = start
    while u > cdf and k < stop:
        k += 1.0
        p *= mu / k
        cdf += p
    return int(k)


@njit(cache=True, nogil=True)
def _poisson_flat(u, mu):
    out = np.empty(u.shape[0], np.int64)
    for i in range(u.shape[0]):
        out[i] = _poisson_scalar(u[i], mu[i])
    return out


def poisson_inverse(u, mu):
    """Inverse-CDF Poisson counts; mu broadcast against u."""
    u, mu = np.broadcast_arrays(np.asarray(u, dtype=np.float64),
                                np.asarray(mu, dtype=np.float64))
    return _poisson_flat(np.ascontiguousarray(u).ravel(), np.ascontiguousarray(mu).ravel())


@njit(cache=True, nogil=True)
def _stable_like(alpha, gamma, h, k0, k1, block0, step, streams, tags, d):
    n = streams.shape[0]
    out = np.empty((n, d), np.float64)
    for i in range(n):
        a = alpha[i]
        scale = gamma * h ** (1.0 / a)
        b = block0
        j = 0
        while j < d:
            w = _philox(b, step, streams[i], tags[i], k0, k1)
            out[i, j] = scale * _cms_scalar(_to_unit(w[0]), _to_unit(w[1]), a)
            if j + 1 < d:
                out[i, j + 1] = scale * _cms_scalar(_to_unit(w[2]), _to_unit(w[3]), a)
            j += 2
            b += np.uint64(1)
    return out


def stable_like_increments(alpha, gamma, h, k0, k1, block0, step, streams, tags, d):
    """Per-axis symmetric stable increments with row-wise index alpha[i].

    Row i has characteristic function exp(-h * gamma**alpha_i * sum_k |xi_k|**alpha_i).
    """
    return _stable_like(np.ascontiguousarray(alpha, dtype=np.float64), float(gamma), float(h),
                        np.uint64(k0), np.uint64(k1), np.uint64(block0), np.uint64(step),
                        np.ascontiguousarray(streams, dtype=np.uint64),
                        np.ascontiguousarray(tags, dtype=np.uint64), int(d))
