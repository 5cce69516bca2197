"""Pure-numpy kernels. Vectorised over the batch axis."""
import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53


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


def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64-10 block function on uint64 arrays (broadcasting)."""
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in (c0, c1, c2, c3))
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    with np.errstate(over="ignore"):
        for _ in range(10):
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + _W0
            k1 = k1 + _W1
    return c0, c1, c2, c3


def uniforms(k0, k1, block0, step, streams, tags, k):
    """Open-interval uniforms, shape (len(streams), k).

    Slot j of row i comes from counter (block0 + j // 4, step, streams[i], tags[i]).
    """
    streams = np.asarray(streams, dtype=np.uint64)
    tags = np.asarray(tags, dtype=np.uint64)
    n = streams.shape[0]
    nblocks = (k + 3) // 4
    out = np.empty((n, nblocks * 4), dtype=np.float64)
    c1 = np.uint64(step)
    for b in range(nblocks):
        words = philox4x64(np.uint64(block0 + b), c1, streams, tags, k0, k1)
        for w in range(4):
            out[:, 4 * b + w] = ((words[w] >> _S11).astype(np.float64) + 0.5) * _TWO_M53
    return out[:, :k]


def box_muller(u):
    """Standard normals from uniforms; consumes columns pairwise (even width)."""
    u = np.asarray(u, dtype=np.float64)
    r = np.sqrt(-2.0 * np.log(u[:, 0::2]))
    theta = 2.0 * np.pi * u[:, 1::2]
    z = np.empty_like(u)
    z[:, 0::2] = r * np.cos(theta)
    z[:, 1::2] = r * np.sin(theta)
    return z


def cms_symmetric(u_angle, u_exp, alpha):
    """Chambers-Mallows-Stuck transform to standard symmetric alpha-stable.

    Output has characteristic function exp(-|xi|**alpha).
    """
    u_angle, u_exp, alpha = np.broadcast_arrays(
        np.asarray(u_angle, dtype=np.float64),
        np.asarray(u_exp, dtype=np.float64),
        np.asarray(alpha, dtype=np.float64),
    )
    v = np.pi * (u_angle - 0.5)
    w = -np.log(u_exp)
    cauchy = alpha == 1.0
    # placeholder alpha keeps the general branch finite where alpha == 1
    a = np.where(cauchy, 0.5, alpha)
    general = (np.sin(a * v) / np.cos(v) ** (1.0 / a)
               * (np.cos(v - a * v) / w) ** ((1.0 - a) / a))
    return np.where(cauchy, np.tan(v), general)


def poisson_inverse(u, mu):
    """Inverse-CDF Poisson counts; mu broadcast against u."""
    u, mu = np.broadcast_arrays(np.asarray(u, dtype=np.float64),
                                np.asarray(mu, dtype=np.float64))
    u = u.ravel()
    mu = mu.ravel()
    out = np.zeros(u.shape, dtype=np.int64)
    small = mu < 30.0
    if np.any(small):
        uu = u[small]
        m = mu[small]
        p = np.exp(-m)
        cdf = p.copy()
        k = np.zeros(uu.shape, dtype=np.int64)
        active = (uu > cdf) & (m > 0.0)
        while np.any(active):
            k[active] += 1
            p[active] *= m[active] / k[active]
            cdf[active] += p[active]
            active &= (uu > cdf) & (k < 200)
        out[small] = k
    big = ~small
    if np.any(big):
        from scipy.special import gammaln

        uu = u[big]
        m = mu[big]
        start = np.maximum(0.0, np.floor(m - 12.0 * np.sqrt(m)))
        stop = m + 40.0 * np.sqrt(m) + 100.0
        p = np.exp(start * np.log(m) - m - gammaln(start + 1.0))
        cdf = p.copy()
        k = start.copy()
        active = uu > cdf
        while np.any(active):
            k[active] += 1.0
            p[active] *= m[active] / k[active]
            cdf[active] += p[active]
            active &= (uu > cdf) & (k < stop)
        out[big] = k.astype(np.int64)
    return out


def stable_like_increments(alpha, gamma, h, k0, k1, block0, step, streams, tags, d):
    """Per-axis symmetric stable increments with row-wise index alpha[i].

    Row i has characteristic function exp(-h * gamma**alpha_i * sum_k |xi_k|**alpha_i).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    u = uniforms(k0, k1, block0, step, streams, tags, 2 * d)
    a = alpha[:, None]
    x = cms_symmetric(u[:, 0::2], u[:, 1::2], a)
    return x * (gamma * h ** (1.0 / a))
