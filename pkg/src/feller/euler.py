"""Euler scheme for Feller processes.

Each step freezes the symbol at the current state and adds a Levy
increment with characteristic exponent xi -> q(x, xi). Paths are advanced
in batches; path ``p`` always reads the random stream with id ``p`` at the
step address of the current step, so results do not depend on batching or
on the number of worker threads.
"""
from __future__ import annotations

import math
import os
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .levy_sampler import LANE_COUNT, SamplerOptions, build_sampler
from .jumps import Generic
from .rng import RngStream, engine_block
from .symbol import Family, check_condition_A3

RECORD_LIMIT = 1_000_000
RESERVOIR = 100
CHUNK = 4096


class SimulationError(RuntimeError):
    def __init__(self, message, path=None, step=None, failures=()):
        super().__init__(message)
        self.path = path
        self.step = step
        self.failures = list(failures) or ([(path, step)] if path is not None else [])


@dataclass(frozen=True, eq=False)
class Path:
    times: np.ndarray
    states: np.ndarray
    h: float
    seed: int
    stream_id: int

    @property
    def T(self):
        return self.times[-1]


@dataclass(frozen=True, eq=False)
class Ensemble:
    terminal: np.ndarray
    stream_ids: np.ndarray
    times: np.ndarray
    paths: Optional[np.ndarray] = None  # (k, n_steps + 1, d) for path_ids
    path_ids: Optional[np.ndarray] = None
    config: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return self.terminal.shape[0]

    def path(self, i):
        """The recorded Path of stream ``i``."""
        if self.path_ids is None:
            raise KeyError("no paths recorded")
        pos = np.nonzero(self.path_ids == i)[0]
        if pos.size == 0:
            raise KeyError(f"path {i} was not recorded")
        h = self.config.get("h", float(self.times[1] - self.times[0]))
        return Path(self.times, self.paths[pos[0]], h, self.config.get("seed", 0), int(i))


def _threads(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("FELLER_THREADS", "").strip()
    return max(1, int(env)) if env else 1


class _SamplerCache:
    """Thread-safe LRU of samplers keyed by (quantised) state."""

    def __init__(self, build, quantum=None, maxsize=4096):
        self._build = build
        self.quantum = quantum
        self._maxsize = maxsize
        self._data = OrderedDict()
        self._lock = threading.Lock()

    def key_state(self, x):
        if self.quantum is None:
            return x
        return np.round(x / self.quantum) * self.quantum

    def get(self, x):
        xs = self.key_state(x)
        key = xs.tobytes()
        with self._lock:
            hit = self._data.get(key)
            if hit is not None:
                self._data.move_to_end(key)
                return hit
        sampler = self._build(xs)
        with self._lock:
            self._data[key] = sampler
            if len(self._data) > self._maxsize:
                self._data.popitem(last=False)
        return sampler


class Stepper:
    """Batched one-step map for a symbol at fixed step size ``h``.

    ``increments(states, block)`` returns the Levy increments for every row,
    where row i is frozen at ``states[i]`` and reads its randomness from row
    i of ``block``.
    """

    def __init__(self, sym, h, sampler_options=None, quantum="default", x_probe=None):
        if not h > 0:
            raise ValueError("step size h must be positive")
        self.sym = sym
        self.h = float(h)
        self.opts = sampler_options or SamplerOptions()
        probe = np.zeros(sym.dim) if x_probe is None else np.asarray(x_probe, dtype=np.float64)
        a3 = check_condition_A3(sym, probe[None, :])
        if not a3.passed:
            raise SimulationError(f"symbol {sym.name!r} violates q(x,0)=0: {a3.note}")
        fam = sym.family
        if fam in (Family.BROWNIAN, Family.LEVY_CONSTANT):
            self._kind = "constant"
            self._sampler = build_sampler(sym.triplet_at(probe), self.h, self.opts)
        elif fam is Family.STABLE_LIKE:
            self._kind = "stable_like"
            self._alpha = sym.params["alpha_fn"]
            self._bounds = sym.params["bounds"]
            self._scale = sym.params["scale"]
        elif fam is Family.SDE_DRIVEN:
            self._kind = "sde"
            driver = sym.params["driver"]
            self._driver = build_sampler(driver.triplet_at(np.zeros(driver.dim)), self.h, self.opts)
            self._f_at = sym.params["coefficient_at"]
            self._f = sym.params["coefficient"]
            self._vectorized = sym.params["vectorized"]
        else:
            self._kind = "custom"
            if quantum == "default":
                generic = isinstance(sym.triplet_at(probe).jumps, Generic)
                quantum = 1e-3 if generic else None
            self._cache = _SamplerCache(
                lambda x: build_sampler(sym.triplet_at(x), self.h, self.opts), quantum)

    def increments(self, states, block):
        n, d = states.shape
        if self._kind == "constant":
            return self._sampler.draw(self.h, block)
        if self._kind == "stable_like":
            alpha = np.asarray(self._alpha(states), dtype=np.float64).reshape(n)
            lo, hi = self._bounds
            if np.any(~(alpha >= lo - 1e-12)) or np.any(~(alpha <= hi + 1e-12)):
                raise SimulationError("alpha(x) left its declared bounds")
            b0 = block.reserve(LANE_COUNT, (2 * d + 3) // 4)
            k0, k1 = block.key
            return _kernels.stable_like_increments(alpha, self._scale, self.h, k0, k1, b0,
                                                   block.step, block.streams,
                                                   block.tags(LANE_COUNT), d)
        if self._kind == "sde":
            z = self._driver.draw(self.h, block)
            if self._vectorized:
                f = np.asarray(self._f(states), dtype=np.float64).reshape(n, d, -1)
            else:
                f = np.stack([self._f_at(x) for x in states])
            return np.einsum("idk,ik->id", f, z)
        out = np.empty((n, d))
        for i in range(n):
            out[i] = self._cache.get(states[i]).draw(self.h, block.take([i]))[0]
        return out


def _run_chunk(stepper, x0, n_steps, seed, streams, record, domain):
    n = streams.shape[0]
    d = x0.shape[0]
    states = np.broadcast_to(x0, (n, d)).copy()
    rec_rows = np.nonzero(record)[0]
    hist = np.empty((rec_rows.size, n_steps + 1, d)) if rec_rows.size else None
    if hist is not None:
        hist[:, 0] = states[rec_rows]
    for m in range(n_steps):
        block = engine_block(seed, m, streams, domain)
        states = states + stepper.increments(states, block)
        bad = ~np.all(np.isfinite(states), axis=1)
        if np.any(bad):
            failed = [(int(p), m + 1) for p in streams[bad]]
            p = failed[0][0]
            raise SimulationError(f"non-finite state on path {p} at step {m + 1}", p, m + 1,
                                  failed)
        if hist is not None:
            hist[:, m + 1] = states[rec_rows]
    return states, hist


def step(sym, x, h, rng, size=None, stepper=None):
    """One Euler step from ``x``: x plus a Levy increment of exponent q(x, .).

    With ``size`` returns ``size`` independent next states, shape (size, d).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (sym.dim,):
        raise ValueError(f"state must have length {sym.dim}")
    stepper = stepper or Stepper(sym, h, x_probe=x)
    n = 1 if size is None else int(size)
    block = rng.next_block(n)
    states = np.broadcast_to(x, (n, sym.dim)).copy()
    out = states + stepper.increments(states, block)
    if not np.all(np.isfinite(out)):
        raise SimulationError("non-finite increment")
    return out[0] if size is None else out


def simulate_path(sym, x0, h, n_steps, rng, sampler_options=None):
    """Euler path on the grid 0, h, ..., n_steps * h using stream ``rng.stream_id``."""
    if int(n_steps) < 1:
        raise ValueError("n_steps must be >= 1")
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    stepper = Stepper(sym, h, sampler_options, x_probe=x0)
    streams = np.array([rng.stream_id], dtype=np.uint64)
    _, hist = _run_chunk(stepper, x0, int(n_steps), rng.seed, streams, np.array([True]),
                         rng.domain)
    times = np.arange(int(n_steps) + 1) * float(h)
    return Path(times, hist[0], float(h), rng.seed, rng.stream_id)


def simulate_ensemble(sym, x0, h, n_steps, n_paths, seed, threads=None, record="auto",
                      sampler_options=None, domain=0, first_stream=0):
    """``n_paths`` independent Euler paths; path ``i`` uses stream ``first_stream + i``.

    ``record`` is ``"auto"`` (all paths while n_paths*(n_steps+1)*d <= 1e6,
    else the first 100), ``"all"``, ``"none"`` or an int count.
    """
    n_paths = int(n_paths)
    n_steps = int(n_steps)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    d = sym.dim
    if x0.shape != (d,):
        raise ValueError(f"x0 must have length {d}")
    stepper = Stepper(sym, h, sampler_options, x_probe=x0)
    streams = np.arange(first_stream, first_stream + n_paths, dtype=np.uint64)

    if record == "auto":
        n_rec = n_paths if n_paths * (n_steps + 1) * d <= RECORD_LIMIT else min(RESERVOIR, n_paths)
    elif record == "all":
        n_rec = n_paths
    elif record == "none":
        n_rec = 0
    else:
        n_rec = min(int(record), n_paths)
    rec_mask = np.arange(n_paths) < n_rec

    chunks = [slice(i, min(i + CHUNK, n_paths)) for i in range(0, n_paths, CHUNK)]

    def work(sl):
        try:
            return _run_chunk(stepper, x0, n_steps, seed, streams[sl], rec_mask[sl], domain)
        except SimulationError as exc:
            return exc

    nthreads = min(_threads(threads), len(chunks))
    if nthreads > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(sl) for sl in chunks]
    errors = [r for r in results if isinstance(r, SimulationError)]
    if errors:
        failed = sorted(f for e in errors for f in e.failures)
        p, m = failed[0]
        raise SimulationError(f"{len(failed)} path(s) failed; first: path {p} at step {m}",
                              p, m, failed)

    terminal = np.concatenate([r[0] for r in results], axis=0)
    hists = [r[1] for r in results if r[1] is not None]
    paths = np.concatenate(hists, axis=0) if hists else None
    times = np.arange(n_steps + 1) * float(h)
    config = {"symbol": sym.name, "x0": x0.tolist(), "h": float(h), "n_steps": n_steps,
              "n_paths": n_paths, "seed": int(seed), "domain": int(domain),
              "backend": _kernels.BACKEND}
    return Ensemble(terminal, streams, times, paths,
                    streams[:n_rec] if n_rec else None, config)


def stream_for_path(seed, path, domain=0):
    """The RngStream a given ensemble path reads from."""
    return RngStream(seed, path, domain=domain)
