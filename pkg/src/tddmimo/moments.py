"""Monte Carlo estimation of the trace-inverse gain statistics.

Sampling is counter-based: sample i always uses the Philox stream keyed by
(seed, i), so estimates are bit-identical regardless of how samples are
chunked across workers.  Per-sample values are assembled into one array in
index order and reduced with a fixed summation order.

Singular draws (Gram condition number beyond the precoding threshold) are
discarded and counted; a run aborts if they exceed 0.1% of the samples.
"""

from __future__ import annotations

import hashlib
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel_model import RngStream, draw_channel
from .errors import ExcessSingularDrawsError
from .precoding import COND_LIMIT

CHUNK = 2048
SINGULAR_FRACTION_LIMIT = 1e-3


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo mean/variance of a scalar statistic."""

    mean: float
    variance: float
    std_error_of_mean: float
    samples: int
    singular_events: int


@dataclass(frozen=True)
class MomentKey:
    """Cache key: statistic kind plus everything its law depends on."""

    kind: str  # "eta" | "phi_F"
    M: int
    K: int
    N: int
    fingerprint: str  # "-" for eta; F-diagonal hash for phi_F
    samples: int
    seed: int


def f_fingerprint(f_diag) -> str:
    """Collision-free (to 1e-12 relative) fingerprint of an F diagonal."""
    text = ",".join(f"{float(v):.12e}" for v in np.atleast_1d(f_diag))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _draw_batch(K: int, M: int, seed: int, start: int, count: int) -> np.ndarray:
    z = np.empty((count, K, M), dtype=complex)
    for i in range(count):
        z[i] = draw_channel(K, M, RngStream(seed, start + i))
    return z


def _trace_inv_stat(gram: np.ndarray) -> np.ndarray:
    """Batched (tr G^{-1})^{-1/2} with NaN marking singular draws."""
    vals = np.full(gram.shape[0], np.nan)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(gram)
    ok = np.isfinite(cond) & (cond <= COND_LIMIT)
    if np.any(ok):
        inv = np.linalg.inv(gram[ok])
        tr = np.trace(inv, axis1=1, axis2=2).real
        vals[ok] = tr ** -0.5
    return vals


def _eta_chunk(args) -> np.ndarray:
    M, K, N, seed, start, count = args
    z = _draw_batch(K, M, seed, start, count)
    norms = np.sum(np.abs(z) ** 2, axis=2)
    order = np.argsort(-norms, axis=1, kind="stable")[:, :N]
    u = np.take_along_axis(z, order[:, :, None], axis=1)
    gram = u @ u.conj().transpose(0, 2, 1)
    return _trace_inv_stat(gram)


def _phi_chunk(args) -> np.ndarray:
    f_diag, M, seed, start, count = args
    f_diag = np.asarray(f_diag, dtype=float)
    z = _draw_batch(f_diag.size, M, seed, start, count)
    zf = f_diag[None, :, None] * z
    gram = zf @ zf.conj().transpose(0, 2, 1)
    return _trace_inv_stat(gram)


def _chunk_tasks(samples: int):
    return [(start, min(CHUNK, samples - start)) for start in range(0, samples, CHUNK)]


def _collect(chunk_fn, params: tuple, samples: int, seed: int, workers: int) -> np.ndarray:
    tasks = [params + (seed, start, count) for start, count in _chunk_tasks(samples)]
    if workers <= 1 or len(tasks) == 1:
        parts = [chunk_fn(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(chunk_fn, tasks))
    return np.concatenate(parts) if len(parts) > 1 else parts[0]


def _estimate_from_values(values: np.ndarray) -> MomentEstimate:
    samples = values.size
    singular = int(np.isnan(values).sum())
    if singular > SINGULAR_FRACTION_LIMIT * samples:
        raise ExcessSingularDrawsError(
            f"{singular}/{samples} singular draws exceeds the 0.1% budget")
    n = samples - singular
    s1 = float(np.nansum(values))
    s2 = float(np.nansum(values * values))
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    return MomentEstimate(mean=mean, variance=var,
                          std_error_of_mean=float(np.sqrt(var / n)),
                          samples=samples, singular_events=singular)


def eta_samples(M: int, K: int, N: int, samples: int, seed: int,
                workers: int = 1) -> np.ndarray:
    """Raw eta draws (NaN marks discarded singular draws); test oracle hook."""
    if not (1 <= N <= K <= M):
        raise IndexError(f"need 1 <= N <= K <= M, got N={N}, K={K}, M={M}")
    if samples < 1:
        raise IndexError("samples must be positive")
    return _collect(_eta_chunk, (M, K, N), samples, seed, workers)


def eta_moments(M: int, K: int, N: int, samples: int, seed: int, *,
                workers: int = 1, cache: "MomentCache | None" = None) -> MomentEstimate:
    """Moments of eta: trace-inverse statistic of the N largest-norm rows
    of a K x M i.i.d. CN(0,1) matrix."""
    if not (1 <= N <= K <= M):
        raise IndexError(f"need 1 <= N <= K <= M, got N={N}, K={K}, M={M}")
    key = MomentKey("eta", M, K, N, "-", samples, seed)
    compute = lambda: _estimate_from_values(eta_samples(M, K, N, samples, seed, workers))
    return cache.cached(key, compute) if cache is not None else compute()


def phi_f_moments(f_diag, M: int, samples: int, seed: int, *,
                  workers: int = 1, cache: "MomentCache | None" = None) -> MomentEstimate:
    """Moments of phi_F = (tr[(F Z Z^H F)^{-1}])^{-1/2}, Z of size K x M."""
    f_diag = np.asarray(f_diag, dtype=float)
    K = f_diag.size
    if not (1 <= K <= M):
        raise IndexError(f"need 1 <= K <= M, got K={K}, M={M}")
    if np.any(f_diag <= 0):
        raise ValueError("F must be positive diagonal")
    key = MomentKey("phi_F", M, K, K, f_fingerprint(f_diag), samples, seed)
    compute = lambda: _estimate_from_values(
        _collect(_phi_chunk, (tuple(f_diag), M), samples, seed, workers))
    return cache.cached(key, compute) if cache is not None else compute()


# ---------------------------------------------------------------------------
# Scheduled heterogeneous statistics (per-block selection -> conditional phi)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightedPhiStats:
    """Per-(N, user) selection fractions and conditional phi moments.

    Arrays are indexed [N-1, k] over K active users: frac is the fraction of
    blocks in which user k is among the N served; mean/variance are the
    moments of the selected-submatrix statistic phi conditioned on that
    event.  Entries with zero counts are NaN.
    """

    samples: int
    singular_events: int
    count: np.ndarray
    frac: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    se_mean: np.ndarray
    se_variance: np.ndarray


def _weighted_chunk(args):
    f_diag, p_star, M, seed, start, count = args
    f_diag = np.asarray(f_diag, dtype=float)
    p_star = np.asarray(p_star, dtype=float)
    Ka = f_diag.size
    cnt = np.zeros((Ka, Ka), dtype=np.int64)
    s1 = np.zeros((Ka, Ka))
    s2 = np.zeros((Ka, Ka))
    singular = 0
    for i in range(count):
        z = draw_channel(Ka, M, RngStream(seed, start + i))
        scores = p_star * np.sum(np.abs(z) ** 2, axis=1)
        order = np.argsort(-scores, kind="stable")
        zf = f_diag[:, None] * z
        phis = np.empty(Ka)
        ok = True
        for n in range(1, Ka + 1):
            u = zf[order[:n]]
            gram = u @ u.conj().T
            if np.linalg.cond(gram) > COND_LIMIT:
                ok = False
                break
            phis[n - 1] = float(np.trace(np.linalg.inv(gram)).real) ** -0.5
        if not ok:
            singular += 1
            continue
        for n in range(1, Ka + 1):
            sel = order[:n]
            cnt[n - 1, sel] += 1
            s1[n - 1, sel] += phis[n - 1]
            s2[n - 1, sel] += phis[n - 1] ** 2
    return cnt, s1, s2, singular


def weighted_phi_stats(f_diag, p_star, M: int, samples: int, seed: int,
                       workers: int = 1) -> WeightedPhiStats:
    """Monte Carlo over coherence blocks of the weighted selection rule.

    In each block users are ordered by p_star_k * ||z_k||^2 and, for every
    N, the statistic phi of the selected scaled submatrix F_S Z_S is
    recorded against each selected user.
    """
    f_diag = np.asarray(f_diag, dtype=float)
    p_star = np.asarray(p_star, dtype=float)
    Ka = f_diag.size
    if p_star.shape != (Ka,):
        raise ValueError("p_star and f_diag must have equal length")
    if Ka > M:
        raise IndexError(f"need K <= M, got K={Ka}, M={M}")
    tasks = [(tuple(f_diag), tuple(p_star), M, seed, start, count)
             for start, count in _chunk_tasks(samples)]
    if workers <= 1 or len(tasks) == 1:
        parts = [_weighted_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_weighted_chunk, tasks))
    cnt = np.zeros((Ka, Ka), dtype=np.int64)
    s1 = np.zeros((Ka, Ka))
    s2 = np.zeros((Ka, Ka))
    singular = 0
    for c, a, b, s in parts:  # fixed chunk order keeps sums bit-exact
        cnt += c
        s1 += a
        s2 += b
        singular += s
    if singular > SINGULAR_FRACTION_LIMIT * samples:
        raise ExcessSingularDrawsError(
            f"{singular}/{samples} singular draws exceeds the 0.1% budget")
    used = samples - singular
    with np.errstate(all="ignore"):
        frac = cnt / used
        mean = np.where(cnt > 0, s1 / np.maximum(cnt, 1), np.nan)
        var = np.where(cnt > 0, s2 / np.maximum(cnt, 1) - mean * mean, np.nan)
        var = np.where(cnt > 0, np.maximum(var, 0.0), np.nan)
        se_mean = np.sqrt(var / np.maximum(cnt, 1))
        se_var = var * np.sqrt(2.0 / np.maximum(cnt, 1))
    return WeightedPhiStats(samples=samples, singular_events=singular,
                            count=cnt, frac=frac, mean=mean, variance=var,
                            se_mean=se_mean, se_variance=se_var)


# ---------------------------------------------------------------------------
# Persistent cache
# ---------------------------------------------------------------------------

class MomentCache:
    """In-memory moment store with optional plain-text persistence.

    File format: a version header line followed by one comma-delimited
    record per key, columns

        kind,M,K,N,fingerprint,samples,seed,mean,variance,std_error_of_mean,singular_events

    Floats are written with repr so reloaded estimates are bit-identical.
    """

    VERSION = "tddmimo-moments-cache v1"

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._store: dict[MomentKey, MomentEstimate] = {}
        self.hits = 0
        self.misses = 0
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        try:
            lines = self.path.read_text().splitlines()
        except OSError as exc:
            warnings.warn(f"moment cache unreadable, recomputing: {exc}")
            return
        if not lines or lines[0].strip() != self.VERSION:
            warnings.warn(f"unrecognized cache version in {self.path}; ignoring file")
            return
        for line in lines[1:]:
            if not line.strip():
                continue
            kind, m, k, n, fp, samples, seed, mean, var, se, sing = line.split(",")
            key = MomentKey(kind, int(m), int(k), int(n), fp, int(samples), int(seed))
            self._store[key] = MomentEstimate(float(mean), float(var), float(se),
                                              int(samples), int(sing))

    def _append(self, key: MomentKey, est: MomentEstimate):
        if self.path is None:
            return
        line = ",".join([key.kind, str(key.M), str(key.K), str(key.N),
                         key.fingerprint, str(key.samples), str(key.seed),
                         repr(float(est.mean)), repr(float(est.variance)),
                         repr(float(est.std_error_of_mean)), str(est.singular_events)])
        try:
            fresh = not self.path.exists()
            with open(self.path, "a") as fh:
                if fresh:
                    fh.write(self.VERSION + "\n")
                fh.write(line + "\n")
        except OSError as exc:
            warnings.warn(f"moment cache not writable: {exc}")

    def cached(self, key: MomentKey, compute) -> MomentEstimate:
        """Return the stored estimate for key, computing and storing on miss."""
        if key in self._store:
            self.hits += 1
            return self._store[key]
        self.misses += 1
        est = compute()
        self._store[key] = est
        self._append(key, est)
        return est

    def __len__(self):
        return len(self._store)
