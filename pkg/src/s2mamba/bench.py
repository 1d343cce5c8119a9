"""Wall-time scaling of the scan blocks vs token count.

Confirms linear complexity in the number of patch positions: the forward
cost of the four spatial routes plus the two spectral routes is fit with a
linear model over N = P*P and reported with its r^2.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .blocks import bss_forward, pcs_forward
from .ssm import init_ssm_params


def _make_block_params(side, latent, state, rng, dtype=np.float32):
    pcs = [init_ssm_params(latent, state, rng, 0.05, dtype=dtype)
           for _ in range(4)]
    bss = [init_ssm_params(side * side, state, rng, 0.05, dtype=dtype)
           for _ in range(2)]
    return pcs, bss


def time_forward(side, latent=64, state=16, repeats=3, seed=0,
                 dtype=np.float32):
    """Best-of-repeats wall time of one PCS+BSS forward at patch side P."""
    rng = np.random.default_rng(seed)
    pcs, bss = _make_block_params(side, latent, state, rng, dtype)
    E = rng.normal(0.0, 1.0, size=(side, side, latent)).astype(dtype)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        pcs_forward(E, pcs)
        bss_forward(E, bss)
        best = min(best, time.perf_counter() - t0)
    return best


def linear_fit_r2(x, y):
    """Least-squares slope/intercept of y on x and the fit's r^2."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = np.sum(resid ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return coef[0], coef[1], r2


def run_bench(sides=(8, 16, 32, 64), latent=64, state=16, repeats=3,
              seed=0):
    """Returns {tokens, seconds, slope, intercept, r2, backend}."""
    tokens = [s * s for s in sides]
    seconds = [time_forward(s, latent, state, repeats, seed) for s in sides]
    slope, intercept, r2 = linear_fit_r2(tokens, seconds)
    return {
        "backend": kernels.BACKEND,
        "sides": list(sides),
        "tokens": tokens,
        "seconds": seconds,
        "slope": slope,
        "intercept": intercept,
        "r2": r2,
    }


def compare_backends(sides=(8, 16, 32), latent=64, state=16, repeats=3,
                     seed=0):
    """Time both kernel backends on the same workload (when available)."""
    results = {}
    import s2mamba.kernels as k

    saved = (k.scan_forward, k.scan_backward, k.BACKEND)
    for name in ("python", "cython"):
        try:
            fwd, bwd = k.get_backend(name)
        except (ImportError, ValueError):
            continue
        k.scan_forward, k.scan_backward, k.BACKEND = fwd, bwd, name
        try:
            results[name] = [time_forward(s, latent, state, repeats, seed)
                             for s in sides]
        finally:
            k.scan_forward, k.scan_backward, k.BACKEND = saved
    return results
