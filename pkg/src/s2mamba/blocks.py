"""The three building blocks of the network.

- patch cross scanning (PCS): four directional flatten/scan/unflatten passes
  over the spatial grid, fused by summation;
- bi-directional spectral scanning (BSS): forward and reversed scans along
  the channel axis with the spatial positions as the per-step feature;
- spatial-spectral mixture gate (SMG): per-position two-way softmax over
  encoder logits of both branches, with threshold pruning.

Every forward returns a tape; the matching backward composes the scan
backward passes into exact gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import ConfigError
from .ssm import SsmParams, selective_scan, selective_scan_backward

SQRT2 = np.sqrt(2.0)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------------------
# scan routes over the patch grid


@dataclass
class RouteSet:
    """Four permutations of the flattened P*P grid plus their inverses."""

    perms: list
    inverses: list


def generate_cross_routes(side: int) -> RouteSet:
    """Row-major raster, its reversal, column-major raster, its reversal."""
    if side < 1:
        raise ConfigError("patch side must be >= 1")
    n = side * side
    row_major = np.arange(n)
    col_major = np.arange(n).reshape(side, side).T.reshape(n)
    perms = [row_major, row_major[::-1].copy(),
             col_major, col_major[::-1].copy()]
    inverses = [np.argsort(p, kind="stable") for p in perms]
    return RouteSet(perms=perms, inverses=inverses)


# ---------------------------------------------------------------------------
# patch cross scanning


@dataclass
class PcsTape:
    routes: RouteSet
    scan_tapes: list
    shape: tuple


def pcs_forward(E, params):
    """Scan the patch along four routes and sum the unflattened outputs.

    E is (P, P, D); params is a sequence of SsmParams, one per route (a
    shorter sequence is cycled, which is how parameter sharing is done).
    """
    P, _, D = E.shape
    routes = generate_cross_routes(P)
    flat = E.reshape(P * P, D)
    out = np.zeros_like(flat)
    tapes = []
    for i in range(4):
        p = params[i % len(params)]
        y, tape = selective_scan(flat[routes.perms[i]], p)
        out += y[routes.inverses[i]]
        tapes.append(tape)
    return out.reshape(E.shape), PcsTape(routes, tapes, E.shape)


def pcs_backward(tape: PcsTape, upstream, n_params=4):
    """Gradient wrt E and per-route parameter gradients (list of length
    n_params; route grads fold onto index i % n_params)."""
    P, _, D = tape.shape
    g_flat_out = upstream.reshape(P * P, D)
    gE = np.zeros_like(g_flat_out)
    g_params = [None] * n_params
    for i in range(4):
        gy = g_flat_out[tape.routes.perms[i]]
        gseq, gp = selective_scan_backward(tape.scan_tapes[i], gy)
        gE += gseq[tape.routes.inverses[i]]
        j = i % n_params
        if g_params[j] is None:
            g_params[j] = gp
        else:
            from . import tree
            tree.add_in_place(g_params[j], gp)
    return gE.reshape(tape.shape), g_params


# ---------------------------------------------------------------------------
# bi-directional spectral scanning


@dataclass
class BssTape:
    scan_tapes: list
    shape: tuple


def bss_forward(E, params):
    """Scan along the channel axis in both directions and sum.

    The sequence has one step per channel; the per-step feature is the
    flattened P*P spatial vector. params has one SsmParams per direction
    (cycled when shorter), each sized for P*P channels.
    """
    P, _, D = E.shape
    seq = E.reshape(P * P, D).T          # (D, P*P)
    y_fwd, t_fwd = selective_scan(seq, params[0])
    y_bwd, t_bwd = selective_scan(seq[::-1], params[1 % len(params)])
    out = y_fwd + y_bwd[::-1]
    return np.ascontiguousarray(out.T).reshape(E.shape), \
        BssTape([t_fwd, t_bwd], E.shape)


def bss_backward(tape: BssTape, upstream, n_params=2):
    P, _, D = tape.shape
    g_out = upstream.reshape(P * P, D).T
    g_fwd, gp_fwd = selective_scan_backward(tape.scan_tapes[0], g_out)
    g_bwd, gp_bwd = selective_scan_backward(tape.scan_tapes[1],
                                            g_out[::-1])
    gseq = g_fwd + g_bwd[::-1]
    g_params = [gp_fwd, gp_bwd]
    if n_params == 1:
        from . import tree
        tree.add_in_place(gp_fwd, gp_bwd)
        g_params = [gp_fwd]
    gE = np.ascontiguousarray(gseq.T).reshape(tape.shape)
    return gE, g_params


# ---------------------------------------------------------------------------
# spatial-spectral mixture gate


@dataclass
class GateEncoderParams:
    """Shared two-layer encoder mapping a D-vector to one logit."""

    w1: np.ndarray  # (D, Dh)
    b1: np.ndarray  # (Dh,)
    w2: np.ndarray  # (Dh,)
    b2: np.ndarray  # scalar, shape (1,)


def init_gate_params(latent, rng, sigma=0.01, dtype=np.float64):
    hidden = max(1, latent // 2)
    return GateEncoderParams(
        w1=rng.normal(0.0, sigma, size=(latent, hidden)).astype(dtype),
        b1=np.zeros(hidden, dtype=dtype),
        w2=rng.normal(0.0, sigma, size=hidden).astype(dtype),
        b2=np.zeros(1, dtype=dtype),
    )


def gelu(z):
    """Exact Gaussian-CDF form."""
    return 0.5 * z * (1.0 + erf(z / SQRT2))


def _gelu_grad(z):
    phi = INV_SQRT_2PI * np.exp(-0.5 * z * z)
    return 0.5 * (1.0 + erf(z / SQRT2)) + z * phi


def gate_encoder(feat, theta: GateEncoderParams):
    """Position-wise logits: w2 . GELU(w1^T f + b1) + b2, shaped (P, P)."""
    P = feat.shape[0]
    flat = feat.reshape(P * P, -1)
    z = flat @ theta.w1 + theta.b1
    logits = gelu(z) @ theta.w2 + theta.b2[0]
    return logits.reshape(P, P)


def _gate_encoder_backward(feat, theta, g_logits):
    P = feat.shape[0]
    flat = feat.reshape(P * P, -1)
    z = flat @ theta.w1 + theta.b1
    g = g_logits.reshape(P * P)
    ga = np.outer(g, theta.w2)
    g_w2 = gelu(z).T @ g
    gz = ga * _gelu_grad(z)
    g_theta = GateEncoderParams(
        w1=flat.T @ gz,
        b1=gz.sum(axis=0),
        w2=g_w2,
        b2=np.array([g.sum()], dtype=flat.dtype),
    )
    g_feat = (gz @ theta.w1.T).reshape(feat.shape)
    return g_feat, g_theta


@dataclass
class GateWeights:
    m0: np.ndarray
    m1: np.ndarray
    tau: float


@dataclass
class SmgTape:
    Y: np.ndarray
    Pfeat: np.ndarray
    theta: GateEncoderParams
    weights: GateWeights
    mask0: np.ndarray
    mask1: np.ndarray


def mixture_gate(Y, Pfeat, theta: GateEncoderParams, tau: float):
    """Competitive fusion of the two branches.

    Per position, a two-way softmax over the shared encoder's logits gives
    weights (m0, m1); a branch whose weight is <= tau is pruned outright
    (strict indicator: a weight exactly at tau is pruned).
    """
    if not 0.0 <= tau < 0.5:
        raise ConfigError("tau must lie in [0, 0.5) so at most one branch "
                          "can be pruned per position")
    l0 = gate_encoder(Y, theta)
    l1 = gate_encoder(Pfeat, theta)
    # two-way softmax via the stable sigmoid of the logit difference
    m0 = 1.0 / (1.0 + np.exp(-(l0 - l1)))
    m1 = 1.0 - m0
    mask0 = m0 > tau
    mask1 = m1 > tau
    w0 = np.where(mask0, m0, 0.0)
    w1 = np.where(mask1, m1, 0.0)
    F = w0[:, :, None] * Y + w1[:, :, None] * Pfeat
    weights = GateWeights(m0=m0, m1=m1, tau=tau)
    return F, weights, SmgTape(Y, Pfeat, theta, weights, mask0, mask1)


def mixture_gate_backward(tape: SmgTape, upstream):
    """Gradients wrt Y, Pfeat and theta.

    The pruning indicator is treated as a constant mask: a pruned branch
    receives no gradient through its weight, while the softmax itself still
    gets gradient from the surviving branch.
    """
    m0, m1 = tape.weights.m0, tape.weights.m1
    w0 = np.where(tape.mask0, m0, 0.0)
    w1 = np.where(tape.mask1, m1, 0.0)
    gY = w0[:, :, None] * upstream
    gP = w1[:, :, None] * upstream
    gm0 = np.where(tape.mask0, np.sum(upstream * tape.Y, axis=2), 0.0)
    gm1 = np.where(tape.mask1, np.sum(upstream * tape.Pfeat, axis=2), 0.0)
    # m0 = sigmoid(l0 - l1): d m0/d(l0-l1) = m0*m1
    g_diff = (gm0 - gm1) * m0 * m1
    gY2, g_theta0 = _gate_encoder_backward(tape.Y, tape.theta, g_diff)
    gP2, g_theta1 = _gate_encoder_backward(tape.Pfeat, tape.theta, -g_diff)
    gY += gY2
    gP += gP2
    g_theta = GateEncoderParams(
        w1=g_theta0.w1 + g_theta1.w1,
        b1=g_theta0.b1 + g_theta1.b1,
        w2=g_theta0.w2 + g_theta1.w2,
        b2=g_theta0.b2 + g_theta1.b2,
    )
    return gY, gP, g_theta
