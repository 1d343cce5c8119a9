"""Network assembly: embedding -> (PCS || BSS) -> SMG -> classifier head.

The computation graph is fixed; forward returns a tape and the backward
composes the block backward passes into exact gradients for every
parameter, checked against finite differences in the tests.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict

import numpy as np

from . import tree
from .blocks import (GateEncoderParams, bss_backward, bss_forward,
                     init_gate_params, mixture_gate, mixture_gate_backward,
                     pcs_backward, pcs_forward)
from .errors import ConfigError, ContractError, FormatError
from .ssm import SsmParams, init_ssm_params

CHECKPOINT_MAGIC = b"S2MCKPT1"


@dataclass
class ModelConfig:
    patch: int = 7
    bands: int = 200
    latent: int = 64
    state: int = 16
    layers: int = 1
    classes: int = 16
    tau: float = 0.1
    use_pcs: bool = True
    use_bss: bool = True
    use_smg: bool = True
    readout: str = "center"          # "center" or "mean"
    share_route_params: bool = False

    def validate(self):
        if self.patch < 1 or self.patch % 2 == 0:
            raise ConfigError(f"patch size must be odd, got {self.patch}")
        if min(self.latent, self.state, self.classes, self.layers) < 1:
            raise ConfigError("latent/state/classes/layers must be >= 1")
        if not 0.0 <= self.tau < 0.5:
            raise ConfigError(f"tau must lie in [0, 0.5), got {self.tau}")
        if self.readout not in ("center", "mean"):
            raise ConfigError(f"unknown readout {self.readout!r}")


@dataclass
class LayerParams:
    pcs: list   # SsmParams per spatial route (1 when shared)
    bss: list   # SsmParams per spectral direction
    gate: GateEncoderParams


@dataclass
class ModelParams:
    embed_w: np.ndarray  # (K, D) -- the 1x1 convolution as an affine map
    embed_b: np.ndarray  # (D,)
    layers: list         # LayerParams
    head_w: np.ndarray   # (D, C)
    head_b: np.ndarray   # (C,)


def init_params(config: ModelConfig, seed=0, sigma=0.01,
                dtype=np.float32) -> ModelParams:
    """Weights ~ Normal(0, sigma^2) from one seeded generator, biases 0."""
    config.validate()
    rng = np.random.default_rng(seed)
    K, D, N = config.bands, config.latent, config.state
    spatial_routes = 1 if config.share_route_params else 4
    spectral_dirs = 1 if config.share_route_params else 2
    spectral_channels = config.patch * config.patch
    layers = []
    for _ in range(config.layers):
        layers.append(LayerParams(
            pcs=[init_ssm_params(D, N, rng, sigma, dtype=dtype)
                 for _ in range(spatial_routes)],
            bss=[init_ssm_params(spectral_channels, N, rng, sigma,
                                 dtype=dtype)
                 for _ in range(spectral_dirs)],
            gate=init_gate_params(D, rng, sigma, dtype=dtype),
        ))
    return ModelParams(
        embed_w=rng.normal(0.0, sigma, size=(K, D)).astype(dtype),
        embed_b=np.zeros(D, dtype=dtype),
        layers=layers,
        head_w=rng.normal(0.0, sigma, size=(D, config.classes)).astype(dtype),
        head_b=np.zeros(config.classes, dtype=dtype),
    )


def count_params(params: ModelParams) -> int:
    return tree.num_params(params)


@dataclass
class LayerTape:
    pcs_tape: object
    bss_tape: object
    smg_tape: object
    E_in: np.ndarray
    Y: np.ndarray
    Pf: np.ndarray


@dataclass
class ModelTape:
    patch: np.ndarray
    E0: np.ndarray
    layer_tapes: list
    feat: np.ndarray
    config: ModelConfig
    params: ModelParams


def model_forward(patch, params: ModelParams, config: ModelConfig):
    """Logits (C,) for one P x P x K patch, plus the backward tape."""
    P = config.patch
    if patch.shape != (P, P, config.bands):
        raise ConfigError(
            f"patch shape {patch.shape} does not match config "
            f"({P}, {P}, {config.bands})")
    dtype = params.embed_w.dtype
    patch = np.asarray(patch, dtype=dtype)
    E = patch @ params.embed_w + params.embed_b
    E0 = E
    layer_tapes = []
    for lp in params.layers:
        Y = Pf = None
        pcs_tape = bss_tape = smg_tape = None
        if config.use_pcs:
            Y, pcs_tape = pcs_forward(E, lp.pcs)
        if config.use_bss:
            Pf, bss_tape = bss_forward(E, lp.bss)
        if Y is not None and Pf is not None:
            if config.use_smg:
                out, _, smg_tape = mixture_gate(Y, Pf, lp.gate, config.tau)
            else:
                out = Y + Pf
        elif Y is not None:
            out = Y
        elif Pf is not None:
            out = Pf
        else:
            out = E
        layer_tapes.append(LayerTape(pcs_tape, bss_tape, smg_tape, E, Y, Pf))
        E = out
    if config.readout == "center":
        feat = E[P // 2, P // 2]
    else:
        feat = E.reshape(P * P, -1).mean(axis=0)
    logits = feat @ params.head_w + params.head_b
    return logits, ModelTape(patch, E0, layer_tapes, feat, config, params)


def model_backward(tape: ModelTape, upstream):
    """Gradients of <upstream, logits> for every parameter (ModelParams
    shape) plus the gradient wrt the input patch."""
    config = tape.config
    params = tape.params
    upstream = np.asarray(upstream, dtype=params.embed_w.dtype)
    if upstream.shape != (config.classes,):
        raise ContractError(
            f"upstream shape {upstream.shape} != ({config.classes},)")
    P = config.patch
    g_head_w = np.outer(tape.feat, upstream)
    g_head_b = upstream.copy()
    g_feat = params.head_w @ upstream
    D = params.embed_w.shape[1]
    gE = np.zeros((P, P, D), dtype=params.embed_w.dtype)
    if config.readout == "center":
        gE[P // 2, P // 2] = g_feat
    else:
        gE[:, :] = g_feat / (P * P)

    g_layers = []
    for lt, lp in zip(reversed(tape.layer_tapes), reversed(params.layers)):
        n_pcs, n_bss = len(lp.pcs), len(lp.bss)
        gY = gPf = None
        g_gate = tree.zeros_like(lp.gate)
        if lt.Y is not None and lt.Pf is not None:
            if config.use_smg:
                gY, gPf, g_gate = mixture_gate_backward(lt.smg_tape, gE)
            else:
                gY, gPf = gE, gE
        elif lt.Y is not None:
            gY = gE
        elif lt.Pf is not None:
            gPf = gE
        gE_next = np.zeros_like(gE)
        g_pcs = [tree.zeros_like(p) for p in lp.pcs]
        g_bss = [tree.zeros_like(p) for p in lp.bss]
        if gY is not None:
            gE_pcs, g_pcs = pcs_backward(lt.pcs_tape, gY, n_params=n_pcs)
            gE_next += gE_pcs
        if gPf is not None:
            gE_bss, g_bss = bss_backward(lt.bss_tape, gPf, n_params=n_bss)
            gE_next += gE_bss
        if gY is None and gPf is None:
            gE_next = gE
        g_layers.append(LayerParams(pcs=g_pcs, bss=g_bss, gate=g_gate))
        gE = gE_next

    g_layers.reverse()
    flat_patch = tape.patch.reshape(-1, config.bands)
    flat_gE = gE.reshape(-1, params.embed_w.shape[1])
    g_embed_w = flat_patch.T @ flat_gE
    g_embed_b = flat_gE.sum(axis=0)
    g_patch = (flat_gE @ params.embed_w.T).reshape(tape.patch.shape)
    grads = ModelParams(embed_w=g_embed_w, embed_b=g_embed_b,
                        layers=g_layers, head_w=g_head_w, head_b=g_head_b)
    return grads, g_patch


# ---------------------------------------------------------------------------
# checkpoint IO


def save_checkpoint(path, config: ModelConfig, params: ModelParams):
    """Magic, length-prefixed JSON config, then every tensor in declaration
    order as float32 little-endian with u32 dim headers."""
    doc = json.dumps(asdict(config)).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(doc)))
        fh.write(doc)
        for _, arr in tree.iter_arrays(params):
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path, dtype=np.float32):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"bad checkpoint magic {magic!r}")
        (doc_len,) = struct.unpack("<I", fh.read(4))
        config = ModelConfig(**json.loads(fh.read(doc_len).decode("utf-8")))
        params = init_params(config, seed=0, dtype=dtype)
        for name, arr in tree.iter_arrays(params):
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            if shape != arr.shape:
                raise FormatError(
                    f"checkpoint tensor {name} has shape {shape}, "
                    f"expected {arr.shape}")
            raw = fh.read(4 * int(np.prod(shape, dtype=np.int64)))
            arr[...] = np.frombuffer(raw, dtype="<f4").reshape(shape)
    return config, params
