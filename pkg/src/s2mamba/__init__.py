"""Spatial-spectral selective state space model for hyperspectral image
classification."""

from .data import (Manifest, Patch, SceneCube, SplitSpec, extract_patch,
                   load_manifest, load_scene, make_split, normalize_bands,
                   save_manifest, synthetic_scene, write_cube, write_labels)
from .model import (ModelConfig, ModelParams, count_params, init_params,
                    load_checkpoint, model_backward, model_forward,
                    save_checkpoint)
from .ssm import (SsmParams, chunked_scan, discretize,
                  generate_selective_params, selective_scan,
                  selective_scan_backward)
from .blocks import (GateEncoderParams, RouteSet, bss_forward,
                     gate_encoder, generate_cross_routes, mixture_gate,
                     pcs_forward)
from .train import (AdamW, TrainConfig, cross_entropy, evaluate,
                    lr_at_epoch, metrics_from_confusion, render_class_map,
                    train)

__version__ = "0.1.0"
