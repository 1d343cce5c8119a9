"""Backend selection for the scan kernels.

The compiled extension is preferred when it imported cleanly; setting the
environment variable ``S2MAMBA_PURE_PYTHON=1`` forces the numpy fallback.
Both backends implement the identical contract (see ``_scan_py``).
"""

from __future__ import annotations

import os

from . import _scan_py

BACKEND = "python"
scan_forward = _scan_py.scan_forward
scan_backward = _scan_py.scan_backward

if os.environ.get("S2MAMBA_PURE_PYTHON", "0") != "1":
    try:
        from . import _scan_cy

        BACKEND = "cython"
        scan_forward = _scan_cy.scan_forward
        scan_backward = _scan_cy.scan_backward
    except ImportError:
        pass


def get_backend(name=None):
    """Return (scan_forward, scan_backward) for an explicit backend name."""
    if name in (None, BACKEND):
        return scan_forward, scan_backward
    if name == "python":
        return _scan_py.scan_forward, _scan_py.scan_backward
    if name == "cython":
        from . import _scan_cy

        return _scan_cy.scan_forward, _scan_cy.scan_backward
    raise ValueError(f"unknown backend {name!r}")
