"""Backend selection for the union-find kernels.

The compiled extension is used when it was built; otherwise, or when
``WSOLEVAL_PURE_PYTHON=1`` is set, the pure-Python versions are used.
"""

import os

from . import _pykernels

if os.environ.get("WSOLEVAL_PURE_PYTHON") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"
    else:
        BACKEND = "cython"

label_components = _impl.label_components
sweep_best_iou = _impl.sweep_best_iou
felzenszwalb_merge = _impl.felzenszwalb_merge

__all__ = ["BACKEND", "label_components", "sweep_best_iou", "felzenszwalb_merge"]
