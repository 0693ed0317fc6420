"""Hot tree kernels: compiled extension when available, numpy otherwise.

Set ``PHYSIOFUSE_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("PHYSIOFUSE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

best_split_gini = _impl.best_split_gini
best_split_gain = _impl.best_split_gain
apply_tree = _impl.apply_tree
tree_shap = _impl.tree_shap


def compiled_module():
    """The compiled kernel module, or None when it has not been built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


__all__ = ["BACKEND", "best_split_gini", "best_split_gain", "apply_tree", "tree_shap",
           "compiled_module"]
