"""Selects the compiled classical kernels when built, else the pure-Python ones.

Set WIGNERCHAOS_PURE=1 to force the fallback.
"""
import os

BACKEND = "python"
if os.environ.get("WIGNERCHAOS_PURE", "") not in ("1", "true", "yes"):
    try:
        from ._ccore import benettin, tangent_trajectory, verlet_trajectory  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        pass
if BACKEND == "python":
    from ._pycore import benettin, tangent_trajectory, verlet_trajectory  # noqa: F401

__all__ = ["BACKEND", "benettin", "tangent_trajectory", "verlet_trajectory"]
