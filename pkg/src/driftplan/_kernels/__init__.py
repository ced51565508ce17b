"""Kernel backend selection: compiled Cython core with a pure-numpy fallback.

The compiled extension is preferred when importable; set the environment
variable DRIFTPLAN_PURE_PYTHON=1 to force the fallback (useful for the
backend benchmark and for debugging).
"""

import os

from . import _py

if os.environ.get("DRIFTPLAN_PURE_PYTHON"):
    impl = _py
    BACKEND = "python"
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        impl = _py
        BACKEND = "python"
