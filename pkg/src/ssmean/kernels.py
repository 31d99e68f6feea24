"""Backend selection for the hot PAVA kernel.

The compiled extension is preferred when importable; set the environment
variable SSMEAN_PURE_PYTHON=1 to force the pure-Python fallback (used by the
benchmark and the backend-equivalence tests). Both backends implement the
identical arithmetic, so fitted values agree bit for bit.
"""
import os

if os.environ.get("SSMEAN_PURE_PYTHON"):
    from ._pava_py import pava

    PAVA_BACKEND = "python"
else:
    try:
        from ._pava import pava

        PAVA_BACKEND = "compiled"
    except ImportError:
        from ._pava_py import pava

        PAVA_BACKEND = "python"

__all__ = ["pava", "PAVA_BACKEND"]
