"""Selects the term-arithmetic kernel at import time.

Preference order: the compiled extension if it built, otherwise the pure
Python implementation. Set ALGEBROIDS_PURE_KERNEL=1 to force the pure kernel
(used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("ALGEBROIDS_PURE_KERNEL") == "1":
    from algebroids import _termops_py as _impl

    BACKEND = "python"
else:
    try:
        from algebroids import _termops as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from algebroids import _termops_py as _impl

        BACKEND = "python"

add_terms = _impl.add_terms
sub_terms = _impl.sub_terms
scale_terms = _impl.scale_terms
mul_terms = _impl.mul_terms
