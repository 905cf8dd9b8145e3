"""Hot-loop backends: compiled extension when available, numpy otherwise.

Selection happens once at import. Set NASTYA_KERNELS=python or
NASTYA_KERNELS=compiled to force a backend (the latter raises if the
extension was not built).
"""

import os

from . import _py

_forced = os.environ.get("NASTYA_KERNELS", "").strip().lower()

if _forced == "python":
    _impl = _py
elif _forced == "compiled":
    from . import _fast as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _py

BACKEND = "python" if _impl is _py else "compiled"

quad_value_grad = _impl.quad_value_grad
quad_pass = _impl.quad_pass
logreg_value_grad = _impl.logreg_value_grad
logreg_pass = _impl.logreg_pass
rat_value_grad = _impl.rat_value_grad
rat_pass = _impl.rat_pass
