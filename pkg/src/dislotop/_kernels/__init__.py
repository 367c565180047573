"""Kernel backend selection: compiled Cython core if available, else the
pure-Python twin. Set DISLOTOP_PURE_PY=1 to force the fallback."""
import os

if os.environ.get("DISLOTOP_PURE_PY", "") not in ("", "0"):
    from dislotop._kernels import _fallback as impl
else:
    try:
        from dislotop._kernels import _core as impl  # type: ignore[no-redef]
    except ImportError:
        from dislotop._kernels import _fallback as impl  # type: ignore[no-redef]

hill_segment = impl.hill_segment
dirac_segment = impl.dirac_segment
BACKEND = impl.BACKEND


def backend_name() -> str:
    return BACKEND
