"""Hot kernels: compiled Cython core when built, numpy fallback otherwise.

Set ``ENESIM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("ENESIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback

stencil_apply = _impl.stencil_apply
dic_factor = _impl.dic_factor
dic_solve = _impl.dic_solve
sor_redblack = _impl.sor_redblack


def implementation(name):
    """Kernel module by backend name ("cython" or "python")."""
    if name == "python":
        return _fallback
    from . import _core

    return _core


__all__ = ["BACKEND", "stencil_apply", "dic_factor", "dic_solve", "sor_redblack", "implementation"]
