"""Coupled dictionary learning and X-ray mixture separation.

Thin python surface over the C++ core: training (plain and crack-masked),
modified OMP, basis-pursuit separation, patch/pyramid plumbing, PGM/matrix
storage, and the synthetic benchmarks.
"""

try:
    # installed layout: the extension lives inside the package
    from ._xsep import *  # noqa: F401,F403
    from . import _xsep as _impl
except ImportError:
    # in-tree layout: the extension sits on sys.path next to the build
    from _xsep import *  # noqa: F401,F403
    import _xsep as _impl

__version__ = "0.1.0"
__all__ = [name for name in dir(_impl) if not name.startswith("_")]
del _impl
