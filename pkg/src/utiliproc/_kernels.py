"""Select the compiled multiset kernels when built, else the pure-Python ones.

Set ``UTILIPROC_PURE=1`` to force the fallback.
"""
import os

BACKEND = "python"

if os.environ.get("UTILIPROC_PURE") != "1":
    try:
        from ._core import add_within, split_pairs, sub_if_contained, submultisets

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

if BACKEND == "python":
    from ._core_py import add_within, split_pairs, sub_if_contained, submultisets

__all__ = ["BACKEND", "add_within", "split_pairs", "sub_if_contained", "submultisets"]
