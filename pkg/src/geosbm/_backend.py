"""Select the compiled kernels when importable, the numpy fallback otherwise.

Set ``GEOSBM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
gaussian_kernel = _fallback.gaussian_kernel
bernoulli_fill = _fallback.bernoulli_fill
secular_sums = _fallback.secular_sums

if os.environ.get("GEOSBM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        gaussian_kernel = _kernels.gaussian_kernel
        bernoulli_fill = _kernels.bernoulli_fill
        secular_sums = _kernels.secular_sums
