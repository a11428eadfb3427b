"""Backend selection for the symmetric-form contraction kernels.

The compiled extension is used when it was built; setting
``BIFJET_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
contract = _kernels_py.contract
contract_free = _kernels_py.contract_free

if not os.environ.get("BIFJET_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        _ckernels = None
    if _ckernels is not None:
        BACKEND = "compiled"
        contract = _ckernels.contract
        contract_free = _ckernels.contract_free


def backends():
    """Map of available backend names to their (contract, contract_free) pair."""
    out = {"python": (_kernels_py.contract, _kernels_py.contract_free)}
    try:
        from . import _ckernels as ck
    except ImportError:
        return out
    out["compiled"] = (ck.contract, ck.contract_free)
    return out
