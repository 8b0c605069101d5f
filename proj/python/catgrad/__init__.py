"""Communication-aware gradient compression."""

import json as _json

from ._catgrad import (
    CatgradError,
    ConfigError,
    CorruptFrame,
    InvalidBudget,
    ParseError,
    ZeroGradient,
    alistarh_t,
    alpha,
    beta,
    cost,
    curve,
    decode_frame,
    encode_frame,
    omega,
    optimal_probabilities,
    payload_bits,
    scheme_name,
    select_t,
    sparsify_quantize,
    top_t,
)
from ._catgrad import run as _run


def run(**config):
    """Run one optimizer; keyword names follow the JSON config keys."""
    return _run(_json.dumps(config))


__all__ = [name for name in dir() if not name.startswith("_")]
