"""Weak-measurement protection of qubit channels with a pure invariant state."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    CanonicalParams,
    KrausChannel,
    canonicalize,
    channels_equal,
    choi,
    conjugate,
    fixed_points,
    from_canonical,
    validate,
)
from .fidelity import avg_fidelity_exact, avg_fidelity_mc, avg_success_exact, delta_fidelity_closed  # noqa: E402
from .optimizer import optimize, q_opt_closed, q_opt_numeric, sweep  # noqa: E402
from .protocol import WeakParams, compose, generalized_protocol  # noqa: E402
