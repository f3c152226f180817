"""Pre/post weak measurements around a channel with a pure invariant state.

The kept pre-measurement element pulls the input towards the invariant state,
the kept post-measurement element undoes that bias after the channel. The
other outcomes are discarded and survive only as a lowered success
probability.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import (
    CanonicalParams,
    KrausChannel,
    canonicalize,
    from_canonical,
)
from .qmath import PureQubit, adjoint


@dataclass(frozen=True)
class WeakParams:
    p: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        for name in ("p", "q"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"measurement strength {name} must lie in [0, 1], got {v}")
            object.__setattr__(self, name, v)


def pre_measurement(p: float):
    """Elements ``(W0, W1)`` with ``W0 = |0><0| + sqrt(1-p)|1><1|`` and ``W1 = sqrt(p)|1><1|``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    w0 = np.diag([1.0, np.sqrt(1.0 - p)]).astype(complex)
    w1 = np.diag([0.0, np.sqrt(p)]).astype(complex)
    return w0, w1


def post_measurement(q: float):
    """Elements ``(R0, R1)`` with ``R0 = sqrt(1-q)|0><0| + |1><1|``.

    ``R1`` completes ``R0`` to a measurement: ``R1 = sqrt(q)|0><0|``. At
    ``q = 1`` the kept element is the projector onto |1>.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    r0 = np.diag([np.sqrt(1.0 - q), 1.0]).astype(complex)
    r1 = np.diag([np.sqrt(q), 0.0]).astype(complex)
    return r0, r1


@dataclass(frozen=True)
class ComposedChannel:
    """Post-selected channel ``B_i = R0 A_i W0`` with its parentage.

    ``frame`` is the unitary ``S`` taking the invariant state to |0>; the
    identity for channels given directly in canonical form.
    """

    inner: KrausChannel
    weak: WeakParams
    base: CanonicalParams
    frame: Optional[np.ndarray] = None

    @property
    def kraus(self):
        return self.inner.kraus

    @property
    def gram(self) -> np.ndarray:
        return self.inner.gram


def compose(base: CanonicalParams, weak: WeakParams) -> ComposedChannel:
    w0, _ = pre_measurement(weak.p)
    r0, _ = post_measurement(weak.q)
    ops = [r0 @ a @ w0 for a in from_canonical(base).kraus]
    return ComposedChannel(KrausChannel(ops, subnormalized=True), weak, base)


def success_probability(c: ComposedChannel, psi: PureQubit) -> float:
    """Probability that ``psi`` survives both kept measurement outcomes."""
    v = psi.amplitudes
    return float(sum(np.vdot(b @ v, b @ v).real for b in c.kraus))


def generalized_protocol(base_channel: KrausChannel, weak: WeakParams) -> ComposedChannel:
    """Protect a channel whose invariant state is an arbitrary ``|lam>``.

    The measurements are the canonical ones expressed in the ``{|lam>, |lam_perp>}``
    basis, ``W0' = S^+ W0 S`` and ``R0' = S^+ R0 S`` with ``S|lam> = |0>``.
    """
    canon = canonicalize(base_channel)
    s = canon.s
    w0, _ = pre_measurement(weak.p)
    r0, _ = post_measurement(weak.q)
    w0 = adjoint(s) @ w0 @ s
    r0 = adjoint(s) @ r0 @ s
    ops = [r0 @ k @ w0 for k in base_channel.kraus]
    return ComposedChannel(KrausChannel(ops, subnormalized=True), weak, canon.params, s)
