"""Kraus channels on a qubit and the canonical family of channels fixing |0>.

The canonical family has three Kraus operators::

    A0 = [[1, 0], [0, y0]]
    A1 = cos(theta/2) [[0, x e^{-i phi/2}], [0,  y e^{i phi/2}]]
    A2 = sin(theta/2) [[0, x e^{-i phi/2}], [0, -y e^{i phi/2}]]

with ``y0**2 + x**2 + y**2 == 1``. Every qubit channel with a pure invariant
state is a unitary conjugate of one of these (up to a diagonal phase on the
output, see :func:`canonicalize`).
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .qmath import I2, KET0, PAULIS, PureQubit, adjoint, as_mat2, bloch_to_density, is_unitary

TP_TOL = 1e-9
CP_TOL = 1e-9
PURITY_TOL = 1e-6


class ChannelError(ValueError):
    pass


class NoPureInvariantState(ChannelError):
    pass


@dataclass(frozen=True)
class KrausChannel:
    """An ordered list of 2x2 Kraus operators.

    ``subnormalized`` marks post-selected channels whose operators only satisfy
    ``sum K^+ K <= I``.
    """

    kraus: tuple
    subnormalized: bool = False

    def __init__(self, kraus, subnormalized: bool = False):
        ops = tuple(as_mat2(k).copy() for k in kraus)
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        if len(ops) > 4:
            raise ChannelError(f"at most 4 Kraus operators are supported, got {len(ops)}")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)
        object.__setattr__(self, "subnormalized", bool(subnormalized))

    def __len__(self):
        return len(self.kraus)

    @property
    def stack(self) -> np.ndarray:
        return np.array(self.kraus)

    @property
    def gram(self) -> np.ndarray:
        return sum(adjoint(k) @ k for k in self.kraus)

    @property
    def tp_defect(self) -> float:
        return float(np.linalg.norm(self.gram - I2, 2))


@dataclass(frozen=True)
class CanonicalParams:
    y0: float
    x: float
    y: float
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        for name in ("y0", "x", "y", "theta", "phi"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ChannelError(f"{name} must be finite")
            object.__setattr__(self, name, float(v))
        if not -1.0 - TP_TOL <= self.y0 <= 1.0 + TP_TOL:
            raise ChannelError(f"y0 must lie in [-1, 1], got {self.y0}")
        if self.x < 0 or self.y < 0:
            raise ChannelError("x and y must be non-negative")
        defect = self.y0 ** 2 + self.x ** 2 + self.y ** 2 - 1.0
        if abs(defect) > TP_TOL:
            raise ChannelError(f"y0^2 + x^2 + y^2 - 1 = {defect:.3e} violates trace preservation")

    @classmethod
    def from_y0_xx(cls, y0: float, xx: float, theta: float = 0.0, phi: float = 0.0) -> "CanonicalParams":
        """Build from ``y0`` and ``x**2``; ``y`` is fixed by the constraint."""
        xx = min(max(xx, 0.0), 1.0)
        return cls(y0, np.sqrt(xx), np.sqrt(max(1.0 - y0 ** 2 - xx, 0.0)), theta, phi)

    @property
    def xx(self) -> float:
        return self.x ** 2


@dataclass(frozen=True)
class ValidationReport:
    tp_defect: float
    cp_defect: float
    tp_ok: bool
    cp_ok: bool

    @property
    def passed(self) -> bool:
        return self.tp_ok and self.cp_ok


def choi(c: KrausChannel) -> np.ndarray:
    """Choi matrix ``sum_i (K_i x I)|W><W|(K_i x I)^+`` with ``|W> = |00> + |11>``."""
    vecs = c.stack.reshape(len(c), 4)
    return np.einsum("ki,kj->ij", vecs, np.conj(vecs))


def channels_equal(a: KrausChannel, b: KrausChannel) -> float:
    """Frobenius distance between Choi matrices; zero iff the channels coincide."""
    return float(np.linalg.norm(choi(a) - choi(b)))


def validate(c: KrausChannel, tol: float = TP_TOL) -> ValidationReport:
    tp = c.tp_defect
    cp = max(0.0, -float(np.linalg.eigvalsh(choi(c)).min()))
    tp_ok = tp <= tol or (c.subnormalized and np.linalg.eigvalsh(c.gram).max() <= 1.0 + tol)
    return ValidationReport(tp, cp, bool(tp_ok), cp <= CP_TOL)


def apply(c: KrausChannel, rho) -> np.ndarray:
    rho = as_mat2(rho)
    return sum(k @ rho @ adjoint(k) for k in c.kraus)


def from_canonical(p: CanonicalParams) -> KrausChannel:
    ch, sh = np.cos(p.theta / 2), np.sin(p.theta / 2)
    em, ep = np.exp(-0.5j * p.phi), np.exp(0.5j * p.phi)
    a0 = np.array([[1.0, 0.0], [0.0, p.y0]], dtype=complex)
    a1 = ch * np.array([[0.0, p.x * em], [0.0, p.y * ep]])
    a2 = sh * np.array([[0.0, p.x * em], [0.0, -p.y * ep]])
    return KrausChannel([a0, a1, a2])


def apply_closed_form(p: CanonicalParams, rho) -> np.ndarray:
    """Output of the canonical channel written entrywise in terms of ``rho``."""
    rho = as_mat2(rho)
    r11, r12, r21, r22 = rho[0, 0], rho[0, 1], rho[1, 0], rho[1, 1]
    cross = p.x * p.y * np.cos(p.theta)
    return np.array([
        [r11 + p.xx * r22, p.y0 * r12 + cross * np.exp(-1j * p.phi) * r22],
        [p.y0 * r21 + cross * np.exp(1j * p.phi) * r22, (1.0 - p.xx) * r22],
    ])


def bloch_map(c: KrausChannel):
    """Affine Bloch-vector action ``r -> M r + t`` of a trace-preserving channel."""
    t = np.array([0.5 * np.trace(s @ apply(c, I2)).real for s in PAULIS])
    m = np.array([[0.5 * np.trace(sj @ apply(c, sk)).real for sk in PAULIS] for sj in PAULIS])
    return m, t


@dataclass(frozen=True)
class FixedPoint:
    bloch: np.ndarray
    purity: float

    @property
    def is_pure(self) -> bool:
        return self.purity >= 1.0 - PURITY_TOL

    @property
    def state(self) -> Optional[PureQubit]:
        return PureQubit.from_bloch(self.bloch) if self.is_pure else None


@dataclass(frozen=True)
class FixedPointReport:
    """Solutions of ``(I - M) r = t`` inside the Bloch ball.

    ``kind`` is ``"unique"``, ``"axis"``, ``"plane"`` or ``"sphere"`` depending on
    the dimension of the solution set. ``points`` lists the particular solution
    followed by any pure states on the solution set.
    """

    kind: str
    points: list
    directions: np.ndarray = field(repr=False)

    @property
    def pure_states(self) -> list:
        """Pure fixed states, those nearest |0> first."""
        pure = sorted((p for p in self.points if p.is_pure), key=lambda p: -p.bloch[2])
        return [p.state for p in pure]

    @property
    def has_pure_invariant_state(self) -> bool:
        return bool(self.pure_states)

    @property
    def two_orthogonal_fixed_states(self) -> bool:
        pure = [p.bloch for p in self.points if p.is_pure]
        return any(np.dot(a, b) < -1.0 + PURITY_TOL for a in pure for b in pure)


def fixed_points(c: KrausChannel, rank_tol: float = 1e-10) -> FixedPointReport:
    """Fixed Bloch vectors of a trace-preserving channel."""
    if c.tp_defect > TP_TOL:
        raise ChannelError("fixed_points needs a trace-preserving channel")
    m, t = bloch_map(c)
    a = np.eye(3) - m
    u, s, vh = np.linalg.svd(a)
    null = s <= rank_tol
    s_inv = np.where(null, 0.0, 1.0 / np.where(null, 1.0, s))
    r0 = vh.T @ (s_inv * (u.T @ t))
    if np.linalg.norm(a @ r0 - t) > 1e-8:
        raise ChannelError("affine Bloch map has no fixed point; input is not a CPT map")
    directions = vh[null]
    kind = {0: "unique", 1: "axis", 2: "plane", 3: "sphere"}[int(null.sum())]

    points = [FixedPoint(r0, float(np.linalg.norm(r0)))]
    if kind == "axis":
        n = directions[0]
        b = np.dot(r0, n)
        disc = b * b - (np.dot(r0, r0) - 1.0)
        if disc >= 0:
            for sign in (1.0, -1.0):
                r = r0 + (-b + sign * np.sqrt(disc)) * n
                points.append(FixedPoint(r, float(np.linalg.norm(r))))
    elif kind in ("plane", "sphere") and np.linalg.norm(r0) < 1.0:
        # any direction in the solution set reaches the sphere; report the first
        n = directions[-1] if kind == "plane" else np.array([0.0, 0.0, 1.0])
        b = np.dot(r0, n)
        r = r0 + (-b + np.sqrt(b * b - np.dot(r0, r0) + 1.0)) * n
        points.append(FixedPoint(r, float(np.linalg.norm(r))))
    return FixedPointReport(kind, points, directions)


def conjugate(c: KrausChannel, s) -> KrausChannel:
    """Channel ``rho -> S E(S^+ rho S) S^+`` for a unitary ``S``."""
    s = as_mat2(s)
    if not is_unitary(s):
        raise ChannelError("conjugating matrix must be unitary")
    return KrausChannel([s @ k @ adjoint(s) for k in c.kraus], c.subnormalized)


def remix(c: KrausChannel, u) -> KrausChannel:
    """Kraus operators ``A_i = sum_j U_ij K_j``; the channel is unchanged."""
    u = np.asarray(u, dtype=complex)
    ops = list(c.kraus) + [np.zeros((2, 2), complex)] * (u.shape[1] - len(c))
    mixed = np.einsum("ij,jab->iab", u, np.array(ops))
    return KrausChannel([k for k in mixed if np.any(np.abs(k) > 0)] or [mixed[0]], c.subnormalized)


def rotation_to_zero(lam: PureQubit) -> np.ndarray:
    """Unitary ``S`` with ``S|lam> = |0>``."""
    a0, a1 = lam.amplitudes
    return np.array([[np.conj(a0), np.conj(a1)], [-a1, a0]], dtype=complex)


def _unitary_with_first_row(k: np.ndarray) -> np.ndarray:
    """Unitary ``U`` with ``U @ k = |k| e_0`` (Householder reflection)."""
    n = k.shape[0]
    norm = np.linalg.norm(k)
    phase = k[0] / abs(k[0]) if abs(k[0]) > 1e-300 else 1.0
    v = k / norm + phase * np.eye(n)[0]
    h = np.eye(n) - 2.0 * np.outer(v, np.conj(v)) / np.vdot(v, v).real
    # h @ k = -phase * |k| e_0; fold the phase into the first row
    h[0] *= -np.conj(phase)
    return h


@dataclass(frozen=True)
class Canonicalization:
    """Result of :func:`canonicalize`.

    The input channel equals ``conjugate(post_phase(from_canonical(params)), S^+)``
    where ``post_phase`` applies ``diag(1, exp(i*phase))`` after the channel.
    ``phase`` is zero whenever the input is a plain conjugate of a canonical
    channel. ``gauge`` is true when theta and phi are undetermined (x*y == 0).
    """

    params: CanonicalParams
    s: np.ndarray
    phase: float
    certificate: float
    gauge: bool
    invariant_state: PureQubit

    def reassemble(self) -> KrausChannel:
        return reassemble(self.params, self.s, self.phase)


def reassemble(params: CanonicalParams, s, phase: float = 0.0) -> KrausChannel:
    t = np.diag([1.0, np.exp(1j * phase)])
    inner = KrausChannel([t @ k for k in from_canonical(params).kraus])
    return conjugate(inner, adjoint(as_mat2(s)))


def canonicalize(c: KrausChannel, invariant: Optional[PureQubit] = None) -> Canonicalization:
    """Reduce a channel with a pure invariant state to the canonical family.

    Steps: rotate the invariant state to |0> so every Kraus operator becomes
    upper triangular; pad to four operators and remix them so the vector of
    (0, 0) entries becomes (1, 0, 0, 0); strip the phase of ``y0``; read off
    ``x = |x_vec|``, ``y = |y_vec|`` and ``conj(x_vec).y_vec = x y e^{i phi} cos(theta)``;
    rotate the remaining three operators into the two-operator canonical shape.
    """
    report = validate(c)
    if not report.passed:
        raise ChannelError(f"not a CPT map (tp_defect={report.tp_defect:.3e}, cp_defect={report.cp_defect:.3e})")
    if invariant is None:
        fp = fixed_points(c)
        if not fp.has_pure_invariant_state:
            raise NoPureInvariantState("channel has no pure invariant state")
        invariant = fp.pure_states[0]

    s = rotation_to_zero(invariant)
    ops = np.zeros((4, 2, 2), dtype=complex)
    ops[: len(c)] = [s @ k @ adjoint(s) for k in c.kraus]
    lower = np.sqrt(np.sum(np.abs(ops[:, 1, 0]) ** 2))
    if lower > 1e-6:
        raise NoPureInvariantState(f"state is not invariant (lower-left weight {lower:.3e})")
    ops[:, 1, 0] = 0.0

    k = ops[:, 0, 0]
    u = _unitary_with_first_row(k)
    ops = np.einsum("ij,jab->iab", u, ops)

    y0c = ops[0, 1, 1]
    y0 = abs(y0c) if y0c.real >= 0 else -abs(y0c)
    phase = float(np.angle(y0c / y0)) if abs(y0c) > 1e-15 else 0.0
    ops[:, 1, :] *= np.exp(-1j * phase)

    xv = ops[1:, 0, 1]
    yv = ops[1:, 1, 1]
    x, y = float(np.linalg.norm(xv)), float(np.linalg.norm(yv))
    gauge = x * y < 1e-12
    if gauge:
        theta, phi = 0.0, 0.0
    else:
        overlap = np.vdot(xv, yv) / (x * y)
        theta = float(np.arccos(min(abs(overlap), 1.0)))
        phi = float(np.mod(np.angle(overlap), 2 * np.pi)) if abs(overlap) > 1e-12 else 0.0

    # Omega maps (xv, yv) to the two-component target pair; Procrustes is exact
    # because both pairs share the same Gram matrix.
    ch, sh = np.cos(theta / 2), np.sin(theta / 2)
    xt = x * np.exp(-0.5j * phi) * np.array([ch, sh, 0.0])
    yt = y * np.exp(0.5j * phi) * np.array([ch, -sh, 0.0])
    src = np.column_stack([xv, yv])
    dst = np.column_stack([xt, yt])
    w, _, vh = np.linalg.svd(dst @ adjoint(src))
    omega = w @ vh
    ops[1:] = np.einsum("ij,jab->iab", omega, ops[1:])

    y0 = float(np.clip(y0, -1.0, 1.0))
    norm = np.sqrt(y0 ** 2 + x ** 2 + y ** 2)
    params = CanonicalParams(y0 / norm, x / norm, y / norm, theta, phi)
    cert = channels_equal(reassemble(params, s, phase), c)
    return Canonicalization(params, s, phase, cert, bool(gauge), invariant)


def identity_channel() -> KrausChannel:
    return KrausChannel([I2])


def unitary_channel(u) -> KrausChannel:
    return KrausChannel([u])


def amplitude_damping(gamma: float) -> KrausChannel:
    return KrausChannel([
        np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]]),
        np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]]),
    ])


def depolarizing(p: float) -> KrausChannel:
    ops = [np.sqrt(1.0 - 3.0 * p / 4.0) * I2] + [np.sqrt(p / 4.0) * s for s in PAULIS]
    return KrausChannel(ops)


def random_unitary(rng: np.random.Generator, n: int = 2) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_canonical(rng: np.random.Generator) -> CanonicalParams:
    v = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    return CanonicalParams(v[0], abs(v[1]), abs(v[2]), rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))


def invariant_state_residual(c: KrausChannel, lam: PureQubit) -> float:
    rho = lam.projector
    return float(np.max(np.abs(apply(c, rho) - rho)))


def is_fixed(c: KrausChannel, state: Sequence[complex] = KET0, tol: float = 1e-12) -> bool:
    v = np.asarray(state, dtype=complex)
    rho = np.outer(v, np.conj(v))
    return bool(np.max(np.abs(apply(c, rho) - rho)) <= tol)


__all__ = [
    "CanonicalParams", "Canonicalization", "ChannelError", "FixedPoint", "FixedPointReport",
    "KrausChannel", "NoPureInvariantState", "ValidationReport", "amplitude_damping", "apply",
    "apply_closed_form", "bloch_map", "bloch_to_density", "canonicalize", "channels_equal", "choi",
    "conjugate", "depolarizing", "fixed_points", "from_canonical", "identity_channel",
    "random_canonical", "random_unitary", "reassemble", "remix", "rotation_to_zero",
    "unitary_channel", "validate",
]
