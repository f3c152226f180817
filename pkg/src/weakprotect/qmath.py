"""Fixed-size complex linear algebra, Bloch-sphere states and Haar sampling.

Operators are plain ``numpy`` arrays of shape (2, 2) or (4, 4) with dtype
complex128. Random streams are Philox generators whose counter is offset by a
stream index, so stream ``k`` for a given seed is the same no matter which
worker draws it or in which order.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

ALGEBRA_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)


def as_mat2(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def adjoint(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two 2x2 operators.

    Entry ``(2*i + k, 2*j + l)`` of the result is ``a[i, j] * b[k, l]``.
    """
    return np.kron(as_mat2(a), as_mat2(b))


def swap_operator() -> np.ndarray:
    """4x4 permutation exchanging the two qubit factors."""
    p = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            p[2 * j + i, 2 * i + j] = 1.0
    return p


def is_unitary(u: np.ndarray, tol: float = 1e-9) -> bool:
    u = np.asarray(u)
    return bool(np.linalg.norm(adjoint(u) @ u - np.eye(u.shape[0]), 2) <= tol)


@dataclass(frozen=True)
class PureQubit:
    """Pure qubit state ``cos(alpha/2)|0> + exp(i beta) sin(alpha/2)|1>``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= np.pi:
            raise ValueError(f"alpha must lie in [0, pi], got {self.alpha}")
        beta = float(np.mod(self.beta, 2 * np.pi))
        object.__setattr__(self, "beta", 0.0 if beta >= 2 * np.pi else beta)

    @classmethod
    def from_amplitudes(cls, v) -> "PureQubit":
        v = np.asarray(v, dtype=complex)
        v = v / np.linalg.norm(v)
        a0, a1 = v
        # global phase is chosen so the |0> amplitude is real and non-negative
        alpha = 2.0 * np.arctan2(abs(a1), abs(a0))
        beta = 0.0 if abs(a1) < 1e-15 else np.angle(a1) - (np.angle(a0) if abs(a0) > 1e-15 else 0.0)
        return cls(float(min(max(alpha, 0.0), np.pi)), float(beta))

    @classmethod
    def from_bloch(cls, r) -> "PureQubit":
        x, y, z = np.asarray(r, dtype=float) / np.linalg.norm(r)
        return cls(float(np.arccos(np.clip(z, -1.0, 1.0))), float(np.arctan2(y, x)))

    @cached_property
    def amplitudes(self) -> np.ndarray:
        return np.array(
            [np.cos(self.alpha / 2), np.exp(1j * self.beta) * np.sin(self.alpha / 2)],
            dtype=complex,
        )

    @property
    def projector(self) -> np.ndarray:
        v = self.amplitudes
        return np.outer(v, np.conj(v))

    @property
    def bloch(self) -> np.ndarray:
        return np.array([
            np.sin(self.alpha) * np.cos(self.beta),
            np.sin(self.alpha) * np.sin(self.beta),
            np.cos(self.alpha),
        ])


def check_density_matrix(rho, tol: float = ALGEBRA_TOL) -> np.ndarray:
    """Validate a qubit density matrix and return it as a complex array."""
    rho = as_mat2(rho)
    if np.max(np.abs(rho - adjoint(rho))) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def bloch_to_density(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return 0.5 * (I2 + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z)


def density_to_bloch(rho) -> np.ndarray:
    return np.array([np.trace(rho @ s).real for s in PAULIS])


def state_fidelity(psi: PureQubit, rho) -> float:
    """Overlap ``<psi|rho|psi>`` of a pure state with a density matrix, in [0, 1]."""
    rho = as_mat2(rho)
    if np.max(np.abs(rho - adjoint(rho))) > ALGEBRA_TOL:
        raise ValueError("rho is not Hermitian")
    v = psi.amplitudes
    f = (np.conj(v) @ rho @ v).real
    return float(min(max(f, 0.0), 1.0))


def sample_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent random stream number ``stream`` derived from ``seed``.

    The stream index occupies the top word of the Philox counter, so streams
    never overlap for fewer than 2**192 draws each.
    """
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    bitgen = np.random.Philox(key=seed, counter=[0, 0, 0, stream])
    return np.random.Generator(bitgen)


def haar_angles(rng: np.random.Generator, n: int):
    """Draw ``n`` uniform Bloch-sphere points as arrays (cos(alpha), beta)."""
    u = rng.random((2, n))
    return 1.0 - 2.0 * u[0], 2.0 * np.pi * u[1]


def haar_sample(rng: np.random.Generator) -> PureQubit:
    cos_alpha, beta = haar_angles(rng, 1)
    return PureQubit(float(np.arccos(np.clip(cos_alpha[0], -1.0, 1.0))), float(beta[0]))
