"""Normalized average input-output fidelity and average success probability.

Three independent routes are provided: the trace formula over ``K^+ (x) K``
and the swap operator (exact), closed forms for the canonical family, and
Monte Carlo over Haar-random pure states (ratio of means with a block
jackknife error).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import CanonicalParams
from .protocol import WeakParams
from .qmath import I4, adjoint, haar_angles, sample_stream, swap_operator, tensor

DEFAULT_SEED = 20_190_611
DEFAULT_SAMPLES = 1_000_000
N_BLOCKS = 100
# below this the post-selected yield is float dust
DEN_TOL = 1e-13


class DegenerateDenominator(ZeroDivisionError):
    """Nothing survives the post-selection, so the normalized fidelity is undefined."""


@dataclass(frozen=True)
class FidelityReport:
    f_n: float
    p_success_avg: float
    method: str
    stderr: float = 0.0
    p_success_stderr: float = 0.0
    n_samples: int = 0


def _kraus_list(kraus):
    return list(getattr(kraus, "kraus", kraus))


def avg_fidelity_exact(kraus) -> FidelityReport:
    """``F_n = Tr(sum_i (K_i^+ (x) K_i)(I + P)) / (3 Tr(sum_i K_i^+ K_i))``."""
    ops = [np.asarray(k, dtype=complex) for k in _kraus_list(kraus)]
    plus = I4 + swap_operator()
    num = sum(np.trace(tensor(adjoint(k), k) @ plus) for k in ops).real
    den = sum(np.trace(adjoint(k) @ k) for k in ops).real
    if den <= DEN_TOL:
        raise DegenerateDenominator("all Kraus operators vanish")
    return FidelityReport(float(num / (3.0 * den)), float(den / 2.0), "exact-trace")


def _split(n: int, blocks: int):
    edges = np.linspace(0, n, blocks + 1).round().astype(np.int64)
    return np.diff(edges)


def _run_blocks(fn, sizes, workers: int):
    jobs = list(enumerate(sizes))
    if workers <= 1:
        return [fn(b, n) for b, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _jackknife_ratio(num_blocks: np.ndarray, den_blocks: np.ndarray):
    """Ratio of sums and its delete-one-block jackknife standard error."""
    num, den = num_blocks.sum(), den_blocks.sum()
    b = num_blocks.shape[0]
    if b < 2:
        return num / den, 0.0
    loo = (num - num_blocks) / (den - den_blocks)
    err = np.sqrt((b - 1) / b * np.sum((loo - loo.mean()) ** 2))
    return num / den, float(err)


def _jackknife_mean(sums: np.ndarray, counts: np.ndarray):
    return _jackknife_ratio(sums, counts.astype(float))


def avg_fidelity_mc(kraus, n_samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED,
                    workers: int = 1, blocks: int = N_BLOCKS) -> FidelityReport:
    """Monte-Carlo estimate of ``F_n`` from Haar-random pure input states.

    Block ``b`` draws from ``sample_stream(seed, b)`` and partial sums are
    reduced in block order, so the result does not depend on ``workers``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    stack = np.array([np.asarray(k, dtype=complex) for k in _kraus_list(kraus)])
    sizes = _split(n_samples, min(blocks, n_samples))

    def block(b, n):
        cos_alpha, beta = haar_angles(sample_stream(seed, b), int(n))
        num, den = _kernels.fidelity_terms(cos_alpha, beta, stack)
        return num.sum(), den.sum()

    sums = np.array(_run_blocks(block, sizes, workers))
    if sums[:, 1].sum() <= 0.0:
        raise DegenerateDenominator("no input state survives the post-selection")
    f, err = _jackknife_ratio(sums[:, 0], sums[:, 1])
    ps, ps_err = _jackknife_mean(sums[:, 1], sizes)
    return FidelityReport(float(f), float(ps), "monte-carlo", err, ps_err, int(n_samples))


def simulate_trajectories(kraus, n_samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED,
                          workers: int = 1, blocks: int = N_BLOCKS) -> FidelityReport:
    """Sample individual protocol runs and average over the kept ones.

    Each run draws a Haar-random input, then one uniform number that picks the
    surviving Kraus branch with probability ``||B_i psi||^2`` or marks the run
    as discarded. ``F_n`` is the mean fidelity of kept runs and the success
    probability is the kept fraction.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    stack = np.array([np.asarray(k, dtype=complex) for k in _kraus_list(kraus)])
    sizes = _split(n_samples, min(blocks, n_samples))

    def block(b, n):
        rng = sample_stream(seed, b)
        cos_alpha, beta = haar_angles(rng, int(n))
        u = rng.random(int(n))
        kept, fid = _kernels.trajectory_terms(cos_alpha, beta, u, stack)
        return (kept * fid).sum(), kept.sum()

    sums = np.array(_run_blocks(block, sizes, workers))
    if sums[:, 1].sum() <= 0.0:
        raise DegenerateDenominator("every simulated run was discarded")
    f, err = _jackknife_ratio(sums[:, 0], sums[:, 1])
    ps, ps_err = _jackknife_mean(sums[:, 1], sizes)
    return FidelityReport(float(f), float(ps), "trajectory", err, ps_err, int(n_samples))


def avg_fidelity_closed(base: CanonicalParams) -> float:
    """``F_n`` of the unprotected canonical channel, ``(4 + 2 y0 - x^2) / 6``."""
    return (4.0 + 2.0 * base.y0 - base.xx) / 6.0


def success_denominator(base: CanonicalParams, weak: WeakParams) -> float:
    """``(2 - p) + h(q)`` with ``h(q) = -q (1 + x^2 (1 - p))``."""
    p, q, xx = weak.p, weak.q, base.xx
    return (2.0 - p) - q * (1.0 + xx * (1.0 - p))


def _gain(y0, xx, p, q):
    f = q * ((1.0 + y0 - xx / 2.0) * (1.0 - p) * xx + y0 - xx / 2.0) \
        + 2.0 * y0 * np.sqrt((1.0 - p) * (1.0 - q))
    den = 3.0 * ((2.0 - p) - q * (1.0 + xx * (1.0 - p)))
    return f - 2.0 * y0 + p * (y0 + xx / 2.0), den


def delta_fidelity_closed(base: CanonicalParams, weak: WeakParams) -> float:
    """Fidelity gain ``F_n(protected) - F_n(bare)`` for a canonical channel."""
    num, den = _gain(base.y0, base.xx, weak.p, weak.q)
    if den <= DEN_TOL:
        raise DegenerateDenominator(f"post-selection kills every state (p={weak.p}, q={weak.q}, x^2={base.xx})")
    return float(num / den)


def delta_fidelity_curve(base: CanonicalParams, p: float, q) -> np.ndarray:
    """Vectorized :func:`delta_fidelity_closed` over ``q``; ``-inf`` where nothing survives."""
    q = np.clip(np.atleast_1d(np.asarray(q, dtype=float)), 0.0, 1.0)
    num, den = _gain(base.y0, base.xx, p, q)
    ok = den > DEN_TOL
    return np.where(ok, num / np.where(ok, den, 1.0), -np.inf)


def avg_success_exact(base: CanonicalParams, weak: WeakParams) -> float:
    """Haar-averaged success probability ``[(1 - q) + (1 - p)(1 - q x^2)] / 2``."""
    p, q, xx = weak.p, weak.q, base.xx
    return 0.5 * ((1.0 - q) + (1.0 - p) * (1.0 - q * xx))
