"""Choice of the post-measurement strength ``q`` that maximizes the fidelity gain."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import CanonicalParams
from .fidelity import avg_success_exact, delta_fidelity_curve
from .protocol import WeakParams

log = logging.getLogger(__name__)

Y0_EPS = 1e-6
GRID_POINTS = 1000
CERT_TOL = 1e-9
INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0

DEFAULT_Y0 = (-0.9, -0.6, -0.3, 0.3, 0.6, 0.9)
DEFAULT_P = 0.9
DEFAULT_GRID = 100


@dataclass(frozen=True)
class Optimum:
    q_opt: float
    delta_f: float
    p_success_avg: float
    branch: str


@dataclass(frozen=True)
class SweepRecord:
    y0: float
    xx: float
    p: float
    q_opt: float
    delta_f: float
    p_success: float


def _delta_f(base, p, q):
    return float(delta_fidelity_curve(base, p, q)[0])


def q_opt_closed(base: CanonicalParams, p: float) -> float:
    """Stationary point of the gain in ``q``; valid for ``y0 > 0`` and ``p < 1``.

    Not clamped: the caller decides what to do with values outside [0, 1].
    """
    y0, xx = base.y0, base.xx
    if y0 <= Y0_EPS:
        raise ValueError(f"closed-form optimum needs y0 > {Y0_EPS}, got {y0}")
    if not 0.0 <= p < 1.0:
        raise ValueError(f"closed-form optimum needs p in [0, 1), got {p}")
    a = 1.0 - p
    gamma = 4.0 * y0 ** 2 + xx * a * (xx * (1.0 - xx) * a + 4.0 * y0 ** 2)
    scale = (1.0 - xx) * a / (4.0 * y0 ** 2 * (1.0 + xx * a) ** 2)
    return float(1.0 - scale * (-xx * np.sqrt(1.0 - xx) * a + np.sqrt(gamma)) ** 2)


def gain_slope(base: CanonicalParams, p: float, q: float, step: float = 1e-5) -> float:
    """Central-difference ``d(gain)/dq``.

    The step shrinks to ``1e-4 * (1 - q)`` near the ``sqrt(1 - q)``
    singularity, where a fixed step would be dominated by truncation error.
    """
    h = min(step, 1e-4 * (1.0 - q), q) if q < 1.0 else step
    if h <= 0.0:
        h = step
    lo, hi = max(q - h, 0.0), min(q + h, 1.0)
    vals = delta_fidelity_curve(base, p, [lo, hi])
    return float((vals[1] - vals[0]) / (hi - lo))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-9, max_iter: int = 200):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    best = max(((a, f(a)), (c, fc), (d, fd), (b, f(b))), key=lambda t: t[1])
    return best


def q_opt_numeric(base: CanonicalParams, p: float, grid_points: int = GRID_POINTS) -> float:
    """Grid scan to bracket the global maximum, then golden-section refinement."""
    grid = np.linspace(0.0, 1.0, grid_points + 1)
    vals = delta_fidelity_curve(base, p, grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points)]
    q, fq = golden_section_max(lambda t: _delta_f(base, p, t), lo, hi)
    return float(q) if fq >= vals[i] else float(grid[i])


def _grid_max(base, p):
    return float(np.max(delta_fidelity_curve(base, p, np.linspace(0.0, 1.0, GRID_POINTS + 1))))


def optimize(base: CanonicalParams, p: float) -> Optimum:
    """Best ``q`` for a fixed pre-measurement strength ``p``.

    ``y0 > 0`` uses the stationary-point formula, ``y0 < 0`` the projective
    endpoint ``q = 1`` and the region ``|y0| <= 1e-6`` a numeric search. The
    result is checked against a 1000-point grid scan and replaced by the
    numeric optimum if the scan finds something better.
    """
    y0, xx = base.y0, base.xx
    if y0 > Y0_EPS and p < 1.0:
        q = q_opt_closed(base, p)
        branch = "closed-form"
        if not 0.0 <= q <= 1.0:
            q = min(max(q, 0.0), 1.0)
            branch = "closed-form-clamped"
        delta_f = _delta_f(base, p, q)
    elif y0 < -Y0_EPS:
        q, branch = 1.0, "boundary-q1"
        delta_f = (xx - 2.0 * y0) / 6.0
    else:
        q = q_opt_numeric(base, p)
        branch = "numeric-fallback"
        delta_f = _delta_f(base, p, q)

    best = _grid_max(base, p)
    if not delta_f >= best - CERT_TOL:
        log.warning("branch %s lost to the grid scan (%.3e < %.3e); using numeric search", branch, delta_f, best)
        q = q_opt_numeric(base, p)
        branch = "numeric-fallback"
        delta_f = _delta_f(base, p, q)
    p_success = avg_success_exact(base, WeakParams(p, q))
    if branch == "boundary-q1":
        p_success = 0.5 * (1.0 - xx) * (1.0 - p)
    return Optimum(float(q), float(delta_f), float(p_success), branch)


def _sweep_row(y0: float, p: float, grid_size: int):
    xx_max = max(1.0 - y0 ** 2, 0.0)
    rows = []
    for xx in np.linspace(0.0, xx_max, grid_size):
        opt = optimize(CanonicalParams.from_y0_xx(y0, xx), p)
        rows.append(SweepRecord(float(y0), float(xx), float(p), opt.q_opt, opt.delta_f, opt.p_success_avg))
    return rows


def sweep(y0_list=DEFAULT_Y0, p: float = DEFAULT_P, grid_size: int = DEFAULT_GRID, workers: int = 1):
    """Optimal gain, success probability and ``q`` over ``x^2`` in ``[0, 1 - y0^2]``.

    Records are sorted by ``(y0, xx)`` regardless of ``workers``.
    """
    y0_list = sorted(float(v) for v in y0_list)
    if not y0_list or grid_size < 1:
        raise ValueError("sweep grid is empty")
    if any(abs(v) > 1.0 for v in y0_list):
        raise ValueError("y0 values must lie in [-1, 1]")
    if workers <= 1:
        rows = [_sweep_row(v, p, grid_size) for v in y0_list]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _sweep_row(v, p, grid_size), y0_list))
    return [r for row in rows for r in row]
