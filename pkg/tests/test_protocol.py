import numpy as np
import pytest

from weakprotect.channel import (
    CanonicalParams,
    amplitude_damping,
    channels_equal,
    conjugate,
    from_canonical,
    random_canonical,
    random_unitary,
)
from weakprotect.fidelity import avg_fidelity_exact
from weakprotect.protocol import (
    WeakParams,
    compose,
    generalized_protocol,
    post_measurement,
    pre_measurement,
    success_probability,
)
from weakprotect.qmath import I2, SIGMA_X, PureQubit, haar_angles, sample_stream

GRID = np.linspace(0, 1, 11)


def test_pre_measurement_examples():
    w0, w1 = pre_measurement(0.0)
    np.testing.assert_array_equal(w0, I2)
    np.testing.assert_array_equal(w1, np.zeros((2, 2)))
    w0, _ = pre_measurement(1.0)
    np.testing.assert_array_equal(w0, np.diag([1, 0]))
    w0, _ = pre_measurement(0.9)
    np.testing.assert_allclose(w0, np.diag([1, np.sqrt(0.1)]), rtol=0, atol=1e-15)


def test_post_measurement_examples():
    r0, _ = post_measurement(0.0)
    np.testing.assert_array_equal(r0, I2)
    r0, _ = post_measurement(1.0)
    np.testing.assert_array_equal(r0, np.diag([0, 1]))
    r0, _ = post_measurement(0.5)
    np.testing.assert_allclose(r0, np.diag([np.sqrt(0.5), 1]), rtol=0, atol=1e-15)


@pytest.mark.parametrize("s", GRID)
def test_completeness(s):
    w0, w1 = pre_measurement(s)
    r0, r1 = post_measurement(s)
    np.testing.assert_allclose(w0.conj().T @ w0 + w1.conj().T @ w1, I2, atol=1e-15)
    np.testing.assert_allclose(r0.conj().T @ r0 + r1.conj().T @ r1, I2, atol=1e-15)


@pytest.mark.parametrize("bad", [-0.1, 1.1])
def test_strength_out_of_range(bad):
    with pytest.raises(ValueError):
        pre_measurement(bad)
    with pytest.raises(ValueError):
        post_measurement(bad)
    with pytest.raises(ValueError):
        WeakParams(bad, 0.5)


def test_compose_no_measurement(rng):
    p = random_canonical(rng)
    c = compose(p, WeakParams(0, 0))
    for b, a in zip(c.kraus, from_canonical(p).kraus):
        np.testing.assert_array_equal(b, a)


def test_compose_identity_base():
    c = compose(CanonicalParams(1, 0, 0), WeakParams(0.3, 0.7))
    nonzero = [b for b in c.kraus if np.any(b != 0)]
    assert len(nonzero) == 1
    np.testing.assert_allclose(nonzero[0], np.diag([np.sqrt(0.3), np.sqrt(0.7)]), atol=1e-15)


def test_compose_explicit_matrices():
    base = CanonicalParams(0.8, 0.6, 0.0, theta=0.0)
    c = compose(base, WeakParams(0.9, 0.5))
    np.testing.assert_allclose(c.kraus[0], np.diag([np.sqrt(0.5), 0.8 * np.sqrt(0.1)]), atol=1e-15)
    r0 = np.diag([np.sqrt(0.5), 1.0])
    w0 = np.diag([1.0, np.sqrt(0.1)])
    for b, a in zip(c.kraus, from_canonical(base).kraus):
        np.testing.assert_allclose(b, r0 @ a @ w0, atol=1e-15)


def test_compose_matches_displayed_form(rng):
    base = random_canonical(rng)
    p, q = 0.7, 0.4
    c = compose(base, WeakParams(p, q))
    em, ep = np.exp(-0.5j * base.phi), np.exp(0.5j * base.phi)
    ch, sh = np.cos(base.theta / 2), np.sin(base.theta / 2)
    b1 = np.array([[0, base.x * em * np.sqrt(1 - q)], [0, base.y * ep]]) * ch * np.sqrt(1 - p)
    b2 = np.array([[0, base.x * em * np.sqrt(1 - q)], [0, -base.y * ep]]) * sh * np.sqrt(1 - p)
    np.testing.assert_allclose(c.kraus[1], b1, atol=1e-15)
    np.testing.assert_allclose(c.kraus[2], b2, atol=1e-15)


def test_success_probability_examples(rng):
    base = random_canonical(rng)
    p, q = 0.6, 0.3
    c = compose(base, WeakParams(p, q))
    assert success_probability(c, PureQubit(0, 0)) == pytest.approx(1 - q, abs=1e-14)
    one = PureQubit(np.pi, 0)
    brute = sum(np.linalg.norm(b @ one.amplitudes) ** 2 for b in c.kraus)
    assert success_probability(c, one) == pytest.approx((1 - p) * (1 - q * base.xx), abs=1e-14)
    assert brute == pytest.approx((1 - p) * (1 - q * base.xx), abs=1e-14)
    c0 = compose(base, WeakParams(0, 0))
    for _ in range(20):
        psi = PureQubit(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        assert success_probability(c0, psi) == pytest.approx(1, abs=1e-14)


def test_subnormalization_grid():
    for y0 in np.linspace(-1, 1, 5):
        for frac in (0, 0.5, 1):
            base = CanonicalParams.from_y0_xx(y0, frac * (1 - y0 ** 2), 0.7, 1.1)
            for p in GRID:
                for q in GRID:
                    ev = np.linalg.eigvalsh(compose(base, WeakParams(p, q)).gram)
                    assert ev.min() >= -1e-12 and ev.max() <= 1 + 1e-12


def test_success_probability_in_unit_interval(rng):
    cos_alpha, beta = haar_angles(sample_stream(3), 10_000)
    states = [PureQubit(float(np.arccos(c)), float(b)) for c, b in zip(cos_alpha, beta)]
    for k, psi in enumerate(states):
        base = random_canonical(rng) if k % 100 == 0 else base
        weak = WeakParams(GRID[k % 11], GRID[(k // 11) % 11])
        ps = success_probability(compose(base, weak), psi)
        assert -1e-12 <= ps <= 1 + 1e-12


def test_success_probability_monotone_in_q(rng):
    for _ in range(20):
        base = random_canonical(rng)
        psi = PureQubit(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        p = rng.uniform()
        vals = [success_probability(compose(base, WeakParams(p, q)), psi) for q in np.linspace(0, 1, 21)]
        assert np.all(np.diff(vals) <= 1e-14)


def test_generalized_protocol_on_canonical(ad_params):
    weak = WeakParams(0.9, 0.5)
    g = generalized_protocol(from_canonical(ad_params), weak)
    assert channels_equal(g.inner, compose(ad_params, weak).inner) <= 1e-12


def _gain(base_channel, composed):
    return avg_fidelity_exact(composed.inner).f_n - avg_fidelity_exact(base_channel).f_n


def test_generalized_protocol_flipped_amplitude_damping():
    weak = WeakParams(0.9, 0.7)
    ad = amplitude_damping(0.36)
    flipped = conjugate(ad, SIGMA_X)
    g = generalized_protocol(flipped, weak)
    assert abs(_gain(flipped, g) - _gain(ad, compose(g.base, weak))) <= 1e-9
    assert g.base.y0 == pytest.approx(0.8)


def test_generalized_protocol_random_conjugation(rng):
    for _ in range(20):
        base = random_canonical(rng)
        weak = WeakParams(rng.uniform(0, 0.99), rng.uniform())
        rotated = conjugate(from_canonical(base), random_unitary(rng))
        g = generalized_protocol(rotated, weak)
        assert abs(_gain(rotated, g) - _gain(from_canonical(base), compose(base, weak))) <= 1e-9
