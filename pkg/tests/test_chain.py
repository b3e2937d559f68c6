import math

import numpy as np
import pytest

from lorentzgas.chain import (
    ChainState,
    JumpTrajectory,
    chain_step,
    collision_rotation_angle,
    independence_stats,
    jump_evolve,
    rotate,
)
from lorentzgas.lattice import (
    BoundaryState,
    billiard_map,
    boundary_lift,
)
from lorentzgas.transition import MuSample, sample_mu_batch
from lorentzgas.transfer import transfer_asymptotic, transfer_asymptotic_arrays


def _omega(theta):
    return np.array([math.cos(theta), math.sin(theta)])


def test_rotation_angle_endpoints():
    assert collision_rotation_angle(0.0) == pytest.approx(math.pi)
    assert collision_rotation_angle(1.0) == pytest.approx(0.0)
    assert collision_rotation_angle(-1.0) == pytest.approx(2 * math.pi)


def test_rotation_angle_matches_exact_reflection():
    """pi - 2 arcsin(h) is the CCW direction change of the true billiard
    reflection at impact parameter h."""
    rng = np.random.default_rng(1)
    r = 0.1
    for _ in range(50):
        theta = float(rng.uniform(0, 2 * math.pi))
        hp = float(rng.uniform(-0.95, 0.95))
        b = BoundaryState(lattice_point=(0, 0), h=hp, omega=_omega(theta))
        nxt = billiard_map(b, r)
        # incoming direction at the next obstacle is still omega; the
        # impact parameter there is nxt.h, so the rotation is
        # collision_rotation_angle(nxt.h)
        predicted = rotate(b.omega, collision_rotation_angle(nxt.h))
        assert np.allclose(predicted, nxt.omega, atol=1e-10)


def test_rotate_basic():
    assert np.allclose(rotate(np.array([1.0, 0.0]), math.pi / 2), [0, 1])
    assert np.allclose(rotate(np.array([0.0, 1.0]), -math.pi / 2), [1, 0])


def test_chain_state_validation():
    with pytest.raises(ValueError):
        ChainState(s=1.0, h=1.5, omega=[1, 0], x=[0, 0])
    with pytest.raises(ValueError):
        ChainState(s=1.0, h=0.0, omega=[2, 0], x=[0, 0])


def test_chain_step():
    state = ChainState(s=0.0, h=0.2, omega=_omega(0.7), x=[1.0, 2.0])
    beta = MuSample(A=0.3, B=0.2, Q=0.6, N_parity=0)
    nxt = chain_step(state, beta)
    expect = transfer_asymptotic(beta, 0.2)
    assert nxt.s == expect.s and nxt.h == expect.h
    assert np.allclose(nxt.x, state.x)
    angle = math.atan2(nxt.omega[1], nxt.omega[0]) - 0.7
    angle = (angle + math.pi) % (2 * math.pi) - math.pi
    assert angle == pytest.approx(
        (collision_rotation_angle(0.2) + math.pi) % (2 * math.pi) - math.pi
    )


def test_jump_evolve_trajectory():
    rng = np.random.default_rng(2)
    init = ChainState(s=0.7, h=0.1, omega=_omega(0.3), x=[0.0, 0.0])
    traj = jump_evolve(init, 10.0, rng)
    t0, st0 = traj.events[0]
    assert t0 == 0.0 and st0 is init
    times = [t for t, _ in traj.events]
    assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))
    assert times[-1] + traj.events[-1][1].s >= traj.t_max
    # state_at interpolates the flight: position is continuous, s counts
    # down at unit rate
    for t in (0.0, 0.35, 1.7, 9.9):
        st = traj.state_at(t)
        assert st.s >= 0.0 or math.isclose(st.s, 0.0, abs_tol=1e-12)
    st_a = traj.state_at(3.0)
    st_b = traj.state_at(3.01)
    if st_a.s > 0.011:  # same flight
        assert np.allclose(st_b.x - st_a.x, 0.01 * st_a.omega)
        assert st_b.s == pytest.approx(st_a.s - 0.01)
    with pytest.raises(ValueError):
        traj.state_at(-1.0)
    with pytest.raises(ValueError):
        traj.state_at(11.0)
    # collision count is of the order of t (unit mean free time)
    assert 2 <= traj.n_collisions <= 60


def test_jump_evolve_collision_rate():
    """Mean number of collisions per unit time is near 1 at stationarity
    (unit mean free path in the 2r-rescaled units)."""
    rng = np.random.default_rng(3)
    t_max = 200.0
    counts = []
    for _ in range(20):
        init = ChainState(s=float(rng.exponential(1.0)),
                          h=float(rng.uniform(-1, 1)),
                          omega=_omega(rng.uniform(0, 2 * math.pi)),
                          x=[0.0, 0.0])
        counts.append(jump_evolve(init, t_max, rng).n_collisions / t_max)
    assert 0.7 < np.mean(counts) < 1.3


def test_chain_h_marginal_symmetric():
    """Iterating the chain from a symmetric h-law keeps the h-marginal
    symmetric about 0."""
    rng = np.random.default_rng(4)
    n = 1_000_000
    h = rng.uniform(-1.0, 1.0, n)
    for _ in range(20):
        a, b, q, par = sample_mu_batch(rng, n)
        _, h = transfer_asymptotic_arrays(a, b, q, par, h)
    cnt, _ = np.histogram(h, bins=64, range=(-1, 1))
    p = cnt / cnt.sum()
    tv = 0.5 * np.abs(p - p[::-1]).sum()
    assert tv < 0.03


def test_independence_stats_trend():
    """Marginal law of the first collision's parameters approaches mu as
    r decreases; pair TV is reported, not asserted."""
    rng = np.random.default_rng(5)
    tvs = []
    for r in (1e-1, 1e-2, 1e-3):
        stats = independence_stats(r, 2, 100_000, rng,
                                   mu_reference_n=1_000_000)
        assert stats["skipped"] < 1000
        assert len(stats["marginal_tv"]) == 2
        assert "pair_tv" in stats and 0.0 <= stats["pair_tv"] <= 1.0
        tvs.append(stats["marginal_tv"][0])
    assert tvs[0] > tvs[-1]
    assert tvs[-1] < 0.05


def test_independence_stats_validation():
    rng = np.random.default_rng(6)
    with pytest.raises(ValueError):
        independence_stats(0.5, 2, 100, rng)
    with pytest.raises(ValueError):
        independence_stats(0.1, 0, 100, rng)
