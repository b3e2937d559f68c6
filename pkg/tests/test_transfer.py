import math
from types import SimpleNamespace

import numpy as np
import pytest

from lorentzgas.contfrac import partition_params
from lorentzgas.errors import DegenerateDirection
from lorentzgas.transfer import (
    reduce_direction,
    transfer_asymptotic,
    transfer_asymptotic_arrays,
    transfer_asymptotic_direction,
    transfer_exact,
)

import oracles


def _omega(theta):
    return np.array([math.cos(theta), math.sin(theta)])


def test_reduce_direction_folds_into_sector():
    rng = np.random.default_rng(1)
    for _ in range(200):
        theta = float(rng.uniform(-3 * math.pi, 3 * math.pi))
        tt = theta - round(theta / (math.pi / 2)) * (math.pi / 2)
        if abs(tt) < 1e-3 or abs(abs(tt) - math.pi / 4) < 1e-3:
            continue
        red = reduce_direction(_omega(theta))
        theta_t = math.atan2(red.omega_tilde[1], red.omega_tilde[0])
        assert -math.pi / 4 <= theta_t < math.pi / 4
        # quarter turns recover the original direction
        back = theta_t + red.quadrant_m * math.pi / 2
        assert abs(math.cos(back) - math.cos(theta)) < 1e-12
        assert abs(math.sin(back) - math.sin(theta)) < 1e-12
        assert red.sign_flip == (1 if theta_t > 0 else -1)


@pytest.mark.parametrize("theta", [0.0, math.pi / 4, math.pi / 2, math.pi,
                                   -math.pi / 4, 3 * math.pi / 4])
def test_reduce_direction_degenerate(theta):
    with pytest.raises(DegenerateDirection):
        reduce_direction(_omega(theta))


def test_transfer_exact_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(100):
        r = float(rng.uniform(0.02, 0.2))
        theta = float(rng.uniform(0.02, math.pi / 2 - 0.02))
        hp = float(rng.uniform(-0.95, 0.95))
        res = transfer_exact(hp, _omega(theta), r)
        t_lib = res.s / (2 * r)
        s_o, h_o, _ = oracles.brute_force_transfer(hp, theta, r,
                                                   t_max=t_lib + 3.0)
        assert abs(res.s - s_o) < 1e-10
        assert abs(res.h - h_o) < 1e-10


def test_transfer_exact_rejects_bad_hprime():
    with pytest.raises(ValueError):
        transfer_exact(1.0, _omega(0.3), 0.05)


def test_transfer_asymptotic_branches():
    """Hand-evaluated values on each branch of the three-branch map."""
    p = SimpleNamespace(A=0.4, B=0.3, Q=0.5, N_parity=0)
    q_pr = (1.0 - 0.5 * 0.7) / 0.6  # = 1.0833...
    # branch 1: h' > 1 - 2A = 0.2
    res = transfer_asymptotic(p, 0.5)
    assert res.s == 0.5 and abs(res.h - (0.5 - 2 * 0.6)) < 1e-15
    # branch 2: h' < -1 + 2B = -0.4
    res = transfer_asymptotic(p, -0.6)
    assert abs(res.s - q_pr) < 1e-15
    assert abs(res.h - (-0.6 + 2 * 0.7)) < 1e-15
    # branch 3: -0.4 <= h' <= 0.2
    res = transfer_asymptotic(p, 0.0)
    assert abs(res.s - (q_pr + 0.5)) < 1e-15
    assert abs(res.h - 2 * (0.4 - 0.3)) < 1e-15
    # ties at both boundaries go to the middle branch (parameters chosen
    # so the boundaries 1-2A and -1+2B are exact in floating point)
    p = SimpleNamespace(A=0.25, B=0.25, Q=0.5, N_parity=0)
    mid = transfer_asymptotic(p, 0.0).s
    assert transfer_asymptotic(p, 0.5).s == mid
    assert transfer_asymptotic(p, -0.5).s == mid
    assert transfer_asymptotic(p, np.nextafter(0.5, 1.0)).s == 0.5


def test_transfer_asymptotic_parity_conjugation():
    """Odd parity is the h -> -h conjugation of even parity."""
    rng = np.random.default_rng(3)
    for _ in range(200):
        p0 = SimpleNamespace(A=rng.uniform(0.05, 0.95), B=0.0, Q=rng.uniform(0.1, 1.0),
                             N_parity=0)
        p0.B = float(rng.uniform(0.0, 1.0 - p0.A))
        p1 = SimpleNamespace(A=p0.A, B=p0.B, Q=p0.Q, N_parity=1)
        hp = float(rng.uniform(-0.999, 0.999))
        r0 = transfer_asymptotic(p0, hp)
        r1 = transfer_asymptotic(p1, -hp)
        assert abs(r0.s - r1.s) < 1e-15
        assert abs(r0.h + r1.h) < 1e-15


def test_transfer_asymptotic_arrays_matches_scalar():
    rng = np.random.default_rng(4)
    n = 1000
    a = rng.uniform(0.01, 0.99, n)
    b = rng.uniform(0.0, 1.0, n) * (1 - a)
    q = rng.uniform(0.05, 2.0, n)
    par = rng.integers(0, 2, n)
    hp = rng.uniform(-0.999, 0.999, n)
    s, h = transfer_asymptotic_arrays(a, b, q, par, hp)
    for i in range(n):
        res = transfer_asymptotic(
            SimpleNamespace(A=a[i], B=b[i], Q=q[i], N_parity=int(par[i])),
            hp[i],
        )
        assert s[i] == res.s and h[i] == res.h


def test_asymptotic_approximates_exact():
    """Module-scale version of the O(r^2) statement: at r = 3e-3 the
    h-components agree to 1e-8 on >= 99% of samples and the s error is
    small; the full slope fit is in the acceptance suite."""
    rng = np.random.default_rng(5)
    r = 3e-3
    n = 20_000
    theta = rng.uniform(1e-4, math.pi / 4 - 1e-4, n)
    hp = 0.2
    s_err = []
    h_match = 0
    used = 0
    for th in theta:
        try:
            ex = transfer_exact(hp, _omega(th), r)
            asym = transfer_asymptotic(partition_params(math.tan(th), r), hp)
        except Exception:
            continue
        used += 1
        s_err.append(abs(ex.s - asym.s))
        h_match += abs(ex.h - asym.h) < 1e-8
    assert used > 0.99 * n
    assert h_match / used >= 0.99
    assert np.median(s_err) < 1e-3


def test_transfer_asymptotic_direction_sign_conjugation():
    """For mirrored directions the h-components flip and s agrees."""
    rng = np.random.default_rng(6)
    r = 1e-3
    for _ in range(50):
        theta = float(rng.uniform(0.01, math.pi / 4 - 0.01))
        hp = float(rng.uniform(-0.9, 0.9))
        up = transfer_asymptotic_direction(hp, _omega(theta), r)
        down = transfer_asymptotic_direction(-hp, _omega(-theta), r)
        assert abs(up.s - down.s) < 1e-12
        assert abs(up.h + down.h) < 1e-12
        # quarter-turn invariance; the rotated angle differs from theta
        # by an ulp and 1/eps amplifies that into the parameters
        rot = transfer_asymptotic_direction(hp, _omega(theta + math.pi / 2), r)
        assert abs(up.s - rot.s) < 1e-9
        assert abs(up.h - rot.h) < 1e-9
