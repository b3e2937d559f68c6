import io
import math

import numpy as np
import pytest
from scipy import integrate

from lorentzgas.errors import BinMismatch, EmptyEnsemble
from lorentzgas.transition import (
    MU_NORM,
    W_MAX,
    TransitionHistogram,
    mu_mass_monte_carlo,
    mu_mass_quadrature,
    mu_weight,
    pushforward_histogram,
    sample_mu,
    sample_mu_batch,
    symmetry_distance,
    young_histogram,
)


def test_mu_mass_quadrature_is_one():
    assert abs(mu_mass_quadrature() - 1.0) < 1e-10


def test_mu_mass_monte_carlo():
    rng = np.random.default_rng(1)
    est, err = mu_mass_monte_carlo(rng, 200_000)
    assert err < 2e-3
    assert abs(est - 1.0) < 5 * err


def test_mu_weight_bounded():
    rng = np.random.default_rng(2)
    a = rng.uniform(0, 1, 1000)
    b = rng.uniform(0, 1, 1000) * (1 - a)
    w = mu_weight(a, b)
    assert np.all(w > 0) and np.all(w <= W_MAX + 1e-15)


def test_sample_mu_support():
    rng = np.random.default_rng(3)
    a, b, q, par = sample_mu_batch(rng, 50_000)
    assert np.all((a > 0) & (a < 1))
    assert np.all((b > 0) & (b < 1 - a))
    assert np.all((q > 0) & (q < 1 / (2 - a - b)))
    assert set(np.unique(par)) <= {0, 1}
    # parity is a fair coin
    assert abs(par.mean() - 0.5) < 0.01
    s = sample_mu(np.random.default_rng(4))
    assert 0 < s.A < 1 and 0 < s.B < 1 - s.A and 0 < s.Q < 1 / (2 - s.A - s.B)


def test_sample_mu_a_marginal_matches_density():
    """The A-marginal of mu has density (12/pi^2) ln(2-A)/(1-A)."""
    rng = np.random.default_rng(5)
    a, _, _, _ = sample_mu_batch(rng, 400_000)
    edges = np.linspace(0, 1, 21)
    emp, _ = np.histogram(a, bins=edges)
    emp = emp / emp.sum()
    exact = np.array([
        integrate.quad(
            lambda x: (12 / math.pi**2) * math.log(2 - x) / (1 - x),
            edges[i], edges[i + 1],
        )[0]
        for i in range(20)
    ])
    assert 0.5 * np.abs(emp - exact).sum() < 0.01


def test_histogram_accounting():
    h = TransitionHistogram.empty(0.2, s_max=2.0, n_s=4, n_h=4)
    h.add([0.5, 1.5, 3.0], [0.0, 0.5, -0.5])
    assert h.counts.sum() == 2.0
    assert h.overflow == 1.0
    assert h.total == 3.0
    p = h.normalized()
    assert abs(p.sum() - 1.0) < 1e-15
    assert p[-1] == pytest.approx(1 / 3)
    assert h.s_tail_mass(1.0) == pytest.approx(2 / 3)


def test_histogram_tv_and_binning():
    h1 = TransitionHistogram.empty(0.2)
    h2 = TransitionHistogram.empty(0.2)
    rng = np.random.default_rng(6)
    s = rng.uniform(0, 6, 1000)
    hh = rng.uniform(-1, 1, 1000)
    h1.add(s, hh)
    h2.add(s, hh)
    assert h1.tv(h2) == 0.0
    h3 = TransitionHistogram.empty(0.2, n_s=32)
    with pytest.raises(BinMismatch):
        h1.tv(h3)
    empty = TransitionHistogram.empty(0.2)
    with pytest.raises(EmptyEnsemble):
        empty.normalized()


def test_histogram_h_flip_involution():
    rng = np.random.default_rng(7)
    h = TransitionHistogram.empty(0.3)
    h.add(rng.uniform(0, 8, 5000), rng.uniform(-1, 1, 5000))
    flipped = h.h_flipped()
    assert flipped.h_prime == -0.3
    assert flipped.overflow == h.overflow
    back = flipped.h_flipped()
    assert np.array_equal(back.counts, h.counts)
    assert h.tv(back) == 0.0


def test_histogram_csv_round_trip():
    rng = np.random.default_rng(8)
    h = pushforward_histogram(0.25, 20_000, rng, n_s=16, n_h=16)
    buf = io.StringIO()
    h.to_csv(buf)
    buf.seek(0)
    h2 = TransitionHistogram.from_csv(buf)
    assert h2.h_prime == h.h_prime
    assert np.array_equal(h2.counts, h.counts)
    assert h2.overflow == h.overflow and h2.total == h.total
    assert np.array_equal(h2.s_edges, h.s_edges)
    assert h.tv(h2) == 0.0


def test_pushforward_parity_split():
    rng = np.random.default_rng(9)
    h = pushforward_histogram(0.2, 10_000, rng)
    assert h.total == pytest.approx(10_000.0)
    assert h.meta["estimator"] == "pushforward"
    with pytest.raises(ValueError):
        pushforward_histogram(1.0, 100, rng)
    with pytest.raises(EmptyEnsemble):
        pushforward_histogram(0.2, 0, rng)


def test_young_vs_pushforward_smoke():
    """Module-scale version of the Young-measure convergence; the full
    thresholds live in the acceptance suite."""
    rng = np.random.default_rng(10)
    young = young_histogram(0.2, 1e-2, 200_000, rng)
    push = pushforward_histogram(0.2, 200_000, rng)
    assert float(young.meta["skipped"]) < 0.01 * 200_000
    assert young.tv(push) < 0.08


def test_symmetry_at_zero_hprime():
    """P(s, h | 0) is symmetric in h (parity marginalization makes the
    pushforward exactly symmetric)."""
    rng = np.random.default_rng(11)
    h = pushforward_histogram(0.0, 100_000, rng)
    assert h.tv(h.h_flipped()) < 1e-12


def test_symmetry_distance_pushforward():
    rng1 = np.random.default_rng(12)
    rng2 = np.random.default_rng(13)
    h1 = pushforward_histogram(0.4, 300_000, rng1)
    h2 = pushforward_histogram(-0.4, 300_000, rng2)
    assert symmetry_distance(h1, h2) < 0.03


def test_young_direction_windows_agree():
    """The Young measure is independent of the direction: histograms
    from disjoint angular windows agree (small-n version; quadrant
    version runs in the acceptance suite)."""
    rng = np.random.default_rng(14)
    h1 = young_histogram(0.2, 1e-3, 300_000, rng,
                         theta_range=(0.0, math.pi / 2))
    h2 = young_histogram(0.2, 1e-3, 300_000, rng,
                         theta_range=(math.pi / 2, math.pi))
    assert h1.tv(h2) < 0.05
