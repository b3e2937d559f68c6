"""The limiting transition probability P(s,h|h') as an empirical object.

mu is the probability measure on K = (0,1)^3 x Z/2Z with density

    (6/pi^2) 1_{0<A<1} 1_{0<B<1-A} 1_{0<Q<1/(2-A-B)} dA dB dQ / (1-A)

split evenly over the two parities.  P(s,h|h') is its image under
(A,B,Q,N) -> T_{A,B,Q,N}(h').  Two independent estimators of P are
provided: pushing mu through the asymptotic map, and the empirical Young
measure of the exact map over uniformly random directions.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import BinMismatch, EmptyEnsemble
from .lattice import DEFAULT_MAX_CELLS, check_radius
from .transfer import transfer_asymptotic_arrays

MU_NORM = 6.0 / math.pi**2

# Proposal for mu: A ~ U(0,1), B ~ U(0,1-A), Q ~ U(0,1/(2-A-B)), fair
# parity.  The importance weight of the target against this proposal is
# w = (12/pi^2) / (2-A-B), bounded by 12/pi^2, so exact sampling is a
# cheap rejection step.
W_MAX = 12.0 / math.pi**2


@dataclass
class MuSample:
    """One draw of the partition parameters under mu."""

    A: float
    B: float
    Q: float
    N_parity: int


def _propose(rng: np.random.Generator, n: int):
    a = rng.uniform(0.0, 1.0, n)
    b = rng.uniform(0.0, 1.0, n) * (1.0 - a)
    q = rng.uniform(0.0, 1.0, n) / (2.0 - a - b)
    parity = rng.integers(0, 2, n)
    w = W_MAX / (2.0 - a - b)
    return a, b, q, parity, w


def mu_weight(a, b, q=None, parity=None):
    """Importance weight of mu against the triangular proposal."""
    return W_MAX / (2.0 - np.asarray(a) - np.asarray(b))


def sample_mu_batch(rng: np.random.Generator, n: int):
    """n exact (unweighted) draws of mu, by rejection.

    Returns arrays (A, B, Q, parity).  Acceptance probability is
    pi^2/12 ~ 0.82.
    """
    outs = []
    got = 0
    while got < n:
        m = max(int((n - got) * 1.3) + 16, 16)
        a, b, q, parity, w = _propose(rng, m)
        keep = rng.uniform(0.0, 1.0, m) * W_MAX < w
        outs.append((a[keep], b[keep], q[keep], parity[keep]))
        got += int(keep.sum())
    a = np.concatenate([o[0] for o in outs])[:n]
    b = np.concatenate([o[1] for o in outs])[:n]
    q = np.concatenate([o[2] for o in outs])[:n]
    parity = np.concatenate([o[3] for o in outs])[:n]
    return a, b, q, parity


def sample_mu(rng: np.random.Generator) -> MuSample:
    """One exact draw of mu."""
    a, b, q, parity = sample_mu_batch(rng, 1)
    return MuSample(A=float(a[0]), B=float(b[0]), Q=float(q[0]),
                    N_parity=int(parity[0]))


def mu_mass_monte_carlo(rng: np.random.Generator, n: int):
    """Importance-sampling estimate of the total mass of mu.

    Returns (estimate, standard_error); the estimate should be 1.
    """
    _, _, _, _, w = _propose(rng, n)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(n))


def mu_mass_quadrature() -> float:
    """Deterministic quadrature of the mu density over K.

    Integrating out Q and B leaves (12/pi^2) * ln(2-A)/(1-A) on (0,1).
    """
    val, _ = integrate.quad(
        lambda a: (12.0 / math.pi**2) * math.log(2.0 - a) / (1.0 - a), 0.0, 1.0
    )
    return val


DEFAULT_S_MAX = 6.0
DEFAULT_BINS = 64


@dataclass
class TransitionHistogram:
    """Weighted 2-D histogram of (s, h) outcomes for a fixed h'.

    An explicit overflow bin holds the weight with s > s_edges[-1] so
    that mass never silently vanishes (Q' + Q is unbounded as A -> 1).
    counts are weights; total is the total input weight including
    overflow and matches counts.sum() + overflow.
    """

    h_prime: float
    s_edges: np.ndarray
    h_edges: np.ndarray
    counts: np.ndarray
    overflow: float = 0.0
    total: float = 0.0
    meta: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, h_prime: float, s_max: float = DEFAULT_S_MAX,
              n_s: int = DEFAULT_BINS, n_h: int = DEFAULT_BINS):
        return cls(
            h_prime=float(h_prime),
            s_edges=np.linspace(0.0, s_max, n_s + 1),
            h_edges=np.linspace(-1.0, 1.0, n_h + 1),
            counts=np.zeros((n_s, n_h)),
        )

    def add(self, s, h, weights=None):
        """Accumulate samples; h exactly at +1 lands in the last bin."""
        s = np.asarray(s, dtype=float)
        h = np.asarray(h, dtype=float)
        if weights is None:
            weights = np.ones_like(s)
        weights = np.asarray(weights, dtype=float)
        over = s > self.s_edges[-1]
        hist, _, _ = np.histogram2d(
            s[~over], h[~over], bins=(self.s_edges, self.h_edges),
            weights=weights[~over],
        )
        self.counts += hist
        self.overflow += float(weights[over].sum())
        self.total += float(weights.sum())

    def same_binning(self, other: "TransitionHistogram") -> bool:
        return (
            self.s_edges.shape == other.s_edges.shape
            and self.h_edges.shape == other.h_edges.shape
            and np.array_equal(self.s_edges, other.s_edges)
            and np.array_equal(self.h_edges, other.h_edges)
        )

    def normalized(self) -> np.ndarray:
        """Flattened probability vector including the overflow bin."""
        v = np.concatenate([self.counts.ravel(), [self.overflow]])
        tot = v.sum()
        if tot <= 0.0:
            raise EmptyEnsemble("histogram holds no mass")
        return v / tot

    def tv(self, other: "TransitionHistogram") -> float:
        """Total variation distance on the common grid."""
        if not self.same_binning(other):
            raise BinMismatch("histograms use different binnings")
        return 0.5 * float(np.abs(self.normalized() - other.normalized()).sum())

    def h_flipped(self) -> "TransitionHistogram":
        """The histogram of (s, -h); the h grid is symmetric about 0."""
        return TransitionHistogram(
            h_prime=-self.h_prime,
            s_edges=self.s_edges.copy(),
            h_edges=self.h_edges.copy(),
            counts=self.counts[:, ::-1].copy(),
            overflow=self.overflow,
            total=self.total,
            meta=dict(self.meta),
        )

    def s_tail_mass(self, s_min: float) -> float:
        """Normalized mass of {s > s_min} (overflow included)."""
        p = self.normalized()
        grid = p[:-1].reshape(self.counts.shape)
        keep = self.s_edges[:-1] >= s_min
        return float(grid[keep].sum() + p[-1])

    def to_csv(self, fp: io.TextIOBase):
        fp.write("# format=transition_histogram_v1\n")
        fp.write(f"# h_prime={self.h_prime!r}\n")
        for key, val in sorted(self.meta.items()):
            fp.write(f"# {key}={val!r}\n")
        fp.write(f"# overflow={self.overflow!r}\n")
        fp.write(f"# total={self.total!r}\n")
        fp.write("# s_edges="
                 + ",".join(repr(float(v)) for v in self.s_edges) + "\n")
        fp.write("# h_edges="
                 + ",".join(repr(float(v)) for v in self.h_edges) + "\n")
        fp.write("s_bin,h_bin,count\n")
        for i in range(self.counts.shape[0]):
            for j in range(self.counts.shape[1]):
                fp.write(f"{i},{j},{float(self.counts[i, j])!r}\n")

    @classmethod
    def from_csv(cls, fp: io.TextIOBase) -> "TransitionHistogram":
        meta = {}
        header = None
        rows = []
        for line in fp:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val
                continue
            if header is None:
                header = line
                continue
            i, j, c = line.split(",")
            rows.append((int(i), int(j), float(c)))
        s_edges = np.array([float(v) for v in meta.pop("s_edges").split(",")])
        h_edges = np.array([float(v) for v in meta.pop("h_edges").split(",")])
        counts = np.zeros((len(s_edges) - 1, len(h_edges) - 1))
        for i, j, c in rows:
            counts[i, j] = c
        hist = cls(
            h_prime=float(meta.pop("h_prime")),
            s_edges=s_edges,
            h_edges=h_edges,
            counts=counts,
            overflow=float(meta.pop("overflow")),
            total=float(meta.pop("total")),
        )
        meta.pop("format", None)
        hist.meta = {k: v.strip("'\"") for k, v in meta.items()}
        return hist


def pushforward_histogram(h_prime: float, n: int, rng: np.random.Generator,
                          s_max: float = DEFAULT_S_MAX,
                          n_s: int = DEFAULT_BINS, n_h: int = DEFAULT_BINS
                          ) -> TransitionHistogram:
    """Histogram of T_{A,B,Q,N}(h') under n exact draws of mu.

    The parity atom is marginalized exactly (each (A,B,Q) draw lands in
    both parities with weight 1/2), which only removes variance.
    """
    if n < 1:
        raise EmptyEnsemble("n must be >= 1")
    if not abs(h_prime) < 1.0:
        raise ValueError(f"|h'| must be < 1, got {h_prime}")
    hist = TransitionHistogram.empty(h_prime, s_max=s_max, n_s=n_s, n_h=n_h)
    a, b, q, _ = sample_mu_batch(rng, n)
    for parity in (0, 1):
        s, h = transfer_asymptotic_arrays(a, b, q, np.full(n, parity), h_prime)
        hist.add(s, h, weights=np.full(n, 0.5))
    hist.meta.update(estimator="pushforward", n=n)
    return hist


def young_histogram(h_prime: float, r: float, n_dirs: int,
                    rng: np.random.Generator,
                    s_max: float = DEFAULT_S_MAX,
                    n_s: int = DEFAULT_BINS, n_h: int = DEFAULT_BINS,
                    max_cells: int = DEFAULT_MAX_CELLS,
                    theta_range: tuple[float, float] = (-math.pi, math.pi),
                    ) -> TransitionHistogram:
    """Empirical Young measure of the exact map over random directions.

    Draws n_dirs directions uniformly on the circle (or the given angular
    window, for the direction-independence check), evaluates
    T_r(h', omega) by ray tracing and bins the outcomes.  Rational and
    corridor directions are skipped and counted in meta['skipped'].
    """
    r = check_radius(r)
    if n_dirs < 1:
        raise EmptyEnsemble("n_dirs must be >= 1")
    if not abs(h_prime) < 1.0:
        raise ValueError(f"|h'| must be < 1, got {h_prime}")
    theta = rng.uniform(theta_range[0], theta_range[1], n_dirs)
    hp = np.full(n_dirs, float(h_prime))
    s = np.empty(n_dirs)
    h = np.empty(n_dirs)
    status = np.empty(n_dirs, dtype=np.int64)
    _kernels.transfer_exact_batch(hp, theta, r, max_cells, s, h, status)
    ok = status == _kernels.STATUS_OK
    hist = TransitionHistogram.empty(h_prime, s_max=s_max, n_s=n_s, n_h=n_h)
    hist.add(s[ok], h[ok])
    hist.meta.update(
        estimator="young", r=r, n=n_dirs, skipped=int((~ok).sum())
    )
    return hist


def symmetry_distance(hist1: TransitionHistogram,
                      hist2: TransitionHistogram) -> float:
    """TV distance between hist1 (at h') and the h-flip of hist2 (at -h').

    Quantifies the symmetry P(s,h|h') = P(s,-h|-h').
    """
    return hist1.tv(hist2.h_flipped())
