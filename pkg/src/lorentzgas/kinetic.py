"""Particle solvers for the Boltzmann-Grad limit of the periodic Lorentz
gas and its comparisons:

  - solve_limit: the extended-phase-space kinetic model (transport at
    unit speed, countdown s at unit rate, jump kernel P(s,h|h') at s=0),
    solved by construction with the mu-driven Markov chain;
  - simulate_direct: the true billiard dynamics under Boltzmann-Grad
    scaling (macroscopic position = 2r * microscopic, time t observed at
    microscopic time t/(2r); 2r is the package-wide rescaling unit);
  - lorentz_baseline: the classical (Poisson-obstacle) Lorentz kinetic
    equation as a negative control, with exponential free paths of unit
    mean and hard-disk deflections.  (Unit rate is the hard-disk kernel
    mass expressed in the 2r time unit.)

All three bin (x, omega) on a common DensityGrid; particle counts are
conserved exactly, so each grid carries total mass 1.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BinMismatch, EmptyEnsemble
from .lattice import check_radius
from .transfer import transfer_asymptotic_arrays
from .transition import sample_mu_batch

TWO_PI = 2.0 * math.pi

DEFAULT_EVENT_BUDGET = 10**10


@dataclass(frozen=True)
class InitialDensity:
    """Compactly supported probability density on R^2 x S^1.

    sample(rng, n) returns (positions (n,2), angles (n,)); pdf_xy is the
    spatial marginal density (the angle marginal is uniform), used by
    quadrature checks.
    """

    sample: callable
    pdf_xy: callable
    support_radius: float
    name: str = "custom"


def uniform_disk(center=(0.0, 0.0), radius: float = 1.0) -> InitialDensity:
    """Uniform density on a disk times the uniform angle."""
    cx, cy = float(center[0]), float(center[1])
    radius = float(radius)

    def sample(rng: np.random.Generator, n: int):
        rho = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
        ang = rng.uniform(0.0, TWO_PI, n)
        xy = np.column_stack([cx + rho * np.cos(ang), cy + rho * np.sin(ang)])
        theta = rng.uniform(0.0, TWO_PI, n)
        return xy, theta

    def pdf_xy(x, y):
        inside = (np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2 <= radius**2
        return inside / (math.pi * radius**2)

    return InitialDensity(
        sample=sample, pdf_xy=pdf_xy,
        support_radius=math.hypot(cx, cy) + radius,
        name=f"uniform_disk(center=({cx},{cy}),radius={radius})",
    )


@dataclass
class DensityGrid:
    """Histogram of (x, omega) over [-L, L]^2 x [0, 2pi)."""

    x_edges: np.ndarray
    y_edges: np.ndarray
    theta_edges: np.ndarray
    weights: np.ndarray
    t: float
    label: str
    meta: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, extent: float, t: float, label: str,
              nx: int = 32, ny: int = 32, ntheta: int = 16) -> "DensityGrid":
        return cls(
            x_edges=np.linspace(-extent, extent, nx + 1),
            y_edges=np.linspace(-extent, extent, ny + 1),
            theta_edges=np.linspace(0.0, TWO_PI, ntheta + 1),
            weights=np.zeros((nx, ny, ntheta)),
            t=float(t),
            label=label,
        )

    def add(self, xy: np.ndarray, theta: np.ndarray, weight: float = 1.0):
        """Bin samples; positions are clipped into the outermost bins so
        that no mass is lost (the extent should cover the support)."""
        tiny = 1e-12
        x = np.clip(xy[:, 0], self.x_edges[0] + tiny, self.x_edges[-1] - tiny)
        y = np.clip(xy[:, 1], self.y_edges[0] + tiny, self.y_edges[-1] - tiny)
        th = np.mod(theta, TWO_PI)
        hist, _ = np.histogramdd(
            np.column_stack([x, y, th]),
            bins=(self.x_edges, self.y_edges, self.theta_edges),
        )
        self.weights += weight * hist

    def normalized(self) -> np.ndarray:
        tot = self.weights.sum()
        if tot <= 0.0:
            raise EmptyEnsemble("density grid holds no mass")
        return self.weights / tot

    def same_binning(self, other: "DensityGrid") -> bool:
        return (
            self.weights.shape == other.weights.shape
            and np.array_equal(self.x_edges, other.x_edges)
            and np.array_equal(self.y_edges, other.y_edges)
            and np.array_equal(self.theta_edges, other.theta_edges)
        )

    def to_csv(self, fp: io.TextIOBase):
        fp.write("# format=density_grid_v1\n")
        fp.write(f"# t={self.t!r}\n")
        fp.write(f"# label={self.label}\n")
        for key, val in sorted(self.meta.items()):
            fp.write(f"# {key}={val!r}\n")
        fp.write("# x_edges="
                 + ",".join(repr(float(v)) for v in self.x_edges) + "\n")
        fp.write("# y_edges="
                 + ",".join(repr(float(v)) for v in self.y_edges) + "\n")
        fp.write("# theta_edges="
                 + ",".join(repr(float(v)) for v in self.theta_edges) + "\n")
        fp.write("x_bin,y_bin,theta_bin,weight\n")
        nx, ny, nt = self.weights.shape
        for i in range(nx):
            for j in range(ny):
                for k in range(nt):
                    fp.write(f"{i},{j},{k},{float(self.weights[i, j, k])!r}\n")

    @classmethod
    def from_csv(cls, fp: io.TextIOBase) -> "DensityGrid":
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
            i, j, k, w = line.split(",")
            rows.append((int(i), int(j), int(k), float(w)))
        x_edges = np.array([float(v) for v in meta.pop("x_edges").split(",")])
        y_edges = np.array([float(v) for v in meta.pop("y_edges").split(",")])
        theta_edges = np.array(
            [float(v) for v in meta.pop("theta_edges").split(",")]
        )
        weights = np.zeros(
            (len(x_edges) - 1, len(y_edges) - 1, len(theta_edges) - 1)
        )
        for i, j, k, w in rows:
            weights[i, j, k] = w
        grid = cls(
            x_edges=x_edges, y_edges=y_edges, theta_edges=theta_edges,
            weights=weights, t=float(meta.pop("t")),
            label=meta.pop("label"),
        )
        meta.pop("format", None)
        grid.meta = {k: v.strip("'\"") for k, v in meta.items()}
        return grid


def compare_densities(g1: DensityGrid, g2: DensityGrid) -> float:
    """TV distance of two density grids on the common binning."""
    if not g1.same_binning(g2):
        raise BinMismatch("density grids use different binnings")
    if g1.t != g2.t:
        raise BinMismatch(f"time stamps differ: {g1.t} vs {g2.t}")
    return 0.5 * float(np.abs(g1.normalized() - g2.normalized()).sum())


def sample_initial_extended(f_in: InitialDensity, n: int,
                            rng: np.random.Generator):
    """Draw n extended-phase-space states from the kinetic model's
    initial condition.

    (x, omega) follow f_in; (s, h) follow the density proportional to
    int_s^inf int P(tau, h|h') dh' dtau, realized by the length-biased
    residual-life construction: draw h' uniform, (sigma, h) from
    P(.|h'), resample proportionally to sigma, then put s uniformly on
    [0, sigma].  Returns (xy, theta, s, h) arrays.
    """
    if n < 1:
        raise EmptyEnsemble("n must be >= 1")
    hp = rng.uniform(-1.0, 1.0, n)
    a, b, q, parity = sample_mu_batch(rng, n)
    sigma, h = transfer_asymptotic_arrays(a, b, q, parity, hp)
    idx = rng.choice(n, size=n, p=sigma / sigma.sum())
    s = sigma[idx] * rng.uniform(0.0, 1.0, n)
    h = h[idx]
    xy, theta = f_in.sample(rng, n)
    return xy, theta, s, h


def _jump_rounds(xy, theta, s, h, t: float, rng: np.random.Generator):
    """Evolve the extended-state ensemble for time t in place."""
    t_rem = np.full(theta.shape[0], float(t))
    while True:
        dt = np.minimum(s, t_rem)
        xy[:, 0] += dt * np.cos(theta)
        xy[:, 1] += dt * np.sin(theta)
        s -= dt
        t_rem -= dt
        active = t_rem > 0.0
        if not active.any():
            break
        m = int(active.sum())
        theta[active] += math.pi - 2.0 * np.arcsin(h[active])
        a, b, q, parity = sample_mu_batch(rng, m)
        sig, hn = transfer_asymptotic_arrays(a, b, q, parity, h[active])
        s[active] = sig
        h[active] = hn
    return xy, theta, s, h


def solve_limit(f_in: InitialDensity, t: float, n: int,
                rng: np.random.Generator,
                extent: float | None = None,
                nx: int = 32, ny: int = 32, ntheta: int = 16) -> DensityGrid:
    """Particle solution of the extended kinetic model, marginalized to
    (x, omega) at time t."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    xy, theta, s, h = sample_initial_extended(f_in, n, rng)
    if t > 0.0:
        xy, theta, s, h = _jump_rounds(xy, theta, s, h, t, rng)
    if extent is None:
        extent = f_in.support_radius + t
    grid = DensityGrid.empty(extent, t, "limit", nx=nx, ny=ny, ntheta=ntheta)
    grid.add(xy, theta, weight=1.0 / n)
    grid.meta.update(n=n, f_in=f_in.name)
    return grid


def simulate_direct(f_in: InitialDensity, r: float, t: float, n: int,
                    rng: np.random.Generator,
                    extent: float | None = None,
                    nx: int = 32, ny: int = 32, ntheta: int = 16,
                    max_cells: int = _kernels.DEFAULT_MAX_CELLS,
                    event_budget: int = DEFAULT_EVENT_BUDGET) -> DensityGrid:
    """The true billiard under Boltzmann-Grad scaling, as a density grid.

    Starting points that fall inside an obstacle at the microscopic
    scale are redrawn (an O(r^2) fraction, counted in meta).
    """
    r = check_radius(r)
    if t < 0.0:
        raise ValueError("t must be >= 0")
    est_events = int(n * (2.0 * t + 1.0))
    if est_events > event_budget:
        raise ValueError(
            f"estimated collision count {est_events} exceeds the budget "
            f"{event_budget}; reduce n or t"
        )
    scale = 2.0 * r
    xy, theta = f_in.sample(rng, n)
    micro = xy / scale
    rejections = 0
    while True:
        frac = micro - np.round(micro)
        bad = frac[:, 0] ** 2 + frac[:, 1] ** 2 < r * r
        m = int(bad.sum())
        if m == 0:
            break
        rejections += m
        xy_new, th_new = f_in.sample(rng, m)
        micro[bad] = xy_new / scale
        theta[bad] = th_new

    x_out = np.empty(n)
    y_out = np.empty(n)
    th_out = np.empty(n)
    ncoll = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int64)
    _kernels.evolve_batch(micro[:, 0].copy(), micro[:, 1].copy(), theta,
                          r, t / scale, max_cells,
                          x_out, y_out, th_out, ncoll, status)
    ok = status == _kernels.STATUS_OK
    if extent is None:
        extent = f_in.support_radius + t
    grid = DensityGrid.empty(extent, t, f"direct(r={r})",
                             nx=nx, ny=ny, ntheta=ntheta)
    grid.add(np.column_stack([x_out[ok], y_out[ok]]) * scale, th_out[ok],
             weight=1.0 / int(ok.sum()))
    grid.meta.update(
        n=n, r=r, f_in=f_in.name, rejections=rejections,
        skipped=int((~ok).sum()), collisions=int(ncoll[ok].sum()),
    )
    return grid


def lorentz_baseline(f_in: InitialDensity, t: float, n: int,
                     rng: np.random.Generator,
                     rate: float = 1.0,
                     extent: float | None = None,
                     nx: int = 32, ny: int = 32, ntheta: int = 16
                     ) -> DensityGrid:
    """Particle solution of the classical Lorentz kinetic equation.

    Exponential free flights (unit mean by default, matching the
    equilibrium mean free time of the periodic gas in the 2r unit) and
    hard-disk deflections: impact parameter uniform on (-1,1), direction
    rotated by pi - 2 arcsin(h).  rate=0 gives pure transport.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    xy, theta = f_in.sample(rng, n)
    t_rem = np.full(n, float(t))
    while True:
        if rate > 0.0:
            flight = rng.exponential(1.0 / rate, t_rem.shape[0])
        else:
            flight = np.full(t_rem.shape[0], np.inf)
        dt = np.minimum(flight, t_rem)
        xy[:, 0] += dt * np.cos(theta)
        xy[:, 1] += dt * np.sin(theta)
        t_rem -= dt
        active = t_rem > 0.0
        if not active.any():
            break
        h = rng.uniform(-1.0, 1.0, int(active.sum()))
        theta[active] += math.pi - 2.0 * np.arcsin(h)
    if extent is None:
        extent = f_in.support_radius + t
    grid = DensityGrid.empty(extent, t, "lorentz", nx=nx, ny=ny,
                             ntheta=ntheta)
    grid.add(xy, theta, weight=1.0 / n)
    grid.meta.update(n=n, f_in=f_in.name, rate=rate)
    return grid
