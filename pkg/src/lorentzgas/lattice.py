"""Exact geometry and dynamics of a point particle among disks of radius r
centered at the integer lattice.

Conventions (fixed once, used everywhere):
  - n_x is the unit normal of the billiard table at a boundary point,
    pointing away from the obstacle center, i.e. into the free domain.
  - The impact parameter is h = omega cross n_x, the sine of the CCW
    angle from omega to n_x; it is positive when n_x points to the left
    of omega and is the same for the pre- and post-collisional direction.
    (Of the two possible signs this is the one under which the exact
    transfer map reproduces the three-branch asymptotic formula with the
    parity N mod 2 as written; see transfer.py.)
  - Outgoing states (the domain of the billiard map) satisfy
    omega . n_x > 0; reflection acts on the pre-collisional direction,
    which satisfies omega . n_x < 0.
  - Rescaled flight lengths are s = 2 r tau; the shadow width 2r is the
    Boltzmann-Grad unit of the limiting formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NoCollisionWithinHorizon

R_MAX = 0.35

DEFAULT_MAX_CELLS = _kernels.DEFAULT_MAX_CELLS


def check_radius(r: float) -> float:
    """Validate an obstacle radius (0 < r <= R_MAX)."""
    r = float(r)
    if not 0.0 < r <= R_MAX:
        raise ValueError(f"obstacle radius must be in (0, {R_MAX}], got {r}")
    return r


@dataclass(frozen=True)
class PhasePoint:
    """Position in the free domain plus a unit direction."""

    x: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        if abs(np.hypot(*self.omega) - 1.0) > 1e-12:
            raise ValueError("omega must be a unit vector")


@dataclass(frozen=True)
class BoundaryState:
    """Outgoing state on an obstacle boundary in (h, omega) coordinates."""

    lattice_point: tuple[int, int]
    h: float
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        if abs(self.h) > 1.0:
            raise ValueError(f"|h| must be <= 1, got {self.h}")
        if abs(np.hypot(*self.omega) - 1.0) > 1e-12:
            raise ValueError("omega must be a unit vector")


@dataclass(frozen=True)
class FlightOutcome:
    """First obstacle intersection of a ray: exit time and arrival data."""

    tau: float
    hit_point: np.ndarray
    hit_center: tuple[int, int]
    h_next: float


def flight(p: PhasePoint, r: float,
           max_cells: int = DEFAULT_MAX_CELLS) -> FlightOutcome:
    """First intersection of the ray from p with any obstacle circle.

    h_next is the impact parameter at the arrival point (pre-reflection;
    the value is unchanged by the reflection there).  Raises
    NoCollisionWithinHorizon when no obstacle is met within max_cells
    grid cells, which signals a (near-)rational corridor direction.
    """
    r = check_radius(r)
    status, t, ci, cj, h = _kernels.ray_trace(
        p.x[0], p.x[1], p.omega[0], p.omega[1], r, max_cells, np.inf
    )
    if status != _kernels.STATUS_OK:
        raise NoCollisionWithinHorizon(
            f"no obstacle within {max_cells} cells from {p.x} along {p.omega}"
        )
    return FlightOutcome(
        tau=t,
        hit_point=p.x + t * p.omega,
        hit_center=(ci, cj),
        h_next=h,
    )


def reflect(omega: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Specular reflection omega - 2 (omega . n) n.

    n is the table normal at the collision point (pointing away from the
    obstacle center); the pre-collisional direction has omega . n < 0.
    """
    omega = np.asarray(omega, dtype=float)
    n = np.asarray(n, dtype=float)
    return omega - 2.0 * float(omega @ n) * n


def boundary_lift(b: BoundaryState, r: float) -> PhasePoint:
    """Inverse of the (h, omega) coordinatization of outgoing states.

    Returns the unique boundary point of the obstacle at b.lattice_point
    whose outgoing impact parameter for direction b.omega equals b.h.
    """
    r = check_radius(r)
    theta = math.atan2(b.omega[1], b.omega[0])
    phi = theta + math.asin(b.h)
    x = np.array(
        [b.lattice_point[0] + r * math.cos(phi),
         b.lattice_point[1] + r * math.sin(phi)]
    )
    return PhasePoint(x=x, omega=b.omega)


def impact_parameter(x: np.ndarray, center, omega: np.ndarray, r: float) -> float:
    """h = omega cross n_x for the boundary point x on the circle at center."""
    n = (np.asarray(x, dtype=float) - np.asarray(center, dtype=float)) / r
    return float(omega[0] * n[1] - omega[1] * n[0])


def billiard_map(b: BoundaryState, r: float,
                 max_cells: int = DEFAULT_MAX_CELLS) -> BoundaryState:
    """One step of the billiard map in boundary coordinates.

    Composition boundary_lift -> flight -> reflect, returned as the
    outgoing state on the next obstacle.
    """
    p = boundary_lift(b, r)
    out = flight(p, r, max_cells=max_cells)
    n = (out.hit_point - np.asarray(out.hit_center, dtype=float)) / r
    omega_new = reflect(p.omega, n)
    omega_new = omega_new / np.hypot(*omega_new)
    return BoundaryState(
        lattice_point=out.hit_center, h=out.h_next, omega=omega_new
    )


def time_reversed(b: BoundaryState, r: float) -> BoundaryState:
    """The time-reversed outgoing state at the same boundary point.

    Reverses the incoming ray of b: the boundary point is kept, the
    direction is the reflected one reversed, which is again outgoing.
    """
    # The outgoing state (h, omega) sits at normal angle
    # phi = theta - arcsin(h).  Reversing the pre-collisional ray of the
    # reflection that produced omega gives direction -reflect^{-1}... ;
    # equivalently, reverse omega and reflect at the same point.
    p = boundary_lift(b, r)
    n = (p.x - np.asarray(b.lattice_point, dtype=float)) / r
    omega_rev = -reflect(b.omega, n)
    h_rev = impact_parameter(p.x, b.lattice_point, omega_rev, r)
    return BoundaryState(lattice_point=b.lattice_point, h=h_rev,
                         omega=omega_rev)


def evolve(p: PhasePoint, r: float, t: float,
           max_cells: int = DEFAULT_MAX_CELLS) -> PhasePoint:
    """State at time t under the billiard flow (unit speed, specular
    reflections)."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    r = check_radius(r)
    theta = math.atan2(p.omega[1], p.omega[0])
    status, x, y, theta_f, _ = _kernels.evolve_one(
        p.x[0], p.x[1], theta, r, t, max_cells
    )
    if status != _kernels.STATUS_OK:
        raise NoCollisionWithinHorizon(
            f"flight exceeded {max_cells} cells during evolve"
        )
    return PhasePoint(x=np.array([x, y]),
                      omega=np.array([math.cos(theta_f), math.sin(theta_f)]))


def sample_gamma_plus(rng: np.random.Generator, n: int):
    """Draw n samples of the invariant measure gamma+_r on outgoing states.

    gamma+_r ~ (omega . n_x) dx domega is uniform in (h, theta) with
    theta = phi + arcsin(h); returns (phi, h, theta) arrays (the lattice
    point is quotiented away).
    """
    phi = rng.uniform(-math.pi, math.pi, n)
    h = rng.uniform(-1.0, 1.0, n)
    theta = phi - np.arcsin(h)
    return phi, h, theta
