"""The obstacle-to-obstacle transfer map: exact (ray-traced) and
asymptotic (three-branch formula in the partition parameters A, B, Q, N),
plus the symmetry reduction of arbitrary directions to angles in
(-pi/4, pi/4).

The exact map takes an outgoing state (h', omega) on an obstacle surface
and returns (s, h) = (2 r * exit time, impact parameter at the next
collision, pre-reflection).  For slopes alpha = tan(theta) in (0, 1) the
asymptotic map reproduces the exact one up to (O(r^2), 0) away from the
branch boundaries.

Note on units: the flight length is rescaled by the obstacle shadow
width 2r, not by r.  This is the unit in which Q = eps * q_N equals the
exact rescaled flight to the convergent obstacle (eps = 2r sqrt(1+a^2)
and the obstacle at (q_N, p_N) sits at distance ~ q_N sqrt(1+a^2)), and
the unit in which the partition measure mu is a probability measure on
{0 < Q < 1/(2-A-B)}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .contfrac import PartitionParams, partition_params
from .errors import DegenerateDirection, NoCollisionWithinHorizon
from .lattice import DEFAULT_MAX_CELLS, check_radius


@dataclass(frozen=True)
class TransferResult:
    """Rescaled flight length s = 2 r * tau and the next impact parameter."""

    s: float
    h: float


@dataclass(frozen=True)
class ReducedDirection:
    """A direction folded into the fundamental angular sector.

    omega_tilde has angle theta_tilde = theta - m * pi/2 with
    m = floor((2/pi) (theta + pi/4)), so theta_tilde lies in
    [-pi/4, pi/4); sign_flip = sign(tan(theta_tilde)).
    """

    omega_tilde: np.ndarray
    sign_flip: int
    quadrant_m: int


def reduce_direction(omega) -> ReducedDirection:
    """Fold omega into the sector |theta| < pi/4 modulo quarter turns.

    Raises DegenerateDirection for slopes exactly 0 or +-1 (axis-aligned
    and diagonal directions), which have rational slope.
    """
    omega = np.asarray(omega, dtype=float)
    theta = math.atan2(omega[1], omega[0])
    m = math.floor((2.0 / math.pi) * (theta + math.pi / 4.0))
    theta_t = theta - m * math.pi / 2.0
    if theta_t == 0.0 or abs(abs(theta_t) - math.pi / 4.0) < 1e-15:
        raise DegenerateDirection(f"slope of {omega} reduces to 0 or +-1")
    return ReducedDirection(
        omega_tilde=np.array([math.cos(theta_t), math.sin(theta_t)]),
        sign_flip=1 if theta_t > 0.0 else -1,
        quadrant_m=m,
    )


def transfer_exact(hprime: float, omega, r: float,
                   max_cells: int = DEFAULT_MAX_CELLS) -> TransferResult:
    """Exact transfer map T_r(h', omega) by lattice ray tracing."""
    r = check_radius(r)
    if abs(hprime) >= 1.0:
        raise ValueError(f"|h'| must be < 1, got {hprime}")
    omega = np.asarray(omega, dtype=float)
    theta = math.atan2(omega[1], omega[0])
    status, s, h = _kernels.transfer_exact_one(hprime, theta, r, max_cells)
    if status != _kernels.STATUS_OK:
        raise NoCollisionWithinHorizon(
            f"no obstacle within {max_cells} cells for direction {omega}"
        )
    return TransferResult(s=s, h=h)


def transfer_asymptotic(p, hprime: float) -> TransferResult:
    """The three-branch limiting transfer map T_{A,B,Q,N}(h').

    p needs attributes A, B, Q, N_parity (PartitionParams or MuSample).
    Ties at the branch boundaries go to the middle branch, which is
    closed there.
    """
    a_par, b_par, q_par = p.A, p.B, p.Q
    sgn = -1.0 if p.N_parity else 1.0
    u = sgn * hprime
    if u > 1.0 - 2.0 * a_par:
        return TransferResult(s=q_par,
                              h=hprime - 2.0 * sgn * (1.0 - a_par))
    q_pr = (1.0 - q_par * (1.0 - b_par)) / (1.0 - a_par)
    if u < -1.0 + 2.0 * b_par:
        return TransferResult(s=q_pr,
                              h=hprime + 2.0 * sgn * (1.0 - b_par))
    return TransferResult(s=q_pr + q_par,
                          h=hprime + 2.0 * sgn * (a_par - b_par))


def transfer_asymptotic_arrays(a_par, b_par, q_par, parity, hprime):
    """Vectorized transfer_asymptotic over parameter arrays.

    hprime may be a scalar or an array broadcastable against the
    parameters.  Returns (s, h) arrays.
    """
    a_par = np.asarray(a_par, dtype=float)
    b_par = np.asarray(b_par, dtype=float)
    q_par = np.asarray(q_par, dtype=float)
    sgn = np.where(np.asarray(parity) % 2 == 1, -1.0, 1.0)
    hp = np.broadcast_to(np.asarray(hprime, dtype=float), a_par.shape)
    u = sgn * hp
    q_pr = (1.0 - q_par * (1.0 - b_par)) / (1.0 - a_par)

    branch1 = u > 1.0 - 2.0 * a_par
    branch2 = ~branch1 & (u < -1.0 + 2.0 * b_par)
    branch3 = ~branch1 & ~branch2

    s = np.where(branch1, q_par, np.where(branch2, q_pr, q_pr + q_par))
    h = np.where(
        branch1,
        hp - 2.0 * sgn * (1.0 - a_par),
        np.where(
            branch2,
            hp + 2.0 * sgn * (1.0 - b_par),
            hp + 2.0 * sgn * (a_par - b_par),
        ),
    )
    return s, h


def transfer_asymptotic_direction(hprime: float, omega, r: float
                                  ) -> TransferResult:
    """Asymptotic transfer map for an arbitrary direction.

    Reduces omega to the fundamental sector, evaluates the three-branch
    map on alpha = |tan(theta_tilde)| and conjugates the h components by
    the sector sign:  (s, sign * h) = T(sign * h', alpha).
    """
    red = reduce_direction(omega)
    sign = red.sign_flip
    alpha = abs(red.omega_tilde[1] / red.omega_tilde[0])
    params = partition_params(alpha, r)
    res = transfer_asymptotic(params, sign * hprime)
    return TransferResult(s=res.s, h=sign * res.h)
