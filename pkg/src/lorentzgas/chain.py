"""The Markov chain (s_n, h_n) driven by i.i.d. partition parameters, the
associated jump process on the extended phase space, and the empirical
test of the asymptotic independence hypothesis along true billiard
orbits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .contfrac import R_MAX
from .lattice import sample_gamma_plus
from .transfer import transfer_asymptotic
from .transition import MuSample, sample_mu_batch


def collision_rotation_angle(h: float) -> float:
    """CCW rotation applied to the direction at a collision with impact
    parameter h.

    With the package convention h = sin(omega, n_x) this is
    pi - 2 arcsin(h) (head-on h = 0 reverses the direction, grazing
    h = +-1 leaves it unchanged); it is verified against the exact
    billiard reflection in the test suite.  The inverse angle appears in
    the gain term of the kinetic equation, which pulls the
    pre-collisional direction back from the post-collisional one.
    """
    return math.pi - 2.0 * math.asin(h)


def rotate(omega: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * omega[0] - s * omega[1],
                     s * omega[0] + c * omega[1]])


@dataclass(frozen=True)
class ChainState:
    """Extended-phase-space point: position, direction, countdown s to
    the next collision, and the impact parameter h of that collision."""

    s: float
    h: float
    omega: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if abs(self.h) > 1.0:
            raise ValueError(f"|h| must be <= 1, got {self.h}")
        if abs(np.hypot(*self.omega) - 1.0) > 1e-12:
            raise ValueError("omega must be a unit vector")


def chain_step(state: ChainState, beta: MuSample) -> ChainState:
    """One collision of the chain: rotate the direction by the angle of
    the pending impact parameter, then draw the next flight from the
    asymptotic transfer map with parameters beta.

    The position is left untouched; jump_evolve owns transport.
    """
    res = transfer_asymptotic(beta, state.h)
    omega_new = rotate(state.omega, collision_rotation_angle(state.h))
    omega_new = omega_new / np.hypot(*omega_new)
    return ChainState(s=res.s, h=res.h, omega=omega_new, x=state.x)


@dataclass
class JumpTrajectory:
    """Piecewise-free-flight trajectory: events[k] = (t_k, state after the
    k-th collision); events[0] is the initial state at t = 0."""

    events: list
    t_max: float

    def state_at(self, t: float) -> ChainState:
        """Linear interpolation within the flight containing time t."""
        if not 0.0 <= t <= self.t_max:
            raise ValueError(f"t must be in [0, {self.t_max}]")
        k = 0
        for m, (tm, _) in enumerate(self.events):
            if tm <= t:
                k = m
            else:
                break
        t0, st = self.events[k]
        dt = t - t0
        return ChainState(s=st.s - dt, h=st.h, omega=st.omega,
                          x=st.x + dt * st.omega)

    @property
    def n_collisions(self) -> int:
        return len(self.events) - 1


def jump_evolve(init: ChainState, t_max: float,
                rng: np.random.Generator) -> JumpTrajectory:
    """Run the jump process from init until t_max.

    Free flight at unit speed while the countdown s decreases at unit
    rate; at s = 0 the direction rotates per the pending h and a fresh
    mu-sample drives the next (s, h).
    """
    if t_max <= 0.0:
        raise ValueError("t_max must be positive")
    events = [(0.0, init)]
    t, state = 0.0, init
    while t + state.s < t_max:
        t = t + state.s
        moved = ChainState(s=0.0, h=state.h, omega=state.omega,
                           x=state.x + state.s * state.omega)
        a, b, q, parity = sample_mu_batch(rng, 1)
        beta = MuSample(A=float(a[0]), B=float(b[0]), Q=float(q[0]),
                        N_parity=int(parity[0]))
        state = chain_step(moved, beta)
        events.append((t, state))
    return JumpTrajectory(events=events, t_max=t_max)


def _cell_index(a, b, q, parity, n_bins: int):
    """Flat cell index of (A, B, Q, N) on a regular grid; A, B, Q are
    binned uniformly on (0, 1) (the support of mu has Q <= 1)."""
    ia = np.clip((np.asarray(a) * n_bins).astype(int), 0, n_bins - 1)
    ib = np.clip((np.asarray(b) * n_bins).astype(int), 0, n_bins - 1)
    iq = np.clip((np.asarray(q) * n_bins).astype(int), 0, n_bins - 1)
    return ((ia * n_bins + ib) * n_bins + iq) * 2 + np.asarray(parity)


def _tv(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def independence_stats(r: float, n_steps: int, n_samples: int,
                       rng: np.random.Generator,
                       marginal_bins: int = 4, pair_bins: int = 2,
                       mu_reference_n: int = 2_000_000,
                       max_cells: int = _kernels.DEFAULT_MAX_CELLS) -> dict:
    """Empirical statistics for the asymptotic independence hypothesis.

    Samples gamma+_r, iterates the true billiard map n_steps times,
    records the partition parameters b^n = (A, B, Q, N mod 2) of the
    direction at each collision, and reports
      - TV between each marginal law of b^n and mu, on a
        marginal_bins^3 x 2 grid;
      - TV between the joint law of (b^1, b^2) and the product of its
        marginals, on a pair_bins^3 x 2 grid per factor.

    These are diagnostics: the hypothesis is an asymptotic statement and
    no threshold is asserted.
    """
    if not 0.0 < r <= R_MAX:
        raise ValueError(f"r must be in (0, {R_MAX}]")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    phi, h, theta = sample_gamma_plus(rng, n_samples)
    h_hist = np.empty((n_samples, n_steps + 1))
    theta_hist = np.empty((n_samples, n_steps + 1))
    status = np.empty(n_samples, dtype=np.int64)
    _kernels.billiard_orbit_batch(phi, h, theta, r, n_steps, max_cells,
                                  h_hist, theta_hist, status)
    ok = status == _kernels.STATUS_OK

    # alpha_n = min(|tan theta|, |cot theta|) of the outgoing direction
    b_params = []
    for step in range(1, n_steps + 1):
        th = theta_hist[ok, step - 1]
        tan = np.abs(np.tan(th))
        alpha = np.minimum(tan, 1.0 / tan)
        a = np.empty(alpha.shape[0])
        b = np.empty_like(a)
        q = np.empty_like(a)
        par = np.empty(alpha.shape[0], dtype=np.int64)
        st = np.empty_like(par)
        _kernels.partition_params_batch(alpha, r, a, b, q, par, st)
        b_params.append((a, b, q, par, st == _kernels.STATUS_OK))

    # reference mu histogram from a large exact sample
    ref_rng = np.random.default_rng(np.random.SeedSequence(20240901))
    ra, rb, rq, rpar = sample_mu_batch(ref_rng, mu_reference_n)

    n_marg = marginal_bins**3 * 2
    mu_marg = np.bincount(_cell_index(ra, rb, rq, rpar, marginal_bins),
                          minlength=n_marg).astype(float)

    marginal_tv = []
    for a, b, q, par, good in b_params:
        emp = np.bincount(_cell_index(a[good], b[good], q[good], par[good],
                                      marginal_bins),
                          minlength=n_marg).astype(float)
        marginal_tv.append(_tv(emp, mu_marg))

    result = {
        "r": r,
        "n_samples": int(ok.sum()),
        "skipped": int((~ok).sum()),
        "marginal_tv": marginal_tv,
    }

    if n_steps >= 2:
        a1, b1, q1, p1, g1 = b_params[0]
        a2, b2, q2, p2, g2 = b_params[1]
        good = g1 & g2
        n_pair = pair_bins**3 * 2
        c1 = _cell_index(a1[good], b1[good], q1[good], p1[good], pair_bins)
        c2 = _cell_index(a2[good], b2[good], q2[good], p2[good], pair_bins)
        joint = np.bincount(c1 * n_pair + c2,
                            minlength=n_pair * n_pair).astype(float)
        m1 = np.bincount(c1, minlength=n_pair).astype(float)
        m2 = np.bincount(c2, minlength=n_pair).astype(float)
        prod = np.outer(m1 / m1.sum(), m2 / m2.sum()).ravel()
        result["pair_tv"] = _tv(joint, prod)
    return result
