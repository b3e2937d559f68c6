"""Continued fractions and the partition parameters (A, B, Q, N, k).

The direction slope alpha in (0,1) is expanded as
alpha = [0; a_0, a_1, ...] = 1/(a_0 + 1/(a_1 + ...)).  Convergents and
errors follow the recursions

    p_{n+1} = a_n p_n + p_{n-1},   p_0 = 1, p_1 = 0,
    q_{n+1} = a_n q_n + q_{n-1},   q_0 = 0, q_1 = 1,
    d_n     = (-1)^{n-1} (q_n alpha - p_n),  so d_0 = 1, d_1 = alpha,

with the self-correcting error recursion d_{n+1} = d_{n-1} - a_n d_n.
Given an obstacle radius r, the quadruple (A, B, Q, N mod 2) that governs
the asymptotic transfer map is

    eps = 2 r sqrt(1 + alpha^2),
    N   = inf { n >= 0 | d_n <= eps },
    k   = -floor((eps - d_{N-1}) / d_N),
    A   = 1 - d_N / eps,
    B   = 1 - (d_{N-1} - k d_N) / eps,
    Q   = eps q_N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

from .errors import RationalSlope

# A partial quotient this large means alpha is rational to within double
# precision; the rest of the expansion would be numerical noise.
DIGIT_LIMIT = 10**15

# Errors below alpha * FLOAT_RESOLUTION are at the representation noise
# floor of the double-precision input: the expansion of the exact dyadic
# rational that alpha actually is has taken over from the number the
# caller meant (e.g. 0.4 reaches d_3 ~ 1e-16 instead of terminating).
FLOAT_RESOLUTION = 2.0**-50

# Working precision for the Gauss map (decimal digits); roughly 200 bits,
# comfortably enough for d_n down to ~1e-12.
GAUSS_DPS = 60

_MAX_DIGITS = 500

R_MAX = 0.35


@dataclass
class CFData:
    """Continued-fraction digits, convergents and errors of a slope.

    digits[n] is a_n; p[n], q[n], d[n] are indexed as in the recursion
    above, so len(p) == len(q) == len(d) == len(digits) + 2.
    """

    alpha: float
    digits: list[int]
    p: list[int]
    q: list[int]
    d: list[float]


def expand(alpha, stop_threshold: float) -> CFData:
    """Expand alpha in (0,1) until the error d_n drops to stop_threshold.

    Digits come from Gauss-map iteration in extended precision; the
    errors use the d-recursion rather than re-evaluating q_n*alpha - p_n.

    alpha may be a float or an mpmath value.  A float input is expanded
    as the exact dyadic rational it is, so its digits are only those of
    the intended real down to d_n ~ q_n * ulp(alpha); pass an extended-
    precision value (e.g. mpmath.sqrt(2) - 1 at 60 digits) to go deeper.

    Raises RationalSlope when a digit exceeds DIGIT_LIMIT or the
    remainder vanishes before the threshold is reached.
    """
    if not 0.0 < float(alpha) < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha!r}")
    if stop_threshold <= 0.0:
        raise ValueError("stop_threshold must be positive")

    x0_float = float(alpha)
    # below this scale the expansion only reflects the input's own
    # rounding: ~2^-50 relative for doubles, the working precision for
    # extended-precision inputs
    if isinstance(alpha, (float, int)):
        noise_floor = x0_float * FLOAT_RESOLUTION
    else:
        noise_floor = x0_float * 10.0 ** (5 - GAUSS_DPS)
    with mpmath.workdps(GAUSS_DPS):
        x = mpmath.mpf(alpha)
        digits: list[int] = []
        p = [1, 0]
        q = [0, 1]
        d_mp = [mpmath.mpf(1), x]
        while d_mp[-1] > stop_threshold:
            if len(digits) >= _MAX_DIGITS:
                raise RationalSlope(
                    f"no d_n <= {stop_threshold} within {_MAX_DIGITS} digits"
                )
            if x == 0:
                raise RationalSlope("expansion terminated (rational slope)")
            inv = 1 / x
            a = int(mpmath.floor(inv))
            if a > DIGIT_LIMIT:
                raise RationalSlope(f"partial quotient {a} exceeds {DIGIT_LIMIT}")
            x = inv - a
            digits.append(a)
            p.append(a * p[-1] + p[-2])
            q.append(a * q[-1] + q[-2])
            d_next = d_mp[-2] - a * d_mp[-1]
            if d_next <= 0:
                raise RationalSlope("error sequence hit zero (rational slope)")
            if d_next < noise_floor:
                raise RationalSlope(
                    f"d_{len(digits) + 1} = {float(d_next):.3e} is below the "
                    "double-precision resolution of alpha (rational slope)"
                )
            d_mp.append(d_next)
        d = [float(v) for v in d_mp]
    return CFData(alpha=float(alpha), digits=digits, p=p, q=q, d=d)


@dataclass
class PartitionParams:
    """The quadruple (A, B, Q, N mod 2) plus diagnostics.

    d_N and d_Nm1 are kept raw so failures in downstream asymptotics can
    be attributed to the expansion rather than the derived quantities.
    """

    A: float
    B: float
    Q: float
    N_parity: int
    k: int
    eps: float
    N_index: int
    d_N: float
    d_Nm1: float


def partition_params(alpha: float, r: float) -> PartitionParams:
    """Compute (A, B, Q, N mod 2, k) for slope alpha and radius r."""
    if not 0.0 < r <= R_MAX:
        raise ValueError(f"r must be in (0, {R_MAX}], got {r}")
    alpha = float(alpha)
    eps = 2.0 * r * math.sqrt(1.0 + alpha * alpha)
    # eps < 1 = d_0 is guaranteed by r <= R_MAX, so N >= 1 and d_{N-1} exists.
    cf = expand(alpha, eps)
    n = len(cf.d) - 1
    d_n = cf.d[n]
    d_nm1 = cf.d[n - 1]
    k = -math.floor((eps - d_nm1) / d_n)
    if k < 1:
        raise RationalSlope(f"k = {k} < 1: d_(N-1) = {d_nm1} not above eps = {eps}")
    a_par = 1.0 - d_n / eps
    b_par = 1.0 - (d_nm1 - k * d_n) / eps
    q_par = eps * cf.q[n]
    return PartitionParams(
        A=a_par,
        B=b_par,
        Q=q_par,
        N_parity=n % 2,
        k=k,
        eps=eps,
        N_index=n,
        d_N=d_n,
        d_Nm1=d_nm1,
    )
