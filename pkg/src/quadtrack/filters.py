"""Reference-shaping filters used by every control channel.

Two kinds.  The super-twisting command filter turns a reference signal into
a smoothed copy plus its rate, so the control laws never differentiate a
reference analytically.  The first-order lag sits between backstepping
layers (dynamic surface construction) and supplies the filtered virtual
control together with its derivative (nu - sigma)/tau.
"""

import math


def sign(v: float) -> float:
    """Sign with sign(0) = 0, so a converged filter is an exact equilibrium."""
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def command_filter_derivative(z1: float, z2: float, m1: float, m2: float, ref: float):
    """Derivatives (dz1, dz2) of the super-twisting command filter.

    z1 chases ref in finite time and z2 recovers the reference rate.  m1
    scales the square-root correction; m2 bounds the steepest reference
    slope the filter can follow.  The discontinuous sign is kept exact; under
    fixed-step integration the residual chatter in z2 is bounded by m2*dt.
    """
    err = z1 - ref
    s = sign(err)
    dz1 = -m1 * math.sqrt(abs(err)) * s + z2
    dz2 = -m2 * s
    return dz1, dz2


def first_order_filter_derivative(sigma: float, nu: float, tau: float) -> float:
    """Lag derivative (nu - sigma)/tau; stability needs tau in (0, 1]."""
    return (nu - sigma) / tau
