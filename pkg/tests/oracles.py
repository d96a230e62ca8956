"""Independent numerical oracles used to cross-check production code.

These deliberately avoid the package's eigensolver and propagator: the
bound-state energies come from Numerov integration of the stationary
equation with bisection on the matching condition.
"""
import numpy as np


def _numerov_mismatch(energy: float, x: np.ndarray, v: np.ndarray, parity: int) -> float:
    """Shoot inward from the right tail to x=0 for -u'' + v u = E u.

    For a potential symmetric about x=0, even states satisfy u'(0) = 0 and
    odd states u(0) = 0; the corresponding residual is returned and
    changes sign exactly at an eigenvalue.  Integrating inward keeps the
    under-barrier solution numerically stable (the growing direction).
    """
    h = x[1] - x[0]
    f = v - energy                      # u'' = f u
    w = 1.0 - (h * h / 12.0) * f
    n = len(x)
    u_hi = 0.0                          # u at x[n-1]: hard zero in the far tail
    u = 1e-280                          # u at x[n-2]: tiny seed
    for i in range(n - 2, 0, -1):
        u_lo = ((12.0 - 10.0 * w[i]) * u - w[i + 1] * u_hi) / w[i - 1]
        u_hi, u = u, u_lo
        if abs(u) > 1e250:              # rescale; only ratios matter
            u_hi *= 1e-250
            u *= 1e-250
    u0, u1 = u, u_hi                    # values at x[0] = 0 and x[1]
    if parity == 0:
        # Evenness across x=0: the Numerov step with u(-h) = u(+h).
        return 2.0 * w[1] * u1 - (12.0 - 10.0 * w[0]) * u0
    return u0


def shooting_eigenvalues(potential, x_max: float, guesses, *, h: float = 1e-3,
                         bracket_width: float = 8.0, tol: float = 1e-10):
    """Bound-state energies of -u'' + V(x) u = E u for V symmetric in x.

    ``guesses`` is an ordered list of (energy_guess, parity) pairs with
    parity 0 (even) or 1 (odd); each eigenvalue is found by bisection
    inside +/- bracket_width around its guess, which must isolate exactly
    one state of that parity.
    """
    n = int(round(x_max / h)) + 1
    x = np.linspace(0.0, x_max, n)
    v = potential(x)
    energies = []
    for guess, parity in guesses:
        lo, hi = guess - bracket_width, guess + bracket_width
        # The residual can be denormally small, so compare signs (a raw
        # product of two residuals underflows to zero).
        s_lo = np.sign(_numerov_mismatch(lo, x, v, parity))
        s_hi = np.sign(_numerov_mismatch(hi, x, v, parity))
        if s_lo == s_hi:
            raise RuntimeError(f"no sign change in [{lo}, {hi}] for parity {parity}")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if np.sign(_numerov_mismatch(mid, x, v, parity)) == s_hi:
                hi = mid
            else:
                lo = mid
        energies.append(0.5 * (lo + hi))
    return energies
