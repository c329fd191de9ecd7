"""Uniform (state-independent) error and disturbance.

Two formulations are covered: the supremum of the RMS error/disturbance
over all input states, and the approximate-eigenstate deviation Delta_c.
For linear measurements both reduce to the same case split on c and d,
which is evaluated analytically here. The sweeps corroborate that split
numerically; a finite sweep can only ever report "diverging", never
certify an infinite value.
"""

import collections
import logging
import math

from edrlab.config import ConfigError, SweepConfig
from edrlab.moments import GaussianState, rms_disturbance, rms_error
from edrlab.symplectic import CouplingParams, solve_dynamics

UNIFORM_TOL = 1e-12

FINITE = "finite"
INFINITE = "infinite"
INDETERMINATE = "indeterminate"

CONVERGED = "converged"
DIVERGING = "diverging"

ERROR = "error"
DISTURBANCE = "disturbance"

# Sweeps of an infinite Delta_c must get past this
DIVERGENCE_TARGET = 1e3
MAX_EXTRA_DECADES = 40


class NotDivergent(ValueError):
    pass


class ExtendedValue(collections.namedtuple("ExtendedValue", ["kind", "value"])):
    __slots__ = ()

    @classmethod
    def finite(cls, value):
        if value < 0:
            raise ValueError("Finite extended values are nonnegative")
        return cls(FINITE, float(value))

    @classmethod
    def infinite(cls):
        return cls(INFINITE, None)

    @property
    def is_finite(self):
        return self.kind == FINITE

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d["value"])


class ProductVerdict(
    collections.namedtuple("ProductVerdict", ["kind", "value", "satisfies_bound"])
):
    """Product of two extended values.

    0 * infinity stays indeterminate: it is neither zero nor infinite, and
    in particular cannot be concluded to be above hbar / 2.
    """

    __slots__ = ()

    def to_dict(self):
        return {
            "kind": self.kind,
            "value": self.value,
            "satisfies_bound": self.satisfies_bound,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d["value"], d["satisfies_bound"])


def combine_product(x, y, hbar=1.0, tol=1e-12):
    if x.is_finite and y.is_finite:
        value = x.value * y.value
        return ProductVerdict(FINITE, value, value >= hbar / 2 - tol)
    if (x.is_finite and x.value == 0) or (y.is_finite and y.value == 0):
        return ProductVerdict(INDETERMINATE, None, None)
    return ProductVerdict(INFINITE, None, True)


def _clean_zero(value, tol):
    return 0.0 if abs(value) <= tol else abs(value)


def uniform_error(m, xi, tol=UNIFORM_TOL):
    """sup over psi of the RMS error: |d| ||Qbar xi|| if c = 1, else infinite."""
    if abs(m.c - 1) > tol:
        return ExtendedValue.infinite()
    norm = math.sqrt(xi.position_moments().second_moment)
    return ExtendedValue.finite(_clean_zero(m.d, tol) * norm)


def uniform_disturbance(m, xi, tol=UNIFORM_TOL):
    """sup over psi of the RMS disturbance: |c| ||Pbar xi|| if d = 1."""
    if abs(m.d - 1) > tol:
        return ExtendedValue.infinite()
    norm = math.sqrt(xi.momentum_moments().second_moment)
    return ExtendedValue.finite(_clean_zero(m.c, tol) * norm)


def appleby_product(m, xi, hbar=1.0):
    return combine_product(uniform_error(m, xi), uniform_disturbance(m, xi), hbar)


def _sign(x):
    return -1.0 if x < 0 else 1.0


def divergence_witness(m, xi, target, which=ERROR, tol=UNIFORM_TOL):
    """A state whose RMS error (or disturbance) exceeds target.

    The witness is a ground-width Gaussian displaced along Q (or P); the
    displacement direction is chosen so that the cross term with the probe
    mean cannot reduce the result.
    """
    if not target > 0:
        raise ValueError("target must be positive")
    hbar = xi.hbar
    if which == ERROR:
        slope, other = m.c - 1, m.d * xi.mean_q
        measure = rms_error
    elif which == DISTURBANCE:
        slope, other = m.d - 1, -m.c * xi.mean_p
        measure = rms_disturbance
    else:
        raise ValueError("which must be 'error' or 'disturbance'")
    if abs(slope) <= tol:
        raise NotDivergent(
            "RMS {0} does not depend on the input state for this model".format(which)
        )

    direction = _sign(slope * other)
    shift = target / abs(slope) + 1.0
    while True:
        if which == ERROR:
            psi = GaussianState(mean_q=direction * shift, hbar=hbar)
        else:
            psi = GaussianState(mean_p=direction * shift, hbar=hbar)
        if measure(m, psi, xi) > target:
            return psi
        shift *= 2


def finite_family_sup(m, xi, family):
    family = list(family)
    if not family:
        raise ValueError("State family must not be empty")
    max_eps = max(rms_error(m, psi, xi) for psi in family)
    max_eta = max(rms_disturbance(m, psi, xi) for psi in family)
    return max_eps * max_eta


def blw_deviation(m, psi, xi, theta):
    """RMS deviation of the meter reading c Q + d Qbar from theta."""
    mean = m.c * psi.mean_q + m.d * xi.mean_q - theta
    var = m.c ** 2 * psi.var_q + m.d ** 2 * xi.var_q
    return math.sqrt(var + mean ** 2)


def blw_momentum_deviation(m, psi, xi, theta):
    """RMS deviation of the final momentum d P - c Pbar from theta."""
    mean = m.d * psi.mean_p - m.c * xi.mean_p - theta
    var = m.d ** 2 * psi.var_p + m.c ** 2 * xi.var_p
    return math.sqrt(var + mean ** 2)


SupremumEstimate = collections.namedtuple(
    "SupremumEstimate", ["value", "sweep_max", "trend"]
)


def _check_sweep(eps_eig, sweep, hbar):
    if not sweep.theta_scales or not sweep.width_fractions:
        raise ConfigError("Sweep has no theta scales or no widths")
    if not eps_eig > 0:
        raise ConfigError("eps_eig must be positive, got {0!r}".format(eps_eig))
    # Both w^2 and the conjugate variance hbar^2 / (4 w^2) must be positive floats
    for fraction in sweep.width_fractions:
        width = eps_eig * fraction
        var = width * width
        in_range = 0 < var < math.inf
        if in_range:
            conjugate = hbar * hbar / (4 * var)
            in_range = 0 < conjugate < math.inf
        if not in_range:
            raise ConfigError(
                "Sweep width {0!r} * {1!r} is out of floating-point range".format(
                    eps_eig, fraction
                )
            )


def _trend(decade_maxima, growth_tol):
    # Diverging if each of the last three decades grew on the one before
    tail = decade_maxima[-3:]
    if len(tail) < 3:
        return CONVERGED
    grew = all(b > a * (1 + growth_tol) for a, b in zip(tail, tail[1:]))
    return DIVERGING if grew else CONVERGED


def _approximate_eigenstate_sweep(deviation, base_scale, eps_eig, sweep, narrow):
    decade_maxima = []
    thetas_probed = []
    for scale in sorted(sweep.theta_scales):
        decade_max = 0.0
        for sign in (1.0, -1.0):
            theta = sign * scale * base_scale
            thetas_probed.append(abs(theta))
            for fraction in sweep.width_fractions:
                width = eps_eig * fraction
                decade_max = max(decade_max, deviation(narrow(theta, width), theta))
        logging.info(f"Approximate eigenstate sweep: |theta|={scale * base_scale:.6g}, "
                     f"max deviation {decade_max:.6g}")
        decade_maxima.append(decade_max)
    return SupremumEstimate(
        value=max(decade_maxima),
        sweep_max=max(thetas_probed),
        trend=_trend(decade_maxima, sweep.growth_tol),
    )


def blw_delta_c_estimate(m, xi, eps_eig=None, sweep=None):
    """Numerical Delta_c(Q, Q') from narrow Gaussians centered at theta.

    For a Gaussian with mean theta, ||(Q - theta) psi|| equals its position
    standard deviation, so widths up to eps_eig satisfy the constraint.
    """
    if sweep is None:
        sweep = SweepConfig()
    if eps_eig is None:
        eps_eig = sweep.eps_eig
    hbar = xi.hbar
    _check_sweep(eps_eig, sweep, hbar)

    def narrow(theta, width):
        return GaussianState(
            mean_q=theta,
            var_q=width * width,
            var_p=hbar ** 2 / (4 * width * width),
            hbar=hbar,
        )

    base = max(1.0, math.sqrt(xi.position_moments().second_moment))
    return _approximate_eigenstate_sweep(
        lambda psi, theta: blw_deviation(m, psi, xi, theta),
        base,
        eps_eig,
        sweep,
        narrow,
    )


def blw_delta_c_disturbance_estimate(m, xi, eps_eig=None, sweep=None):
    if sweep is None:
        sweep = SweepConfig()
    if eps_eig is None:
        eps_eig = sweep.eps_eig
    hbar = xi.hbar
    _check_sweep(eps_eig, sweep, hbar)

    def narrow(theta, width):
        return GaussianState(
            mean_p=theta,
            var_p=width * width,
            var_q=hbar ** 2 / (4 * width * width),
            hbar=hbar,
        )

    base = max(1.0, math.sqrt(xi.momentum_moments().second_moment))
    return _approximate_eigenstate_sweep(
        lambda psi, theta: blw_momentum_deviation(m, psi, xi, theta),
        base,
        eps_eig,
        sweep,
        narrow,
    )


def blw_delta_c(m, xi):
    """Delta_c(Q, Q') and Delta_c(P, P'); they coincide with the uniform values."""
    return uniform_error(m, xi), uniform_disturbance(m, xi)


def blw_product_verdict(m, xi, hbar=1.0):
    delta_q, delta_p = blw_delta_c(m, xi)
    return combine_product(delta_q, delta_p, hbar)


def _side_status(analytic, estimate, eps_eig, target, tol=1e-6):
    if analytic.is_finite:
        close = abs(estimate.value - analytic.value) <= eps_eig + tol
        return estimate.trend == CONVERGED and close
    return estimate.trend == DIVERGING and estimate.value > target


BLWEquivalence = collections.namedtuple(
    "BLWEquivalence",
    [
        "uniform_error",
        "uniform_disturbance",
        "q_estimate",
        "p_estimate",
        "q_consistent",
        "p_consistent",
    ],
)


def _sweep_past(estimate_fcn, m, xi, eps_eig, sweep, target):
    """Add theta decades to the sweep until the estimate exceeds target."""
    estimate = estimate_fcn(m, xi, eps_eig, sweep)
    for _ in range(MAX_EXTRA_DECADES):
        if estimate.value > target:
            break
        top = max(sweep.theta_scales)
        sweep = sweep._replace(theta_scales=sweep.theta_scales + (top * 10,))
        estimate = estimate_fcn(m, xi, eps_eig, sweep)
    return estimate


def blw_equivalence(m, xi, eps_eig=None, sweep=None, target=DIVERGENCE_TARGET):
    """Compare the analytic Delta_c values with their numerical sweeps.

    A side whose analytic value is infinite is swept over further theta
    decades until its estimate exceeds target, and is consistent only if
    it does so with a diverging trend.
    """
    if sweep is None:
        sweep = SweepConfig()
    if eps_eig is None:
        eps_eig = sweep.eps_eig
    ue = uniform_error(m, xi)
    ud = uniform_disturbance(m, xi)
    if ue.is_finite:
        q_est = blw_delta_c_estimate(m, xi, eps_eig, sweep)
    else:
        q_est = _sweep_past(blw_delta_c_estimate, m, xi, eps_eig, sweep, target)
    if ud.is_finite:
        p_est = blw_delta_c_disturbance_estimate(m, xi, eps_eig, sweep)
    else:
        p_est = _sweep_past(
            blw_delta_c_disturbance_estimate, m, xi, eps_eig, sweep, target
        )
    return BLWEquivalence(
        uniform_error=ue,
        uniform_disturbance=ud,
        q_estimate=q_est,
        p_estimate=p_est,
        q_consistent=_side_status(ue, q_est, eps_eig, target),
        p_consistent=_side_status(ud, p_est, eps_eig, target),
    )


def generic_infinite_fraction(rng, samples=1000, bound=5.0):
    """Fraction of random couplings with both uniform values infinite."""
    xi = GaussianState()
    hits = 0
    for _ in range(samples):
        p = CouplingParams(*rng.uniform(-bound, bound, size=3))
        m = solve_dynamics(p)
        both_infinite = not (
            uniform_error(m, xi).is_finite or uniform_disturbance(m, xi).is_finite
        )
        if both_infinite:
            hits += 1
    return hits / samples
