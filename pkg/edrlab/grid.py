"""Brute-force wavefunction oracle for the RMS error and disturbance.

Every observable the error and disturbance depend on is diagonal either in
the position representation (Q(0) and Qbar(dt) commute) or in the momentum
representation (P(0) and P(dt) commute). The oracle therefore never evolves
a wavefunction: it samples the two input states, forms the joint outcome
distribution of the commuting pair on the product grid, and integrates the
squared deviation by quadrature.

Fourier convention:

    w_hat(p) = (2 pi hbar)^(-1/2) * integral w(q) exp(-i p q / hbar) dq

evaluated with an FFT; the output grid is centered with fftshift, so that
index k holds p = (k - n/2) * dp with dp = 2 pi hbar / (n dx).
"""

import collections
import logging
import math

import numpy
import scipy.fft

from edrlab.moments import Moments

DEFAULT_N = 4096
DEFAULT_SPAN = 12.0
NORM_TOL = 1e-9
MIN_POINTS = 16
# Rows of the product grid summed at a time
BLOCK_ROWS = 256


class GridError(ValueError):
    pass


def is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


def check_grid_size(n):
    if not isinstance(n, (int, numpy.integer)) or n < MIN_POINTS:
        raise GridError(
            "Grid needs at least {0} points, got {1!r}".format(MIN_POINTS, n)
        )
    if not is_power_of_two(n):
        raise GridError("Grid size must be a power of two, got {0}".format(n))


class GridWavefunction:
    """Complex amplitudes on the uniform grid x_min + j * dx, j < n."""

    def __init__(self, amplitudes, x_min, dx, normalize=False):
        amplitudes = numpy.asarray(amplitudes, dtype=complex)
        if amplitudes.ndim != 1:
            raise GridError("Amplitudes must be a one-dimensional array")
        check_grid_size(len(amplitudes))
        if not dx > 0:
            raise GridError("Grid spacing must be positive, got {0!r}".format(dx))
        norm = float(numpy.sum(numpy.abs(amplitudes) ** 2) * dx)
        if normalize:
            if not norm > 0:
                raise GridError("Cannot normalize a zero wavefunction")
            amplitudes = amplitudes / math.sqrt(norm)
        elif abs(norm - 1) > NORM_TOL:
            raise GridError("Wavefunction norm is {0!r}, expected 1".format(norm))
        self.amplitudes = amplitudes
        self.x_min = float(x_min)
        self.dx = float(dx)

    def __eq__(self, other):
        return (
            self.x_min == other.x_min
            and self.dx == other.dx
            and numpy.array_equal(self.amplitudes, other.amplitudes)
        )

    @property
    def n(self):
        return len(self.amplitudes)

    def positions(self):
        return self.x_min + self.dx * numpy.arange(self.n)

    def density(self):
        return numpy.abs(self.amplitudes) ** 2

    def norm(self):
        return float(numpy.sum(self.density()) * self.dx)

    def position_moments(self):
        q = self.positions()
        w = self.density() * self.dx
        return Moments(float(w @ q), float(w @ (q * q)))

    def momentum_moments(self, hbar=1.0):
        p, rho = momentum_density(self, hbar)
        dp = p[1] - p[0]
        w = rho * dp
        return Moments(float(w @ p), float(w @ (p * p)))


def momentum_density(w, hbar=1.0):
    n = w.n
    amps_hat = scipy.fft.fftshift(scipy.fft.fft(w.amplitudes))
    p = scipy.fft.fftshift(scipy.fft.fftfreq(n, d=w.dx)) * (2 * math.pi * hbar)
    density = numpy.abs(amps_hat) ** 2 * (w.dx ** 2 / (2 * math.pi * hbar))
    return p, density


def momentum_cutoff(dx, hbar=1.0):
    return math.pi * hbar / dx


def sample(amplitude_fcn, center, half_width, n, hbar=1.0, p_extent=0.0):
    """Sample a wavefunction on [center - half_width, center + half_width).

    p_extent is the largest |p| the state needs resolved; the grid is
    rejected if its Nyquist momentum falls short of it, or if the samples
    lose more than the normalization tolerance to truncation or aliasing.
    """
    check_grid_size(n)
    if not half_width > 0:
        raise GridError("Grid half width must be positive")
    dx = 2 * half_width / n
    x_min = center - half_width
    if p_extent > momentum_cutoff(dx, hbar):
        raise GridError(
            "Grid too coarse: momentum cutoff {0:.6g} below required {1:.6g}".format(
                momentum_cutoff(dx, hbar), p_extent
            )
        )
    q = x_min + dx * numpy.arange(n)
    amplitudes = amplitude_fcn(q)
    raw_norm = float(numpy.sum(numpy.abs(amplitudes) ** 2) * dx)
    if abs(raw_norm - 1) > NORM_TOL:
        raise GridError(
            "Grid misses normalization by {0:.3g} (span too small or n too low)".format(
                abs(raw_norm - 1)
            )
        )
    logging.info(f"Sampled wavefunction: n={n}, x_min={x_min:.6g}, dx={dx:.6g}")
    return GridWavefunction(amplitudes, x_min, dx, normalize=True)


def gaussian_amplitude(s):
    """Closure evaluating the pure Gaussian with the moments of s.

    The chirp coefficient kappa = cov_qp / (2 hbar var_q) produces the
    symmetrized covariance; var_p then follows from purity.
    """
    kappa = s.cov_qp / (2 * s.hbar * s.var_q)
    prefactor = (2 * math.pi * s.var_q) ** -0.25

    def amplitude(q):
        x = q - s.mean_q
        phase = kappa * x * x + s.mean_p * x / s.hbar
        return prefactor * numpy.exp(-x * x / (4 * s.var_q) + 1j * phase)

    return amplitude


def from_gaussian(s, n=DEFAULT_N, span_sigmas=DEFAULT_SPAN):
    if not s.is_pure():
        raise GridError(
            "Moments are not those of a pure state "
            "(var_q var_p - cov_qp^2 = {0!r}, hbar^2/4 = {1!r})".format(
                s.determinant, s.hbar ** 2 / 4
            )
        )
    if not span_sigmas > 0:
        raise GridError("span_sigmas must be positive")
    sigma_q = math.sqrt(s.var_q)
    sigma_p = math.sqrt(s.var_p)
    return sample(
        gaussian_amplitude(s),
        s.mean_q,
        span_sigmas * sigma_q,
        n,
        hbar=s.hbar,
        p_extent=abs(s.mean_p) + span_sigmas * sigma_p,
    )


def _joint_mean_square(x, wx, y, wy, cx, cy):
    """sum_ij wx_i wy_j (cx x_i + cy y_j)^2 over the product grid.

    Rows are reduced in a fixed order, so repeated runs agree bit for bit.
    """
    total = 0.0
    for start in range(0, len(x), BLOCK_ROWS):
        stop = start + BLOCK_ROWS
        dev = cx * x[start:stop, numpy.newaxis] + cy * y[numpy.newaxis, :]
        total += float(wx[start:stop] @ ((dev * dev) @ wy))
    return total


def oracle_rms_error(m, psi, xi):
    # theta = q, omega = c q + d qbar
    ms = _joint_mean_square(
        psi.positions(),
        psi.density() * psi.dx,
        xi.positions(),
        xi.density() * xi.dx,
        m.c - 1,
        m.d,
    )
    return math.sqrt(ms)


def oracle_rms_disturbance(m, psi, xi, hbar=1.0):
    # theta = p, omega = d p - c pbar
    p, rho = momentum_density(psi, hbar)
    pbar, rhobar = momentum_density(xi, hbar)
    ms = _joint_mean_square(
        p,
        rho * (p[1] - p[0]),
        pbar,
        rhobar * (pbar[1] - pbar[0]),
        m.d - 1,
        -m.c,
    )
    return math.sqrt(ms)


POSITION = "position"
MOMENTUM = "momentum"


class JointDistribution:
    """Outcome distribution of a commuting pair on the product grid.

    Support point (i, j) has theta = theta_values[i], omega =
    omega_values[i, j] and probability weights[i, j].
    """

    def __init__(self, theta_values, omega_values, weights):
        weights = numpy.asarray(weights, dtype=float)
        if numpy.any(weights < 0):
            raise GridError("Joint distribution has negative weights")
        total = float(weights.sum())
        if abs(total - 1) > NORM_TOL:
            raise GridError("Joint distribution has total weight {0!r}".format(total))
        self.theta_values = numpy.asarray(theta_values, dtype=float)
        self.omega_values = numpy.asarray(omega_values, dtype=float)
        self.weights = weights

    def theta_marginal(self):
        return self.weights.sum(axis=1)

    def _theta_grid(self):
        return numpy.broadcast_to(
            self.theta_values[:, numpy.newaxis], self.weights.shape
        )

    def mean_square_deviation(self):
        dev = self.omega_values - self._theta_grid()
        return float(numpy.sum(self.weights * dev * dev))

    def omega_moments(self):
        mean = float(numpy.sum(self.weights * self.omega_values))
        var = float(numpy.sum(self.weights * (self.omega_values - mean) ** 2))
        return mean, var

    def correlation(self):
        theta = self._theta_grid()
        mean_t = float(numpy.sum(self.weights * theta))
        mean_o, var_o = self.omega_moments()
        var_t = float(numpy.sum(self.weights * (theta - mean_t) ** 2))
        cov = float(
            numpy.sum(self.weights * (theta - mean_t) * (self.omega_values - mean_o))
        )
        if var_t == 0 or var_o == 0:
            return 0.0
        return cov / math.sqrt(var_t * var_o)


def joint_outcome_distribution(m, psi, xi, which=POSITION, hbar=1.0):
    if which == POSITION:
        theta, w_theta = psi.positions(), psi.density() * psi.dx
        other, w_other = xi.positions(), xi.density() * xi.dx
        omega = m.c * theta[:, numpy.newaxis] + m.d * other[numpy.newaxis, :]
    elif which == MOMENTUM:
        theta, rho = momentum_density(psi, hbar)
        other, rhobar = momentum_density(xi, hbar)
        w_theta = rho * (theta[1] - theta[0])
        w_other = rhobar * (other[1] - other[0])
        omega = m.d * theta[:, numpy.newaxis] - m.c * other[numpy.newaxis, :]
    else:
        raise ValueError(
            "which must be 'position' or 'momentum', got {0!r}".format(which)
        )
    return JointDistribution(theta, omega, numpy.outer(w_theta, w_other))


class PhaseSpaceDensity(
    collections.namedtuple("PhaseSpaceDensity", ["q_values", "p_values", "density"])
):
    __slots__ = ()

    def q_marginal(self):
        dp = self.p_values[1] - self.p_values[0]
        return self.density.sum(axis=1) * dp

    def p_marginal(self):
        dq = self.q_values[1] - self.q_values[0]
        return self.density.sum(axis=0) * dq


def error_free_joint_povm_density(psi, xi, hbar=1.0):
    """Joint density of (Qbar(dt), P(dt)) = (Q, -Pbar) for error-free models.

    Equal to |psi(q)|^2 |xi_hat(-p)|^2; the momentum axis is the probe's
    FFT grid reflected through zero.
    """
    pbar, rhobar = momentum_density(xi, hbar)
    p_values = -pbar[::-1]
    density = numpy.outer(psi.density(), rhobar[::-1])
    return PhaseSpaceDensity(psi.positions(), p_values, density)
