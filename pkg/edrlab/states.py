"""Input states for the object and the probe.

Each state provides its first and second moments (all the closed forms
need) and a sampled wavefunction for the grid oracle. Besides Gaussians
there are two non-Gaussian families, oscillator eigenstates and even cat
states, whose moments are known exactly.
"""

import math

import numpy
from scipy.special import eval_hermite, factorial

from edrlab import moments
from edrlab.grid import DEFAULT_N, DEFAULT_SPAN, from_gaussian, sample


class GaussianSpec:
    def __init__(self, state):
        self.state = state
        self.hbar = state.hbar

    def moments(self):
        return self.state

    def wavefunction(self, n=DEFAULT_N, span_sigmas=DEFAULT_SPAN):
        return from_gaussian(self.state, n, span_sigmas)


class HermiteSpec:
    """Oscillator eigenstate |n> in units where m * omega = 1."""

    def __init__(self, n, hbar=1.0):
        if n < 0 or int(n) != n:
            raise ValueError("Hermite index must be a nonnegative integer")
        self.n = int(n)
        self.hbar = float(hbar)

    @property
    def second_moment(self):
        return (self.n + 0.5) * self.hbar

    def moments(self):
        return moments.GaussianState(
            var_q=self.second_moment, var_p=self.second_moment, hbar=self.hbar
        )

    def amplitude(self, q):
        scaled = q / math.sqrt(self.hbar)
        norm = (math.pi * self.hbar) ** -0.25 / math.sqrt(
            2.0 ** self.n * factorial(self.n, exact=True)
        )
        return norm * eval_hermite(self.n, scaled) * numpy.exp(-(scaled ** 2) / 2)

    def wavefunction(self, n=DEFAULT_N, span_sigmas=DEFAULT_SPAN):
        sigma = math.sqrt(self.second_moment)
        return sample(
            self.amplitude,
            0.0,
            span_sigmas * sigma,
            n,
            hbar=self.hbar,
            p_extent=span_sigmas * sigma,
        )


class CatSpec:
    """Even superposition of ground states displaced to +d and -d."""

    def __init__(self, d, hbar=1.0):
        self.d = float(d)
        self.hbar = float(hbar)

    @property
    def overlap(self):
        return math.exp(-self.d ** 2 / self.hbar)

    def moments(self):
        h, d2, ov = self.hbar, self.d ** 2, self.overlap
        return moments.GaussianState(
            var_q=h / 2 + d2 / (1 + ov),
            var_p=h / 2 - d2 * ov / (1 + ov),
            hbar=h,
        )

    def amplitude(self, q):
        h = self.hbar
        norm = (math.pi * h) ** -0.25 / math.sqrt(2 * (1 + self.overlap))
        return norm * (
            numpy.exp(-((q - self.d) ** 2) / (2 * h))
            + numpy.exp(-((q + self.d) ** 2) / (2 * h))
        )

    def wavefunction(self, n=DEFAULT_N, span_sigmas=DEFAULT_SPAN):
        sigma = math.sqrt(self.hbar / 2)
        return sample(
            self.amplitude,
            0.0,
            abs(self.d) + span_sigmas * sigma,
            n,
            hbar=self.hbar,
            p_extent=span_sigmas * sigma,
        )


def random_gaussian(rng, hbar=1.0, max_mean=3.0, max_log_squeeze=1.0, pure=True):
    """Random admissible Gaussian state.

    Pure states sit on the minimum-uncertainty surface
    var_q var_p - cov^2 = hbar^2 / 4, so the grid oracle can sample them.
    """
    var_q = hbar / 2 * math.exp(rng.uniform(-max_log_squeeze, max_log_squeeze) * 2)
    cov = rng.uniform(-1.0, 1.0) * var_q
    var_p = (hbar ** 2 / 4 + cov ** 2) / var_q
    if not pure:
        var_p *= 1 + rng.uniform(0.0, 1.0)
    return moments.GaussianState(
        mean_q=rng.uniform(-max_mean, max_mean),
        mean_p=rng.uniform(-max_mean, max_mean),
        var_q=var_q,
        var_p=var_p,
        cov_qp=cov,
        hbar=hbar,
    )
