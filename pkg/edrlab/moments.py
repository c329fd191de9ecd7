import collections
import math

from edrlab.symplectic import heisenberg_bound

ADMISSIBILITY_TOL = 1e-12
KENNARD_TOL = 1e-12


class AdmissibilityError(ValueError):
    pass


Moments = collections.namedtuple("Moments", ["mean", "second_moment"])


class GaussianState(
    collections.namedtuple(
        "GaussianState", ["mean_q", "mean_p", "var_q", "var_p", "cov_qp", "hbar"]
    )
):
    """First and second moments of one mode (object or probe).

    cov_qp is the symmetrized covariance <{Q - <Q>, P - <P>}>/2. The RMS
    error and disturbance only need single-quadrature moments, so cov_qp
    enters through admissibility alone.
    """

    __slots__ = ()

    def __new__(
        cls, mean_q=0.0, mean_p=0.0, var_q=None, var_p=None, cov_qp=0.0, hbar=1.0
    ):
        hbar = float(hbar)
        if var_q is None:
            var_q = hbar / 2
        if var_p is None:
            var_p = hbar / 2
        vals = [float(x) for x in (mean_q, mean_p, var_q, var_p, cov_qp, hbar)]
        if not all(math.isfinite(x) for x in vals):
            raise AdmissibilityError("State moments must be finite: {0}".format(vals))
        self = super().__new__(cls, *vals)
        self._check_admissible()
        return self

    def _check_admissible(self):
        if self.hbar <= 0:
            raise AdmissibilityError("hbar must be positive")
        if self.var_q <= 0 or self.var_p <= 0:
            raise AdmissibilityError(
                "Variances must be positive, got var_q={0!r}, var_p={1!r}".format(
                    self.var_q, self.var_p
                )
            )
        try:
            derived = [
                self.determinant,
                self.position_moments().second_moment,
                self.momentum_moments().second_moment,
            ]
        except OverflowError:
            derived = [math.inf]
        if not all(math.isfinite(x) for x in derived):
            raise AdmissibilityError(
                "State moments are out of floating-point range: {0}".format(
                    tuple(self)
                )
            )
        floor = self.hbar ** 2 / 4
        if self.determinant < floor * (1 - ADMISSIBILITY_TOL):
            raise AdmissibilityError(
                "var_q var_p - cov_qp^2 = {0!r} is below hbar^2/4 = {1!r}".format(
                    self.determinant, floor
                )
            )

    @property
    def determinant(self):
        return self.var_q * self.var_p - self.cov_qp ** 2

    def is_pure(self, tol=1e-9):
        return abs(self.determinant - self.hbar ** 2 / 4) <= tol * self.hbar ** 2

    def position_moments(self):
        return Moments(self.mean_q, self.var_q + self.mean_q ** 2)

    def momentum_moments(self):
        return Moments(self.mean_p, self.var_p + self.mean_p ** 2)

    def displaced(self, q=0.0, p=0.0):
        return type(self)(
            self.mean_q + q,
            self.mean_p + p,
            self.var_q,
            self.var_p,
            self.cov_qp,
            self.hbar,
        )


def ground(hbar=1.0):
    return GaussianState(hbar=hbar)


def _squeeze_factors(r):
    try:
        return math.exp(-2 * r), math.exp(2 * r), math.cosh(2 * r), math.sinh(2 * r)
    except OverflowError:
        raise AdmissibilityError(
            "Squeezing r = {0!r} is out of floating-point range".format(r)
        )


def squeezed(r, hbar=1.0):
    shrink, grow, _, _ = _squeeze_factors(r)
    return GaussianState(var_q=hbar / 2 * shrink, var_p=hbar / 2 * grow, hbar=hbar)


def contractive(r, hbar=1.0):
    """Minimum-uncertainty state with negative position-momentum covariance.

    A squeezed state rotated by pi/4 in phase space; its position spread
    shrinks under free evolution before it grows again.
    """
    _, _, ch, sh = _squeeze_factors(r)
    return GaussianState(
        var_q=hbar / 2 * ch,
        var_p=hbar / 2 * ch,
        cov_qp=-hbar / 2 * sh,
        hbar=hbar,
    )


def _linear_mean_square(coef_obj, coef_probe, obj, probe):
    # <(x A + y B)^2> in a product state, written as variance plus squared
    # mean so that large means do not cancel
    mean = coef_obj * obj.mean + coef_probe * probe.mean
    var = coef_obj ** 2 * (obj.second_moment - obj.mean ** 2) + coef_probe ** 2 * (
        probe.second_moment - probe.mean ** 2
    )
    return max(var, 0.0) + mean ** 2


def rms_error(m, psi, xi):
    """Root-mean-square error || [(c-1) Q + d Qbar] (psi x xi) ||."""
    return math.sqrt(
        _linear_mean_square(
            m.c - 1, m.d, psi.position_moments(), xi.position_moments()
        )
    )


def rms_disturbance(m, psi, xi):
    """Root-mean-square disturbance || [(d-1) P - c Pbar] (psi x xi) ||."""
    return math.sqrt(
        _linear_mean_square(
            m.d - 1, -m.c, psi.momentum_moments(), xi.momentum_moments()
        )
    )


def error_free_disturbance(psi, xi):
    return math.sqrt(psi.var_p + xi.var_p + (psi.mean_p + xi.mean_p) ** 2)


def kennard_check(s, hbar=None):
    if hbar is None:
        hbar = s.hbar
    return math.sqrt(s.var_q) * math.sqrt(s.var_p) >= hbar / 2 - KENNARD_TOL


EDRCheck = collections.namedtuple(
    "EDRCheck",
    [
        "epsilon",
        "eta",
        "product",
        "sharp_bound",
        "heisenberg_bound",
        "satisfies_sharp_bound",
        "satisfies_heisenberg",
        "violates_heisenberg",
    ],
)


def edr_check(m, psi, xi, hbar=None, tol=1e-12):
    if hbar is None:
        hbar = psi.hbar
    eps = rms_error(m, psi, xi)
    eta = rms_disturbance(m, psi, xi)
    product = eps * eta
    sharp = heisenberg_bound(m, hbar)
    half = hbar / 2
    return EDRCheck(
        epsilon=eps,
        eta=eta,
        product=product,
        sharp_bound=sharp,
        heisenberg_bound=half,
        satisfies_sharp_bound=product >= sharp - tol,
        satisfies_heisenberg=product >= half - tol,
        violates_heisenberg=product < half - tol,
    )


QuadratureMoments = collections.namedtuple("QuadratureMoments", ["mean", "variance"])

PostMeasurementMoments = collections.namedtuple(
    "PostMeasurementMoments", ["object_q", "meter_q", "object_p", "probe_p"]
)


def _combine(x, y, obj_mean, obj_var, probe_mean, probe_var):
    return QuadratureMoments(
        x * obj_mean + y * probe_mean, x ** 2 * obj_var + y ** 2 * probe_var
    )


def evolve_moments(m, psi, xi):
    """Moments of Q, Qbar, P, Pbar at the end of the interaction."""
    q = (psi.mean_q, psi.var_q, xi.mean_q, xi.var_q)
    p = (psi.mean_p, psi.var_p, xi.mean_p, xi.var_p)
    return PostMeasurementMoments(
        object_q=_combine(m.a, m.b, *q),
        meter_q=_combine(m.c, m.d, *q),
        object_p=_combine(m.d, -m.c, *p),
        probe_p=_combine(-m.b, m.a, *p),
    )
