import collections
import math

import numpy
from scipy.linalg import expm

# Regime band around alpha^2 + beta*gamma = 0
REGIME_TOL = 1e-12
# Below this |alpha^2 + beta*gamma| the sin/sinh ratios come from their series
SERIES_CUTOFF = 1e-3
SERIES_TERMS = 8
# Construction guard only; unimodularity is asserted more tightly in tests
DET_TOL = 1e-10

NILPOTENT = "Nilpotent"
ELLIPTIC = "Elliptic"
HYPERBOLIC = "Hyperbolic"


class DomainError(ValueError):
    pass


class CouplingParams(
    collections.namedtuple("CouplingParams", ["alpha", "beta", "gamma", "hbar"])
):
    """Coupling triple of the measuring interaction

        H = alpha (Q P - Qbar Pbar) + beta Qbar P + gamma Q Pbar

    The coupling constant K and the duration dt never appear on their own:
    time is measured so that K * dt = 1, and the propagator for one
    measurement is exp(generator).
    """

    __slots__ = ()
    K_DT = 1.0

    def __new__(cls, alpha, beta, gamma, hbar=1.0):
        vals = [float(alpha), float(beta), float(gamma), float(hbar)]
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("Coupling parameters must be finite: {0}".format(vals))
        if vals[3] <= 0:
            raise DomainError("hbar must be positive, got {0}".format(vals[3]))
        return super().__new__(cls, *vals)

    @property
    def discriminant(self):
        return self.alpha * self.alpha + self.beta * self.gamma

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma)

    def flow_coefficients(self, tag):
        """(s, k) with transfer matrix = s * generator + k * identity."""
        return _regime_coefficients(self.discriminant, tag)


class TransferMatrix(collections.namedtuple("TransferMatrix", ["a", "b", "c", "d"])):
    """Coefficients of the Heisenberg-picture map over one measurement.

    Q(dt)    = a Q + b Qbar
    Qbar(dt) = c Q + d Qbar
    P(dt)    = d P - c Pbar
    Pbar(dt) = -b P + a Pbar
    """

    __slots__ = ()

    def __new__(cls, a, b, c, d, check=True):
        self = super().__new__(cls, float(a), float(b), float(c), float(d))
        if check and not self.det_residual() <= DET_TOL:
            raise DomainError(
                "Transfer matrix is not unimodular: ad - bc = {0!r}".format(self.det)
            )
        return self

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def det_residual(self):
        # Rounding in a*d and b*c grows with their size; scale accordingly
        scale = max(1.0, abs(self.a * self.d) + abs(self.b * self.c))
        return abs(self.det - 1.0) / scale

    @property
    def full_heisenberg(self):
        s = self.c + self.d
        return (s <= 0) or (s >= 2)

    def as_array(self):
        return numpy.array([[self.a, self.b], [self.c, self.d]])

    @classmethod
    def from_array(cls, arr, check=True):
        return cls(arr[0, 0], arr[0, 1], arr[1, 0], arr[1, 1], check=check)


Regime = collections.namedtuple("Regime", ["tag", "discriminant"])


def classify_regime(p, tol=REGIME_TOL):
    disc = p.discriminant
    if abs(disc) <= tol:
        return Regime(NILPOTENT, disc)
    if disc < 0:
        return Regime(ELLIPTIC, disc)
    return Regime(HYPERBOLIC, disc)


def generator(p):
    return numpy.array([[p.alpha, p.beta], [p.gamma, -p.alpha]])


def _series(x, odd):
    # sum_k x^k / (2k+1)!  (odd) or  sum_k x^k / (2k)!
    total = 0.0
    term = 1.0
    for k in range(SERIES_TERMS):
        if k > 0:
            if odd:
                term *= x / ((2 * k) * (2 * k + 1))
            else:
                term *= x / ((2 * k - 1) * (2 * k))
        total += term
    return total


def _regime_coefficients(disc, tag):
    """Return (s, k) with [[a, b], [c, d]] = s * generator + k * identity.

    In terms of x = alpha^2 + beta*gamma both sin(D)/D with D^2 = -x and
    sinh(E)/E with E^2 = x equal sum_k x^k / (2k+1)!, and cos D, cosh E
    equal sum_k x^k / (2k)!.
    """
    if tag == NILPOTENT:
        return 1.0, 1.0
    if abs(disc) < SERIES_CUTOFF:
        return _series(disc, odd=True), _series(disc, odd=False)
    if tag == ELLIPTIC:
        big_d = math.sqrt(-disc)
        return math.sin(big_d) / big_d, math.cos(big_d)
    big_e = math.sqrt(disc)
    return math.sinh(big_e) / big_e, math.cosh(big_e)


def solve_dynamics(p, tol=REGIME_TOL):
    regime = classify_regime(p, tol)
    try:
        s, k = p.flow_coefficients(regime.tag)
    except (OverflowError, ValueError):
        raise DomainError(
            "Coupling {0} is too strong: the transfer matrix overflows".format(
                p.as_tuple()
            )
        )
    m = TransferMatrix(
        s * p.alpha + k,
        s * p.beta,
        s * p.gamma,
        -s * p.alpha + k,
        check=False,
    )
    if not m.det_residual() <= DET_TOL:
        raise DomainError(
            "Transfer matrix of coupling {0} is not resolvable in double "
            "precision (ad - bc = {1!r})".format(p.as_tuple(), m.det)
        )
    return m


def regime_formula(p, tag):
    """Transfer matrix from one regime's closed form, whatever the true regime.

    The trigonometric forms are evaluated directly on |alpha^2 + beta*gamma|,
    without the series, so that the three formulas can be compared across a
    regime boundary.
    """
    root = math.sqrt(abs(p.discriminant))
    if tag == NILPOTENT or root == 0:
        s, k = 1.0, 1.0
    elif tag == ELLIPTIC:
        s, k = math.sin(root) / root, math.cos(root)
    elif tag == HYPERBOLIC:
        s, k = math.sinh(root) / root, math.cosh(root)
    else:
        raise ValueError("Unknown regime {0!r}".format(tag))
    return TransferMatrix(
        s * p.alpha + k, s * p.beta, s * p.gamma, -s * p.alpha + k, check=False
    )


def expm_dynamics(p):
    """Transfer matrix from a general-purpose matrix exponential.

    Independent of the regime formulas; used to cross-check them.
    """
    return TransferMatrix.from_array(expm(generator(p)), check=False)


def heisenberg_map(m):
    """4x4 map acting on the column (Q, Qbar, P, Pbar)."""
    return numpy.array(
        [
            [m.a, m.b, 0.0, 0.0],
            [m.c, m.d, 0.0, 0.0],
            [0.0, 0.0, m.d, -m.c],
            [0.0, 0.0, -m.b, m.a],
        ]
    )


def canonical_form():
    # Ordering (Q, Qbar | P, Pbar)
    eye = numpy.eye(2)
    zero = numpy.zeros((2, 2))
    return numpy.block([[zero, eye], [-eye, zero]])


def symplectic_residual(m):
    s = heisenberg_map(m)
    j = canonical_form()
    return numpy.max(numpy.abs(s.T @ j @ s - j))


def _arccosh(x):
    return math.log(x + math.sqrt(x * x - 1.0))


def omega(a):
    """Scale factor Omega(a) of the error-free Hamiltonian H(a).

    Defined for a > -2. Near a = 2 both closed forms are 0/0, so a short
    series in t = 1 - a/2 is used instead.
    """
    a = float(a)
    if not math.isfinite(a) or a <= -2:
        raise DomainError("Omega(a) requires a > -2, got {0!r}".format(a))
    if a == 2:
        return 1.0
    u = a / 2
    t = 1.0 - u
    if abs(t) < 1e-4:
        return 1.0 + t / 3 + 2 * t * t / 15
    if u < 1:
        return math.acos(u) / math.sqrt((1 - u) * (1 + u))
    return _arccosh(u) / math.sqrt((u - 1) * (u + 1))


class ErrorFreeParams(CouplingParams):
    """Coupling Omega(a) (a/2, -1, 1) of the error-free interaction H(a).

    Keeps a, so that alpha^2 + beta*gamma = Omega^2 (u - 1)(u + 1), u = a/2,
    is evaluated in factored form. Summing the rounded squares cancels
    catastrophically as a approaches -2, where Omega diverges.
    """

    def __new__(cls, a, hbar=1.0):
        scale = omega(a)
        self = super().__new__(cls, scale * a / 2, -scale, scale, hbar=hbar)
        self.a = float(a)
        return self

    @property
    def discriminant(self):
        u = self.a / 2
        return self.gamma * self.gamma * (u - 1) * (u + 1)

    def flow_coefficients(self, tag):
        # sin D / D = 1 / Omega and cos D = a / 2 in every regime (sinh, cosh alike)
        return 1.0 / self.gamma, self.a / 2


def error_free_params(a, hbar=1.0):
    """Coupling realizing the error-free transfer matrix (a, -1, 1, 0)."""
    return ErrorFreeParams(a, hbar=hbar)


def error_free_matrix(a):
    """The exact error-free transfer matrix, b = -1, c = 1, d = 0."""
    return TransferMatrix(a, -1.0, 1.0, 0.0)


def error_disturbance_commutator(m):
    # [(c-1)Q + d Qbar, (d-1)P - c Pbar] = (1 - c - d) i hbar
    return 1.0 - m.c - m.d


def heisenberg_bound(m, hbar=1.0):
    return abs(error_disturbance_commutator(m)) * hbar / 2


def is_error_free(m, tol=1e-9):
    return abs(m.b + 1) <= tol and abs(m.c - 1) <= tol and abs(m.d) <= tol


VON_NEUMANN = (0.0, 0.0, 1.0)
PRINTED_CONTRACTIVE = tuple(x / (3 * math.sqrt(3)) for x in (1.0, -2.0, 2.0))


def preset_params(name, hbar=1.0, a=None):
    if name == "von-neumann":
        return CouplingParams(*VON_NEUMANN, hbar=hbar)
    if name == "contractive":
        return error_free_params(1.0, hbar=hbar)
    if name == "printed-contractive":
        return CouplingParams(*PRINTED_CONTRACTIVE, hbar=hbar)
    if name == "error-free":
        if a is None:
            raise DomainError("error-free preset needs a value for a")
        return error_free_params(a, hbar=hbar)
    raise KeyError(name)
