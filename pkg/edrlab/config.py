import collections
import configparser
import logging
import os

from edrlab.grid import DEFAULT_N, DEFAULT_SPAN, GridError, check_grid_size

CONFIG_ENV_VAR = "EDRLAB_CONFIG"


class ConfigError(ValueError):
    pass


Tolerances = collections.namedtuple(
    "Tolerances", ["symplectic", "regime", "oracle", "sandwich", "error_free"]
)
DEFAULT_TOLERANCES = Tolerances(
    symplectic=1e-12, regime=1e-8, oracle=1e-6, sandwich=1e-9, error_free=1e-9
)

Checks = collections.namedtuple(
    "Checks", ["seed", "random_samples", "oracle_samples", "families"]
)
DEFAULT_CHECKS = Checks(
    seed=20240611, random_samples=10000, oracle_samples=100, families=20
)


class SweepConfig(
    collections.namedtuple(
        "SweepConfig", ["eps_eig", "theta_scales", "width_fractions", "growth_tol"]
    )
):
    """Approximate-eigenstate sweep: eigenvalue scales and state widths."""

    __slots__ = ()

    def __new__(
        cls,
        eps_eig=0.01,
        theta_scales=(1.0, 10.0, 100.0, 1000.0),
        width_fractions=(1.0, 0.25, 0.0625),
        growth_tol=1e-6,
    ):
        return super().__new__(
            cls,
            float(eps_eig),
            tuple(float(x) for x in theta_scales),
            tuple(float(x) for x in width_fractions),
            float(growth_tol),
        )


DEFAULT_STATES = {
    "ground": "ground",
    "contractive": "contractive:r=0.5",
}
DEFAULT_MODELS = {
    "von-neumann": "von-neumann",
    "contractive": "contractive",
    "hyperbolic": "0,1,1",
}
DEFAULT_FAMILIES = {
    "error-free": "-1.9:5:70",
    "gamma": "0:2:21",
}


def _float_list(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


class RunConfig:
    """Settings shared by every subcommand.

    Parameters
    ----------
    hbar : Reduced Planck constant in the units of the run.
    grid_n, grid_span_sigmas : Wavefunction grid for oracle runs.
    tolerances : Tolerances record used by the reproduction checks.
    sweep : SweepConfig for the approximate-eigenstate sweeps.
    checks : Sample counts and seed for the reproduction checks.
    states, models, families : Named spec strings, in file order.
    """

    def __init__(
        self,
        hbar=1.0,
        grid_n=DEFAULT_N,
        grid_span_sigmas=DEFAULT_SPAN,
        tolerances=DEFAULT_TOLERANCES,
        sweep=None,
        checks=DEFAULT_CHECKS,
        states=None,
        models=None,
        families=None,
    ):
        self.hbar = hbar
        self.grid_n = grid_n
        self.grid_span_sigmas = grid_span_sigmas
        self.tolerances = tolerances
        self.sweep = sweep if sweep is not None else SweepConfig()
        self.checks = checks
        self.states = dict(DEFAULT_STATES if states is None else states)
        self.models = dict(DEFAULT_MODELS if models is None else models)
        self.families = dict(DEFAULT_FAMILIES if families is None else families)
        self.validate()

    def validate(self):
        if not self.hbar > 0:
            raise ConfigError("hbar must be positive, got {0!r}".format(self.hbar))
        try:
            check_grid_size(self.grid_n)
        except GridError as e:
            raise ConfigError(str(e))
        if not self.grid_span_sigmas > 0:
            raise ConfigError("grid span_sigmas must be positive")
        for name, val in self.tolerances._asdict().items():
            if not val > 0:
                raise ConfigError("Tolerance {0} must be positive".format(name))
        if not self.sweep.eps_eig > 0:
            raise ConfigError("sweep eps_eig must be positive")
        if not self.sweep.theta_scales or not self.sweep.width_fractions:
            raise ConfigError("sweep theta_scales and width_fractions must be set")
        if not self.sweep.growth_tol > 0:
            raise ConfigError("sweep growth_tol must be positive")
        for name, val in self.checks._asdict().items():
            if name != "seed" and val < 1:
                raise ConfigError("Check count {0} must be at least 1".format(name))
        if not self.states:
            raise ConfigError("At least one state must be configured")

    @classmethod
    def from_file(cls, f):
        cp = configparser.ConfigParser()
        # Keep model and state names as written
        cp.optionxform = str
        try:
            cp.read_file(f)
        except configparser.Error as e:
            raise ConfigError("Malformed config file: {0}".format(e))
        try:
            return cls._from_parser(cp)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError("Bad value in config file: {0}".format(e))

    @classmethod
    def _from_parser(cls, cp):
        kwargs = {}
        if cp.has_option("edrlab", "hbar"):
            kwargs["hbar"] = cp.getfloat("edrlab", "hbar")
        if cp.has_option("grid", "n"):
            kwargs["grid_n"] = cp.getint("grid", "n")
        if cp.has_option("grid", "span_sigmas"):
            kwargs["grid_span_sigmas"] = cp.getfloat("grid", "span_sigmas")

        if cp.has_section("tolerances"):
            kwargs["tolerances"] = DEFAULT_TOLERANCES._replace(
                **{
                    k: cp.getfloat("tolerances", k)
                    for k in DEFAULT_TOLERANCES._fields
                    if cp.has_option("tolerances", k)
                }
            )

        if cp.has_section("sweep"):
            default = SweepConfig()
            kwargs["sweep"] = SweepConfig(
                eps_eig=cp.getfloat("sweep", "eps_eig", fallback=default.eps_eig),
                theta_scales=_float_list(cp.get("sweep", "theta_scales"))
                if cp.has_option("sweep", "theta_scales")
                else default.theta_scales,
                width_fractions=_float_list(cp.get("sweep", "width_fractions"))
                if cp.has_option("sweep", "width_fractions")
                else default.width_fractions,
                growth_tol=cp.getfloat(
                    "sweep", "growth_tol", fallback=default.growth_tol
                ),
            )

        if cp.has_section("checks"):
            kwargs["checks"] = DEFAULT_CHECKS._replace(
                **{
                    k: cp.getint("checks", k)
                    for k in DEFAULT_CHECKS._fields
                    if cp.has_option("checks", k)
                }
            )

        for section in ("states", "models", "families"):
            if cp.has_section(section):
                kwargs[section] = dict(cp.items(section))
        return cls(**kwargs)

    @classmethod
    def load(cls, config_fp=None):
        """Load from config_fp, else from $EDRLAB_CONFIG, else defaults."""
        if config_fp is None:
            config_fp = os.environ.get(CONFIG_ENV_VAR)
        if config_fp is None:
            logging.info("No config file given, using built-in defaults")
            return cls()
        if not os.path.exists(config_fp):
            raise ConfigError("Config file not found: {0}".format(config_fp))
        logging.info(f"Reading config from {config_fp}")
        with open(config_fp) as f:
            return cls.from_file(f)

    def to_dict(self):
        return {
            "hbar": self.hbar,
            "grid": {"n": self.grid_n, "span_sigmas": self.grid_span_sigmas},
            "tolerances": dict(self.tolerances._asdict()),
            "sweep": {
                "eps_eig": self.sweep.eps_eig,
                "theta_scales": list(self.sweep.theta_scales),
                "width_fractions": list(self.sweep.width_fractions),
                "growth_tol": self.sweep.growth_tol,
            },
            "checks": dict(self.checks._asdict()),
            "states": dict(self.states),
            "models": dict(self.models),
            "families": dict(self.families),
        }
