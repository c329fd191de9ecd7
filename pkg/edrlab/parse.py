import json
import logging

import numpy
import pandas

from edrlab import moments
from edrlab.grid import GridWavefunction
from edrlab.states import CatSpec, GaussianSpec, HermiteSpec
from edrlab.symplectic import CouplingParams, preset_params

FAMILIES = ("error-free", "alpha", "beta", "gamma")
WAVEFUNCTION_COLUMNS = ["q", "re", "im"]
FLOAT_FORMAT = "%.17g"


class SpecError(ValueError):
    pass


def _split_spec(text):
    """Split "name:key=val,key=val" into the name and a dict of floats."""
    text = text.strip()
    name, _, rest = text.partition(":")
    fields = {}
    for item in rest.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise SpecError("Expected key=value in {0!r}".format(text))
        try:
            fields[key.strip()] = float(val)
        except ValueError:
            raise SpecError("Value for {0!r} is not a number: {1!r}".format(key, text))
    return name.strip(), fields


def _check_keys(text, fields, allowed):
    unknown = set(fields) - set(allowed)
    if unknown:
        raise SpecError(
            "Unknown field(s) {0} in {1!r}".format(", ".join(sorted(unknown)), text)
        )


def parse_model_spec(text, hbar=1.0):
    """Parse a model spec.

    Accepts a coupling triple "alpha,beta,gamma" or a preset name:
    "von-neumann", "contractive", "printed-contractive" or
    "error-free:a=<x>".
    """
    if text is None or not text.strip():
        raise SpecError("Empty model spec")
    toks = text.split(",")
    if len(toks) == 3 and ":" not in text:
        try:
            alpha, beta, gamma = (float(t) for t in toks)
        except ValueError:
            raise SpecError("Model triple must be three numbers: {0!r}".format(text))
        return CouplingParams(alpha, beta, gamma, hbar=hbar)
    name, fields = _split_spec(text)
    if name == "error-free":
        _check_keys(text, fields, ["a"])
        if "a" not in fields:
            raise SpecError("error-free model needs a value, e.g. error-free:a=1")
        return preset_params(name, hbar=hbar, a=fields["a"])
    _check_keys(text, fields, [])
    try:
        return preset_params(name, hbar=hbar)
    except KeyError:
        raise SpecError("Unknown model preset {0!r}".format(name))


GAUSSIAN_FIELDS = ["mean_q", "mean_p", "var_q", "var_p", "cov_qp"]


def parse_state_spec(text, hbar=1.0):
    """Parse a state spec into an object with moments() and wavefunction().

    Gaussian presets (ground, squeezed:r=, contractive:r=, displaced:q=,p=)
    accept an optional displacement q=, p=. Also recognized: hermite:n=<k>,
    cat:d=<x> and raw moments gaussian:mean_q=,mean_p=,var_q=,var_p=,cov_qp=.
    """
    if text is None or not text.strip():
        raise SpecError("Empty state spec")
    name, fields = _split_spec(text)
    if name == "hermite":
        _check_keys(text, fields, ["n"])
        n = fields.get("n", 0.0)
        if n < 0 or n != int(n):
            raise SpecError("hermite needs a nonnegative integer n: {0!r}".format(text))
        return HermiteSpec(int(n), hbar=hbar)
    if name == "cat":
        _check_keys(text, fields, ["d"])
        if "d" not in fields:
            raise SpecError("cat state needs a displacement, e.g. cat:d=1.5")
        return CatSpec(fields["d"], hbar=hbar)
    if name == "gaussian":
        _check_keys(text, fields, GAUSSIAN_FIELDS)
        return GaussianSpec(moments.GaussianState(hbar=hbar, **fields))

    q, p = fields.pop("q", 0.0), fields.pop("p", 0.0)
    if name in ("ground", "displaced"):
        _check_keys(text, fields, [])
        state = moments.ground(hbar)
    elif name in ("squeezed", "contractive"):
        _check_keys(text, fields, ["r"])
        squeeze = getattr(moments, name)
        state = squeeze(fields.get("r", 0.0), hbar=hbar)
    else:
        raise SpecError("Unknown state preset {0!r}".format(name))
    return GaussianSpec(state.displaced(q, p))


def parse_family_values(text):
    """Parse "v1,v2,..." or "start:stop:num" into an array of values."""
    if text is None or not text.strip():
        raise SpecError("Empty family of parameter values")
    text = text.strip()
    if ":" in text:
        toks = text.split(":")
        if len(toks) != 3:
            raise SpecError("Range must be start:stop:num, got {0!r}".format(text))
        try:
            start, stop = float(toks[0]), float(toks[1])
            num = int(toks[2])
        except ValueError:
            raise SpecError("Bad range {0!r}".format(text))
        if num < 1:
            raise SpecError("Range {0!r} has no points".format(text))
        return numpy.linspace(start, stop, num)
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise SpecError("Bad value list {0!r}".format(text))
    if not vals:
        raise SpecError("Empty family of parameter values")
    return numpy.array(vals)


def write_wavefunction_csv(f, w):
    df = pandas.DataFrame(
        {"q": w.positions(), "re": w.amplitudes.real, "im": w.amplitudes.imag},
        columns=WAVEFUNCTION_COLUMNS,
    )
    df.to_csv(f, index=False, float_format=FLOAT_FORMAT)


def read_wavefunction_csv(f):
    df = pandas.read_csv(f, dtype=float)
    if list(df.columns) != WAVEFUNCTION_COLUMNS:
        raise SpecError(
            "Wavefunction CSV needs columns {0}, got {1}".format(
                WAVEFUNCTION_COLUMNS, list(df.columns)
            )
        )
    q = df["q"].to_numpy()
    if len(q) < 2:
        raise SpecError("Wavefunction CSV has fewer than two rows")
    dx = (q[-1] - q[0]) / (len(q) - 1)
    if not numpy.allclose(numpy.diff(q), dx, rtol=1e-9, atol=0):
        raise SpecError("Wavefunction grid is not uniform")
    amplitudes = df["re"].to_numpy() + 1j * df["im"].to_numpy()
    return GridWavefunction(amplitudes, q[0], dx)


def wavefunction_to_dict(w):
    return {
        "x_min": w.x_min,
        "dx": w.dx,
        "n": w.n,
        "amplitudes": [[float(z.real), float(z.imag)] for z in w.amplitudes],
    }


def wavefunction_from_dict(d):
    try:
        pairs = numpy.array(d["amplitudes"], dtype=float)
        x_min, dx, n = float(d["x_min"]), float(d["dx"]), int(d["n"])
    except (KeyError, TypeError, ValueError) as e:
        raise SpecError("Malformed wavefunction record: {0}".format(e))
    if pairs.shape != (n, 2):
        raise SpecError(
            "Wavefunction record declares n={0} but has {1} amplitudes".format(
                n, len(pairs)
            )
        )
    return GridWavefunction(pairs[:, 0] + 1j * pairs[:, 1], x_min, dx)


def write_wavefunction_json(f, w):
    json.dump(wavefunction_to_dict(w), f)
    f.write("\n")


def read_wavefunction_json(f):
    try:
        d = json.load(f)
    except json.JSONDecodeError as e:
        raise SpecError("Wavefunction file is not valid JSON: {0}".format(e))
    return wavefunction_from_dict(d)


SWEEP_COLUMNS = [
    "value",
    "alpha",
    "beta",
    "gamma",
    "a",
    "b",
    "c",
    "d",
    "c_plus_d",
    "epsilon",
    "eta",
    "product",
    "sharp_bound",
    "violates_heisenberg",
]


def parse_sweep_table(f):
    """Read a sweep CSV back with typed columns."""
    df = pandas.read_csv(f)
    if list(df.columns) != SWEEP_COLUMNS:
        logging.error(f"Unexpected sweep columns: {list(df.columns)}")
        raise SpecError("Not a sweep table")
    dtypes = dict((col, float) for col in SWEEP_COLUMNS)
    dtypes["violates_heisenberg"] = bool
    return df.astype(dtypes)
