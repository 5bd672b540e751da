"""Experiment configuration files.

A configuration is an INI file with four sections::

    [problem]
    family = scalar_sine        ; scalar_sine | gpe | heaviside
    alpha = 0.5                 ; nonlinearity strength (b for gpe)
    n = 10                      ; heaviside only
    p = 3                       ; heaviside only
    N = 20                      ; gpe grid points per dimension
    L = 10                      ; gpe half-width
    Omega = 0                   ; gpe rotation speed
    potential =                 ; gpe potential CSV (default harmonic trap)

    [solver]
    method = j_version          ; a_version | j_version | newton | j_inverse
    tol = 1e-10
    max_iter = 200
    selection = nearest_target  ; smallest_p | nearest_target | cluster_lstsq
    target = rayleigh           ; number | rayleigh | smallest
    delta = 0.1
    inexact_budget = 5000

    [study]
    kind = run                  ; run | sweep_alpha | single_step | order
    alphas = 0, 0.5, 1, 5
    methods = a_version, j_version
    init = ones                 ; ones | random | linear | continuation
    seed = 0

    [output]
    directory = out
"""

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .problems import GpeProblem, HeavisideTraceProblem, ScalarSineProblem, load_potential_csv
from .solvers import METHODS, SelectionStrategy, SolverConfig, step_a_version

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "initial_guess"]

FAMILIES = ("scalar_sine", "gpe", "heaviside")
STUDIES = ("run", "sweep_alpha", "single_step", "order")
INITS = ("ones", "random", "linear", "continuation")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    family: str
    problem_params: dict
    solver: SolverConfig
    study: str = "run"
    alphas: list = field(default_factory=list)
    methods: list = field(default_factory=list)
    init: str = "ones"
    seed: int = 0
    output_dir: str = "out"

    def make_problem(self, alpha=None):
        prm = dict(self.problem_params)
        a = prm.pop("alpha") if alpha is None else alpha
        prm.pop("alpha", None)
        if self.family == "scalar_sine":
            return ScalarSineProblem(a)
        if self.family == "heaviside":
            return HeavisideTraceProblem(prm["n"], prm["p"], a)
        return GpeProblem(prm["N"], prm["L"], prm["Omega"], a, prm.get("potential"))

    @property
    def alpha(self):
        return self.problem_params["alpha"]


def _get(section, key, conv, default, name):
    raw = section.get(key) if section is not None else None
    if raw is None or raw.strip() == "":
        if default is _required:
            raise ConfigError(f"missing required field {name}")
        return default
    try:
        return conv(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"invalid value for {name}: {raw!r}") from exc


_required = object()


def _float_list(raw):
    return [float(x) for x in raw.replace(";", ",").split(",") if x.strip()]


def _name_list(raw):
    return [x.strip() for x in raw.split(",") if x.strip()]


def _target(raw):
    return raw if raw in ("rayleigh", "smallest") else float(raw)


def parse_config(text, base_dir="."):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    # keep key case (N versus n)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    pr = cp["problem"] if cp.has_section("problem") else None
    so = cp["solver"] if cp.has_section("solver") else None
    st = cp["study"] if cp.has_section("study") else None
    out = cp["output"] if cp.has_section("output") else None

    family = _get(pr, "family", str, _required, "problem.family")
    if family not in FAMILIES:
        raise ConfigError(f"invalid value for problem.family: {family!r} (expected one of {FAMILIES})")
    params = {"alpha": _get(pr, "alpha", float, 0.5, "problem.alpha")}
    if family == "heaviside":
        params["n"] = _get(pr, "n", int, 10, "problem.n")
        params["p"] = _get(pr, "p", int, 3, "problem.p")
        if not 1 <= params["p"] < params["n"]:
            raise ConfigError("problem.p must satisfy 1 <= p < n")
    elif family == "gpe":
        params["N"] = _get(pr, "N", int, 20, "problem.N")
        params["L"] = _get(pr, "L", float, 10.0, "problem.L")
        params["Omega"] = _get(pr, "Omega", float, 0.0, "problem.Omega")
        if "b" in (pr or {}):
            params["alpha"] = _get(pr, "b", float, 0.0, "problem.b")
        if params["N"] < 3:
            raise ConfigError("problem.N must be at least 3")
        if params["L"] <= 0:
            raise ConfigError("problem.L must be positive")
        path = _get(pr, "potential", str, None, "problem.potential")
        if path is not None:
            path = os.path.join(base_dir, path)
            if not os.path.exists(path):
                raise ConfigError(f"problem.potential: file {path!r} does not exist")
            try:
                pot, N, L = load_potential_csv(path)
            except ValueError as exc:
                raise ConfigError(f"problem.potential: {exc}") from exc
            if N != params["N"] or L != params["L"]:
                raise ConfigError("problem.potential: N/L in file header do not match problem.N/problem.L")
            params["potential"] = pot

    method = _get(so, "method", str, "a_version", "solver.method")
    if method not in METHODS:
        raise ConfigError(f"invalid value for solver.method: {method!r} (expected one of {METHODS})")
    try:
        selection = SelectionStrategy(
            _get(so, "selection", str, "smallest_p", "solver.selection"),
            _get(so, "target", _target, "rayleigh", "solver.target"),
            _get(so, "delta", float, 0.1, "solver.delta"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid solver.selection settings: {exc}") from exc
    try:
        solver = SolverConfig(
            method,
            _get(so, "tol", float, 1e-10, "solver.tol"),
            _get(so, "max_iter", int, 200, "solver.max_iter"),
            selection,
            _get(so, "inexact_budget", int, 5000, "solver.inexact_budget"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid solver settings: {exc}") from exc

    study = _get(st, "kind", str, "run", "study.kind")
    if study not in STUDIES:
        raise ConfigError(f"invalid value for study.kind: {study!r}")
    methods = _get(st, "methods", _name_list, [method], "study.methods")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"invalid value in study.methods: {m!r}")
    p = params.get("p", 1)
    if p > 1 and any(m == "j_inverse" for m in methods):
        raise ConfigError("study.methods: j_inverse requires p = 1")
    init = _get(st, "init", str, "ones" if p == 1 and family == "scalar_sine" else "random", "study.init")
    if init not in INITS:
        raise ConfigError(f"invalid value for study.init: {init!r}")

    return ExperimentConfig(
        family=family,
        problem_params=params,
        solver=solver,
        study=study,
        alphas=_get(st, "alphas", _float_list, [], "study.alphas"),
        methods=methods,
        init=init,
        seed=_get(st, "seed", int, 0, "study.seed"),
        output_dir=_get(out, "directory", str, "out", "output.directory"),
    )


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def initial_guess(problem, init="random", seed=0, selection=None):
    """Orthonormal starting basis.

    ``ones`` is the normalized all-ones vector (``p = 1``), ``random`` a
    seeded Gaussian matrix orthonormalized by QR and ``linear`` the basis
    selected from ``A0`` by one step of the linear problem from the random
    start. ``continuation`` behaves like ``linear`` here; sweeps reuse the
    previous solution instead.
    """
    n, p = problem.n, problem.p
    if init == "ones":
        if p != 1:
            raise ConfigError("study.init = ones requires p = 1")
        return np.ones((n, 1)) / np.sqrt(n)
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(rng.standard_normal((n, p)))
    if init == "random":
        return V
    it, _ = step_a_version(problem.with_alpha(0.0), V, selection or SelectionStrategy())
    return it.V
