"""Experiment description files: flat ``key = value`` text.

Recognized keys::

    design          IID | DepGraphER | DepGraphBA | NetworkER
    n               sample size
    lambda_graph    mean degree of the Erdos-Renyi graph (ER designs)
    m_attach        edges per new node (DepGraphBA)
    c               mixing strength in [0, 1] (DepGraph designs)
    rho             correlation decay rate (NetworkER)
    R, b_n          bundle size and prefix length (default n and floor(n^(1/3)))
    L, S            permutation draws and confidence-function draws
    beta            margin of the non-randomized confidence set
    seed            master seed
    mc_reps         Monte Carlo replications
    levels          comma-separated alphas, e.g. 0.01,0.05,0.10
    methods         comma-separated subset of normal,permutation
    coverage_mode   test | set
    mu_grid         comma list of points, or start:stop:count
    n_grid          comma list of sample sizes (lambda reports)
    k_values        comma list of set sizes (lambda reports)
    lambda_draws    Monte Carlo draws per lambda value

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from ..core import CriticalValue, InferenceConfig

__all__ = ["CoverageMode", "Design", "ExperimentSpec", "SpecError"]


class SpecError(ValueError):
    """Malformed or inconsistent experiment description."""


class Design(enum.Enum):
    IID = "IID"
    DEP_GRAPH_ER = "DepGraphER"
    DEP_GRAPH_BA = "DepGraphBA"
    NETWORK_ER = "NetworkER"

    @property
    def uses_graph(self) -> bool:
        return self is not Design.IID


class CoverageMode(enum.Enum):
    TEST = "test"
    SET = "set"


# keys each design requires; anything else among the design keys is rejected
_DESIGN_KEYS = {
    Design.IID: (),
    Design.DEP_GRAPH_ER: ("lambda_graph", "c"),
    Design.DEP_GRAPH_BA: ("m_attach", "c"),
    Design.NETWORK_ER: ("lambda_graph", "rho"),
}
_ALL_DESIGN_KEYS = ("lambda_graph", "m_attach", "c", "rho")


@dataclass(frozen=True)
class ExperimentSpec:
    design: Design = Design.IID
    n: int = 500
    lambda_graph: float | None = None
    m_attach: int | None = None
    c: float | None = None
    rho: float | None = None
    R: int | None = None
    b_n: int | None = None
    L: int = 1000
    S: int = 1000
    beta: float = 0.005
    seed: int = 0
    mc_reps: int = 1000
    levels: tuple[float, ...] = (0.01, 0.05, 0.10)
    methods: tuple[CriticalValue, ...] = (CriticalValue.ASYMPTOTIC_NORMAL,
                                          CriticalValue.PERMUTATION)
    coverage_mode: CoverageMode = CoverageMode.TEST
    mu_grid: tuple[float, ...] | None = None
    n_grid: tuple[int, ...] | None = None
    k_values: tuple[int, ...] = (2,)
    lambda_draws: int = 100_000

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        needed = _DESIGN_KEYS[self.design]
        for key in _ALL_DESIGN_KEYS:
            value = getattr(self, key)
            if key in needed and value is None:
                raise SpecError(f"design {self.design.value} needs '{key}'")
            if key not in needed and value is not None:
                raise SpecError(f"'{key}' does not apply to design {self.design.value}")
        if self.n < 2:
            raise SpecError("n must be at least 2")
        if self.design is Design.DEP_GRAPH_BA and self.n < 21:
            raise SpecError("DepGraphBA needs n >= 21")
        if self.c is not None and not 0.0 <= self.c <= 1.0:
            raise SpecError("c must lie in [0, 1]")
        if self.rho is not None and not self.rho > 0:
            raise SpecError("rho must be positive")
        if self.lambda_graph is not None and not 0 <= self.lambda_graph <= self.n - 1:
            raise SpecError("lambda_graph must lie in [0, n-1]")
        if self.m_attach is not None and not 1 <= self.m_attach <= 20:
            raise SpecError("m_attach must lie in [1, 20]")
        if self.mc_reps < 1:
            raise SpecError("mc_reps must be positive")
        if not self.levels:
            raise SpecError("levels must not be empty")
        if not self.methods:
            raise SpecError("methods must not be empty")
        if self.lambda_draws < 2:
            raise SpecError("lambda_draws must be at least 2")
        try:
            for alpha in self.levels:
                self.inference_config(alpha).resolve(self.n)
        except ValueError as err:
            raise SpecError(str(err)) from None

    def inference_config(self, alpha: float, method: CriticalValue | None = None) -> InferenceConfig:
        return InferenceConfig(R=self.R, b_n=self.b_n, L=self.L, S=self.S, alpha=alpha,
                               beta=self.beta, seed=self.seed,
                               critical_value=method or CriticalValue.PERMUTATION)

    def design_fields(self) -> dict:
        """Descriptor columns for output rows; blank when not applicable."""
        return {"design": self.design.value, "n": self.n,
                **{k: getattr(self, k) for k in _ALL_DESIGN_KEYS}}

    # -- text format ---------------------------------------------------

    @classmethod
    def parse(cls, text: str, source: str = "<spec>") -> "ExperimentSpec":
        values: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SpecError(f"{source}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _FIELD_NAMES:
                raise SpecError(f"{source}:{lineno}: unknown key '{key}'")
            if key in values:
                raise SpecError(f"{source}:{lineno}: duplicate key '{key}'")
            values[key] = value
        return cls.from_strings(values, source)

    @classmethod
    def from_strings(cls, values: dict[str, str], source: str = "<spec>") -> "ExperimentSpec":
        kwargs = {}
        for key, value in values.items():
            try:
                kwargs[key] = _PARSERS[key](value)
            except (ValueError, KeyError) as err:
                raise SpecError(f"{source}: bad value for '{key}': {value!r} ({err})") from None
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as err:
            raise SpecError(f"cannot read {path}: {err.strerror}") from None
        return cls.parse(text, str(path))

    def override(self, values: dict[str, str]) -> "ExperimentSpec":
        """Copy with ``values`` (raw strings, as on the command line) applied."""
        for key in values:
            if key not in _FIELD_NAMES:
                raise SpecError(f"unknown key '{key}'")
        current = {k: v for k, v in self._string_items()}
        current.update(values)
        # a design switch drops parameters the new design does not use
        if "design" in values:
            design = _PARSERS["design"](values["design"])
            for key in _ALL_DESIGN_KEYS:
                if key not in _DESIGN_KEYS[design] and key not in values:
                    current.pop(key, None)
        return ExperimentSpec.from_strings(current)

    def _string_items(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            yield f.name, _FORMATTERS.get(f.name, _fmt_scalar)(value)

    def serialize(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self._string_items())

    def with_(self, **changes) -> "ExperimentSpec":
        return replace(self, **changes)


def _fmt_scalar(value) -> str:
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_list(values) -> str:
    return ",".join(_fmt_scalar(v) for v in values)


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError("not an integer")
    return int(value)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(_int(v) for v in text.split(",") if v.strip())


def _grid(text: str) -> tuple[float, ...]:
    if ":" in text:
        start, stop, count = text.split(":")
        return tuple(float(v) for v in np.linspace(float(start), float(stop), _int(count)))
    return _float_list(text)


def _methods(text: str) -> tuple[CriticalValue, ...]:
    out = tuple(CriticalValue.parse(v.strip()) for v in text.split(",") if v.strip())
    if len(set(out)) != len(out):
        raise ValueError("repeated method")
    return out


def _opt(parser):
    return lambda text: None if text.lower() in ("", "none", "default") else parser(text)


_PARSERS = {
    "design": Design,
    "n": _int,
    "lambda_graph": float,
    "m_attach": _int,
    "c": float,
    "rho": float,
    "R": _opt(_int),
    "b_n": _opt(_int),
    "L": _int,
    "S": _int,
    "beta": float,
    "seed": _int,
    "mc_reps": _int,
    "levels": _float_list,
    "methods": _methods,
    "coverage_mode": CoverageMode,
    "mu_grid": _grid,
    "n_grid": _int_list,
    "k_values": _int_list,
    "lambda_draws": _int,
}
_FORMATTERS = {k: _fmt_list for k in ("levels", "methods", "mu_grid", "n_grid", "k_values")}
_FIELD_NAMES = tuple(_PARSERS)
