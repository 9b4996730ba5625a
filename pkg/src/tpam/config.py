"""Experiment plans as TOML files.

Every key is optional; an empty file yields the standard tracking study
(five PAMs, increasing and decreasing linear targets, p_max in 0.1..1.0,
101 runs of N=50 over 1000 iterations, alpha=1, C adapted).

Tracking plan::

    name = "linear"
    output_dir = "results"
    pams = ["jde", "epsde", "jade", "mde", "shade"]

    [sim]
    n = 50
    t_max = 1000
    alpha = 1.0
    runs = 101
    base_seed = 0
    mode = "C"                  # "F", "C" or "FC"
    distance = "euclidean"      # or "max"; FC mode only
    strict_pseudocode = false
    trace = false

    [targets]
    families = ["lin_inc", "lin_dec"]   # const, lin_inc, lin_dec, sin, random_walk
    p_max = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    omega = [10.0, 20.0, 30.0, 40.0]    # expands each "sin" family entry
    step = [0.01, 0.02, ..., 0.1]       # expands each "random_walk" entry
    const_value = 0.5

    [targets.f_target]                  # optional, FC mode: separate F target
    family = "const"

    [hyper]                             # any PamHyper field
    memory_size = 10

Validation plan (``tpam validate``) uses ``functions``, ``dims``, ``pams``,
``mutation``, ``crossover``, ``runs``, ``base_seed``, ``evals_per_dim``,
``n`` (0 = automatic), ``p``, ``bounds``, ``target_error`` (0 = run the
full budget), ``n_bins``, ``window`` (0 = 5% of generations) and ``[hyper]``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analysis import CellKey
from .benchmarks import BENCHMARKS
from .de import Crossover, Mutation
from .pam import STANDARD_PAMS, AdaptationMode, ConfigurationError, PamHyper, PamKind
from .simulation import SimConfig
from .targets import TargetFamily, TargetSpec

__all__ = [
    "DePlan",
    "ExperimentPlan",
    "PlanError",
    "SimDefaults",
    "TargetGrid",
    "dump_plan",
    "load_plan",
    "parse_plan",
]


class PlanError(ConfigurationError):
    """Invalid plan; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _grid(start: float, stop: float, n: int) -> list[float]:
    return [round(start + (stop - start) * j / (n - 1), 10) for j in range(n)]


@dataclass
class SimDefaults:
    n: int = 50
    t_max: int = 1000
    alpha: float = 1.0
    runs: int = 101
    base_seed: int = 0
    mode: str = "C"
    distance: str = "euclidean"
    strict_pseudocode: bool = False
    trace: bool = False


@dataclass
class TargetGrid:
    families: list[str] = field(default_factory=lambda: ["lin_inc", "lin_dec"])
    p_max: list[float] = field(default_factory=lambda: _grid(0.1, 1.0, 10))
    omega: list[float] = field(default_factory=lambda: [10.0, 20.0, 30.0, 40.0])
    step: list[float] = field(default_factory=lambda: _grid(0.01, 0.1, 10))
    const_value: float = 0.5
    f_target: dict | None = None


@dataclass
class ExperimentPlan:
    name: str = "default"
    output_dir: str = "results"
    pams: list[str] = field(default_factory=lambda: [k.label for k in STANDARD_PAMS])
    sim: SimDefaults = field(default_factory=SimDefaults)
    targets: TargetGrid = field(default_factory=TargetGrid)
    hyper: PamHyper = field(default_factory=PamHyper)

    def validate(self) -> "ExperimentPlan":
        if not self.name or "/" in self.name:
            raise PlanError("name", f"must be a plain directory name, got {self.name!r}")
        if not self.pams:
            raise PlanError("pams", "must list at least one PAM")
        for p in self.pams:
            try:
                PamKind.parse(p)
            except ConfigurationError as exc:
                raise PlanError("pams", str(exc)) from None
        s = self.sim
        if s.runs < 1:
            raise PlanError("sim.runs", f"must be >= 1, got {s.runs}")
        try:
            AdaptationMode.parse(s.mode)
        except ConfigurationError as exc:
            raise PlanError("sim.mode", str(exc)) from None
        try:
            SimConfig(n=s.n, t_max=s.t_max, alpha=s.alpha, mode=s.mode, distance=s.distance)
        except ConfigurationError as exc:
            raise PlanError("sim", str(exc)) from None
        g = self.targets
        if not g.families:
            raise PlanError("targets.families", "must list at least one family")
        if not g.p_max:
            raise PlanError("targets.p_max", "grid must be nonempty")
        for v in g.p_max:
            if not 0.0 <= v <= 1.0:
                raise PlanError("targets.p_max", f"values must lie in [0, 1], got {v}")
        fams = []
        for f in g.families:
            try:
                fams.append(TargetFamily.parse(f))
            except ConfigurationError as exc:
                raise PlanError("targets.families", str(exc)) from None
        if TargetFamily.SIN in fams and not g.omega:
            raise PlanError("targets.omega", "grid must be nonempty for sin targets")
        if TargetFamily.RANDOM_WALK in fams and not g.step:
            raise PlanError("targets.step", "grid must be nonempty for random_walk targets")
        try:
            for _, spec in self.cells():
                pass
            self.f_target_spec()
        except ConfigurationError as exc:
            raise PlanError("targets", str(exc)) from None
        for p in self.pams:
            try:
                self.hyper.validate(PamKind.parse(p))
            except ConfigurationError as exc:
                raise PlanError("hyper", str(exc)) from None
        return self

    def target_specs(self) -> list[TargetSpec]:
        g = self.targets
        out = []
        for f in g.families:
            fam = TargetFamily.parse(f)
            if fam is TargetFamily.SIN:
                out += [TargetSpec(fam, omega=float(w)) for w in g.omega]
            elif fam is TargetFamily.RANDOM_WALK:
                out += [TargetSpec(fam, step=float(s)) for s in g.step]
            elif fam is TargetFamily.CONST:
                out.append(TargetSpec(fam, value=float(g.const_value)))
            else:
                out.append(TargetSpec(fam))
        return out

    def f_target_spec(self) -> TargetSpec | None:
        ft = self.targets.f_target
        if not ft:
            return None
        return TargetSpec(**ft)

    def cells(self) -> list[tuple[CellKey, TargetSpec]]:
        """All (cell key, target spec) pairs, sorted by key."""
        out = []
        for pam in self.pams:
            label = PamKind.parse(pam).label
            for spec in self.target_specs():
                for p in self.targets.p_max:
                    key = CellKey(
                        label, spec.family.value,
                        spec.omega if spec.family is TargetFamily.SIN else None,
                        spec.step if spec.family is TargetFamily.RANDOM_WALK else None,
                        float(p))
                    out.append((key, spec))
        out.sort(key=lambda kv: kv[0].sort_key())
        return out


@dataclass
class DePlan:
    name: str = "validation"
    output_dir: str = "results"
    functions: list[str] = field(default_factory=lambda: ["rosenbrock"])
    dims: list[int] = field(default_factory=lambda: [10])
    pams: list[str] = field(default_factory=lambda: ["jade"])
    mutation: str = Mutation.CUR_TO_PBEST_1.value
    crossover: str = Crossover.BINOMIAL.value
    runs: int = 15
    base_seed: int = 0
    evals_per_dim: int = 10_000
    n: int = 0
    p: float = 0.05
    bounds: list[float] = field(default_factory=lambda: [-5.0, 5.0])
    target_error: float = 1e-8
    n_bins: int = 20
    window: int = 0
    trace: bool = False
    hyper: PamHyper = field(default_factory=PamHyper)

    def validate(self) -> "DePlan":
        if not self.name or "/" in self.name:
            raise PlanError("name", f"must be a plain directory name, got {self.name!r}")
        for fn in self.functions:
            if fn not in BENCHMARKS:
                raise PlanError("functions", f"unknown benchmark {fn!r}")
        if not self.functions or not self.dims or not self.pams:
            raise PlanError("functions/dims/pams", "must all be nonempty")
        for d in self.dims:
            if int(d) < 1:
                raise PlanError("dims", f"dimensions must be >= 1, got {d}")
        for p in self.pams:
            try:
                self.hyper.validate(PamKind.parse(p))
            except ConfigurationError as exc:
                raise PlanError("pams", str(exc)) from None
        for name, parse in (("mutation", Mutation.parse), ("crossover", Crossover.parse)):
            try:
                parse(getattr(self, name))
            except ConfigurationError as exc:
                raise PlanError(name, str(exc)) from None
        if self.runs < 1:
            raise PlanError("runs", f"must be >= 1, got {self.runs}")
        if self.evals_per_dim < 1:
            raise PlanError("evals_per_dim", "must be >= 1")
        if len(self.bounds) != 2 or not self.bounds[0] < self.bounds[1]:
            raise PlanError("bounds", f"need [lo, hi] with lo < hi, got {self.bounds}")
        if self.n_bins < 1:
            raise PlanError("n_bins", "must be >= 1")
        if self.window < 0 or self.n < 0 or self.target_error < 0:
            raise PlanError("window/n/target_error", "must be >= 0")
        return self


_SECTIONS = {
    ExperimentPlan: {"sim": SimDefaults, "targets": TargetGrid, "hyper": PamHyper},
    DePlan: {"hyper": PamHyper},
}


def _from_dict(cls, data: dict, prefix: str = ""):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise PlanError(prefix + key, "unknown key")
        sub = _SECTIONS.get(cls, {}).get(key)
        if sub is not None:
            if not isinstance(value, dict):
                raise PlanError(prefix + key, "must be a table")
            value = _from_dict(sub, value, prefix + key + ".")
        elif cls is PamHyper and key in ("f_pool", "c_pool"):
            value = tuple(float(v) for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise PlanError(prefix.rstrip(".") or cls.__name__, str(exc)) from None


def _to_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if v is None:
            continue
        if dataclasses.is_dataclass(v):
            v = _to_dict(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out


def parse_plan(text: str, kind: type = ExperimentPlan):
    """Parse TOML text into a validated plan of type ``kind``."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise PlanError("<file>", f"not valid TOML: {exc}") from None
    return _from_dict(kind, data).validate()


def load_plan(path, kind: type = ExperimentPlan):
    if path is None:
        return kind().validate()
    return parse_plan(Path(path).read_text(), kind)


def dump_plan(plan) -> str:
    return tomli_w.dumps(_to_dict(plan))
