"""Run configuration: an INI-style key=value file whose defaults are the reference constants.

Recognised sections: ``[data]``, ``[synth]``, ``[baselines]``, ``[emissions]``,
``[grid]``, ``[efficiency]``, ``[targets]``, ``[dynamics]``, ``[storage]``,
``[output]`` and any number of ``[scenario <label>]`` sections.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .dynamics import DEFAULT_STORAGE, StorageLedger
from .efficiency import DEFAULT_DELTA
from .ingest import Baselines
from .scenario import CCGT_INTENSITY, EmissionsConfig
from .synth import SynthSpec
from .tables import DEFAULT_HDRM_AXIS, DEFAULT_SM_AXIS, DEFAULT_TARGETS, DEFAULT_WM_AXIS, LOOKUP_HDRMS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    """A scenario row: explicit ``wm``/``sm``, or a ``target`` resolved through a lookup table."""

    label: str
    hdrm: float
    wm: float | None = None
    sm: float | None = None
    target: float | None = None
    accommodated: float | None = None


DEFAULT_SCENARIOS = (
    ScenarioSpec("A", 48.5, wm=0.0, sm=0.0),
    ScenarioSpec("B", 48.5, target=0.7),
    ScenarioSpec("C", 48.5, target=0.5),
    ScenarioSpec("D", 48.5, target=0.3),
    ScenarioSpec("E", 48.5, wm=8.96, sm=6.1),
)


@dataclass(frozen=True)
class RunConfig:
    data_path: Path | None = None
    synth: SynthSpec | None = None
    seed: int = 0
    baselines: Baselines = Baselines()
    ccgt_intensity: float = CCGT_INTENSITY
    hdrm_axis: tuple[float, ...] = DEFAULT_HDRM_AXIS
    wm_axis: tuple[float, ...] = DEFAULT_WM_AXIS
    sm_axis: tuple[float, ...] = DEFAULT_SM_AXIS
    workers: int = 1
    delta_wm: float = DEFAULT_DELTA
    delta_sm: float = DEFAULT_DELTA
    targets: tuple[float, ...] = DEFAULT_TARGETS
    lookup_hdrms: tuple[float, ...] = LOOKUP_HDRMS
    scenarios: tuple[ScenarioSpec, ...] = DEFAULT_SCENARIOS
    dynamics_hdrm: float = 48.5
    dynamics_wm: float = 8.96
    dynamics_sm: float = 6.1
    plot_weeks: tuple[int, ...] = (3, 24, 52)
    storage: StorageLedger = field(default_factory=StorageLedger)
    out_dir: Path = Path("out")

    def __post_init__(self):
        if self.data_path is not None and self.synth is not None:
            raise ConfigError("give either a data path or a synth section, not both")
        if not (self.delta_wm > 0 and self.delta_sm > 0):
            raise ConfigError("efficiency deltas must be positive")
        for name in ("hdrm_axis", "wm_axis", "sm_axis"):
            axis = getattr(self, name)
            if not axis or any(b <= a for a, b in zip(axis, axis[1:])):
                raise ConfigError(f"{name} must be non-empty and strictly increasing, got {axis}")
        if not self.ccgt_intensity > 0:
            raise ConfigError(f"ccgt_intensity must be positive, got {self.ccgt_intensity}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for t in self.targets:
            if not 0 < t < 1:
                raise ConfigError(f"targets must lie in (0, 1), got {t}")

    @property
    def emissions(self) -> EmissionsConfig:
        return EmissionsConfig(self.ccgt_intensity, self.baselines)


def _floats(text: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers, got {text!r}") from exc


def _float(section: configparser.SectionProxy, key: str, default: float) -> float:
    try:
        return section.getfloat(key, default)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: not a number") from exc


def _opt_float(section: configparser.SectionProxy, key: str) -> float | None:
    return _float(section, key, None) if key in section else None


_SYNTH_FIELDS = {f.name: f for f in fields(SynthSpec)}


def _synth(section: configparser.SectionProxy) -> tuple[SynthSpec, int]:
    kwargs = {}
    seed = 0
    for key, value in section.items():
        if key == "seed":
            try:
                seed = int(value)
            except ValueError as exc:
                raise ConfigError(f"[synth] seed must be an integer, got {value!r}") from exc
        elif key == "wind_weekly_means":
            kwargs[key] = _floats(value, key)
        elif key in _SYNTH_FIELDS and key != "start":
            kwargs[key] = _float(section, key, 0.0)
        else:
            raise ConfigError(f"[synth] unknown key {key!r}")
    try:
        return SynthSpec(**kwargs), seed
    except ValueError as exc:
        raise ConfigError(f"[synth] {exc}") from exc


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    base_dir = base_dir or Path(".")
    kw: dict = {}

    if cp.has_section("data") and cp["data"].get("path"):
        p = Path(cp["data"]["path"])
        kw["data_path"] = p if p.is_absolute() else base_dir / p
    if cp.has_section("synth"):
        kw["synth"], kw["seed"] = _synth(cp["synth"])
    if cp.has_section("baselines"):
        s = cp["baselines"]
        try:
            kw["baselines"] = Baselines(_float(s, "wind_base", 6.045), _float(s, "solar_base", 1.16))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if cp.has_section("emissions"):
        kw["ccgt_intensity"] = _float(cp["emissions"], "ccgt_intensity", CCGT_INTENSITY)
    if cp.has_section("grid"):
        g = cp["grid"]
        for key, name in (("hdrm", "hdrm_axis"), ("wm", "wm_axis"), ("sm", "sm_axis")):
            if key in g:
                kw[name] = _floats(g[key], key)
        if "workers" in g:
            kw["workers"] = int(_float(g, "workers", 1))
    if cp.has_section("efficiency"):
        e = cp["efficiency"]
        kw["delta_wm"] = _float(e, "delta_wm", DEFAULT_DELTA)
        kw["delta_sm"] = _float(e, "delta_sm", DEFAULT_DELTA)
    if cp.has_section("targets"):
        t = cp["targets"]
        if "iwe_ise" in t:
            kw["targets"] = _floats(t["iwe_ise"], "iwe_ise")
        if "lookup_hdrm" in t:
            kw["lookup_hdrms"] = _floats(t["lookup_hdrm"], "lookup_hdrm")
    if cp.has_section("dynamics"):
        d = cp["dynamics"]
        kw["dynamics_hdrm"] = _float(d, "hdrm", 48.5)
        kw["dynamics_wm"] = _float(d, "wm", 8.96)
        kw["dynamics_sm"] = _float(d, "sm", 6.1)
        if "plot_weeks" in d:
            kw["plot_weeks"] = tuple(int(w) for w in _floats(d["plot_weeks"], "plot_weeks"))
    if cp.has_section("storage"):
        caps = {k: _float(cp["storage"], k, 0.0) for k in cp["storage"]}
        try:
            kw["storage"] = StorageLedger(caps or dict(DEFAULT_STORAGE))
        except ValueError as exc:
            raise ConfigError(f"[storage] {exc}") from exc
    if cp.has_section("output") and cp["output"].get("dir"):
        kw["out_dir"] = Path(cp["output"]["dir"])

    scenarios = []
    for name in cp.sections():
        if not name.startswith("scenario"):
            continue
        label = name[len("scenario") :].strip() or f"S{len(scenarios) + 1}"
        s = cp[name]
        if "hdrm" not in s:
            raise ConfigError(f"[{name}] needs hdrm")
        spec = ScenarioSpec(
            label=s.get("label", label),
            hdrm=_float(s, "hdrm", 0.0),
            wm=_opt_float(s, "wm"),
            sm=_opt_float(s, "sm"),
            target=_opt_float(s, "target"),
            accommodated=_opt_float(s, "accommodated"),
        )
        if (spec.wm is None or spec.sm is None) and spec.target is None:
            raise ConfigError(f"[{name}] needs wm and sm, or a target")
        scenarios.append(spec)
    if scenarios:
        kw["scenarios"] = tuple(scenarios)

    try:
        return RunConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    if "data_path" in changes:
        changes["synth"] = None
    elif "seed" in changes:
        changes["synth"] = config.synth or SynthSpec()
        changes["data_path"] = None
    return replace(config, **changes)
