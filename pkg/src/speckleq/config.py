"""Run configuration: YAML loading with line tracking, state tokens, presets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

from .correlators import KINDS
from .ensemble import STATISTICS
from .states import Coherent, Fock, ModeState, ProductInput, SqueezedVacuum, Thermal, Vacuum

COMMANDS = ("speckle", "sweep", "mc", "verify")


class ConfigError(ValueError):
    def __init__(self, message: str, source: str | None = None, line: int | None = None):
        self.source, self.line = source, line
        where = f"{source}:{line}: " if source and line else (f"{source}: " if source else "")
        super().__init__(where + message)


def _number(text: str) -> float:
    text = text.strip()
    sign = -1.0 if text.startswith("-") else 1.0
    body = text.lstrip("+-")
    if body == "pi":
        return sign * math.pi
    return float(text)


def parse_mode_state(token: str) -> ModeState:
    """Parse ``fock:n``, ``sqz:r:phi``, ``coh:re:im``, ``thermal:nbar`` or ``vac``.

    ``phi`` also accepts ``pi`` and ``-pi``.
    """
    parts = str(token).strip().split(":")
    tag, args = parts[0], parts[1:]
    arity = {"vac": 0, "fock": 1, "thermal": 1, "sqz": 2, "coh": 2}
    if tag not in arity:
        raise ValueError(f"unknown state token {token!r}")
    if len(args) != arity[tag]:
        raise ValueError(f"state token {token!r} needs {arity[tag]} argument(s)")
    try:
        if tag == "vac":
            return Vacuum()
        if tag == "fock":
            n = int(args[0])
            return Fock(n)
        if tag == "thermal":
            return Thermal(float(args[0]))
        if tag == "sqz":
            return SqueezedVacuum(float(args[0]), _number(args[1]))
        return Coherent(complex(float(args[0]), float(args[1])))
    except ValueError as exc:
        raise ValueError(f"bad state token {token!r}: {exc}") from None


def format_mode_state(state: ModeState) -> str:
    if isinstance(state, Vacuum):
        return "vac"
    if isinstance(state, Fock):
        return f"fock:{state.n}"
    if isinstance(state, Thermal):
        return f"thermal:{state.nbar!r}"
    if isinstance(state, SqueezedVacuum):
        return f"sqz:{state.r!r}:{state.phi!r}"
    if isinstance(state, Coherent):
        return f"coh:{state.alpha.real!r}:{state.alpha.imag!r}"
    raise TypeError(type(state).__name__)


def input_spec(inp: ProductInput) -> dict:
    return {"total_ports": inp.total_ports, "ports": {str(p): format_mode_state(s) for p, s in inp.entries.items()}}


@dataclass
class RunConfig:
    command: str | None = None
    preset: str | None = None
    seed: int = 0
    grid: tuple[int, int] = (10, 10)
    n_modes: int | None = None
    tau: float | None = None
    inputs: Any = None  # list of tokens or {port: token}
    input_sets: list | None = None
    kinds: tuple[str, ...] = ("photon_correlation",)
    reference_mode: int | None = None
    model: str = "analytic"
    s_meso: float = 2.0
    s_loc: float = 40.0
    s_values: tuple[float, ...] | None = None
    realizations: int = 10_000
    statistic: str = "c2"
    workers: int = 1
    out: str = "."
    lines: dict = field(default_factory=dict, repr=False)
    source: str | None = field(default=None, repr=False)

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(f"{key}: {message}", self.source, self.lines.get(key))

    def resolved(self) -> dict:
        """Everything that determines the results; execution details are omitted."""
        return {
            "command": self.command,
            "preset": self.preset,
            "seed": self.seed,
            "grid": list(self.grid),
            "N": self.n_modes,
            "tau": self.tau,
            "inputs": self.inputs,
            "input_sets": self.input_sets,
            "kinds": list(self.kinds),
            "reference_mode": self.reference_mode,
            "model": self.model,
            "anchors": {"s_meso": self.s_meso, "s_loc": self.s_loc},
            "s_values": list(self.s_values) if self.s_values is not None else None,
            "realizations": self.realizations,
            "statistic": self.statistic,
        }


FIG3_SEED = 2010
SQUEEZED_PAIR = ["sqz:0.15:0", "sqz:0.15:pi"]

PRESETS: dict[str, dict] = {
    "fig3a": dict(command="speckle", grid=(10, 10), n_modes=100, tau=1 / 300, inputs=["fock:1", "fock:1"],
                  kinds=("photon_correlation",), seed=FIG3_SEED),
    "fig3b": dict(command="speckle", grid=(10, 10), n_modes=100, tau=1 / 300, inputs=list(SQUEEZED_PAIR),
                  kinds=("log10_qvp",), seed=FIG3_SEED),
    "fig4": dict(command="sweep", n_modes=50, model="analytic", s_values=tuple(float(s) for s in range(2, 101)),
                 input_sets=[["fock:2"], ["fock:1", "fock:1"], ["fock:3"], ["fock:1", "fock:1", "fock:1"],
                             list(SQUEEZED_PAIR)]),
    "mc11": dict(command="mc", inputs=["fock:1", "fock:1"], tau=1 / 300, statistic="c2", realizations=100_000,
                 seed=1),
    "mcsqz": dict(command="mc", inputs=list(SQUEEZED_PAIR), tau=1 / 300, statistic="qvp", realizations=10_000,
                  seed=1),
}

#: Experimental structures marked on the disorder axis: (s, native mode count).
EXPERIMENTS: dict[str, dict] = {
    "peeters": {"s": 2.0, "N": None, "note": "two scattering surfaces"},
    "smolka": {"s": 20 / 0.9, "N": None, "note": "titania powder, L=20um, l~0.9um, N>1e3"},
    "phcw": {"s": 100 / 20, "N": 5, "note": "disordered photonic crystal waveguide, L=100um, l~20um"},
}

_KEYS = {
    "command": "command", "preset": "preset", "seed": "seed", "grid": "grid", "N": "n_modes", "tau": "tau",
    "inputs": "inputs", "input_sets": "input_sets", "kinds": "kinds", "reference_mode": "reference_mode",
    "model": "model", "anchors": None, "sweep": None, "s_values": "s_values", "realizations": "realizations",
    "statistic": "statistic", "workers": "workers", "out": "out",
}


def _line_map(text: str) -> dict:
    node = yaml.compose(text)
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            lines[k.value] = k.start_mark.line + 1
            if isinstance(v, yaml.MappingNode):
                for k2, _ in v.value:
                    lines[f"{k.value}.{k2.value}"] = k2.start_mark.line + 1
    return lines


def load_config_file(path) -> tuple[dict, dict]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        data = yaml.safe_load(text) or {}
        lines = _line_map(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", str(path),
                          mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", str(path), 1)
    return data, lines


def _as_float(cfg: RunConfig, key: str, value) -> float:
    try:
        return float(Fraction(value)) if isinstance(value, str) else float(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise cfg.error(key, f"expected a number, got {value!r}") from None


def _as_int(cfg: RunConfig, key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise cfg.error(key, f"expected an integer, got {value!r}")
    return value


def build_config(data: dict | None = None, lines: dict | None = None, source: str | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Layer preset < config file < flag overrides and validate the result."""
    data = dict(data or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    cfg = RunConfig(lines=lines or {}, source=source)

    for key in data:
        if key not in _KEYS:
            raise cfg.error(key, "unknown key")

    preset = overrides.get("preset", data.get("preset"))
    if preset is not None:
        if preset not in PRESETS:
            raise cfg.error("preset", f"unknown preset {preset!r}; available: {', '.join(PRESETS)}")
        cfg = replace(cfg, preset=preset, **PRESETS[preset])

    raw = {k: v for k, v in data.items() if _KEYS.get(k)}
    if "anchors" in data:
        anchors = data["anchors"]
        if not isinstance(anchors, dict) or set(anchors) - {"s_meso", "s_loc"}:
            raise cfg.error("anchors", "expected a mapping with s_meso and/or s_loc")
        for k, v in anchors.items():
            setattr(cfg, k, _as_float(cfg, f"anchors.{k}", v))
    if "sweep" in data:
        sw = data["sweep"]
        if not isinstance(sw, dict) or set(sw) != {"s_min", "s_max", "points"}:
            raise cfg.error("sweep", "expected a mapping with s_min, s_max and points")
        lo, hi = _as_float(cfg, "sweep.s_min", sw["s_min"]), _as_float(cfg, "sweep.s_max", sw["s_max"])
        pts = _as_int(cfg, "sweep.points", sw["points"])
        if pts < 1 or hi < lo:
            raise cfg.error("sweep", "need points >= 1 and s_max >= s_min")
        cfg.s_values = tuple(float(x) for x in (lo + (hi - lo) * i / max(pts - 1, 1) for i in range(pts)))

    for key, value in list(raw.items()) + list(overrides.items()):
        attr = _KEYS.get(key, key)
        if attr == "preset":
            continue
        if attr == "tau":
            value = _as_float(cfg, key, value)
        elif attr in ("seed", "n_modes", "realizations", "workers", "reference_mode"):
            value = _as_int(cfg, key, value)
        elif attr == "grid":
            if not (isinstance(value, (list, tuple)) and len(value) == 2):
                raise cfg.error(key, "expected [nx, ny]")
            value = (_as_int(cfg, key, value[0]), _as_int(cfg, key, value[1]))
        elif attr == "kinds":
            value = tuple([value] if isinstance(value, str) else value)
        elif attr == "s_values":
            value = tuple(_as_float(cfg, key, v) for v in value)
        elif attr == "model":
            value = str(value)
        setattr(cfg, attr, value)

    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.command not in COMMANDS:
        raise cfg.error("command", f"expected one of {COMMANDS}, got {cfg.command!r}")
    if cfg.seed < 0:
        raise cfg.error("seed", "must be nonnegative")
    if cfg.workers < 1:
        raise cfg.error("workers", "must be at least 1")
    if cfg.tau is not None and not cfg.tau > 0:
        raise cfg.error("tau", "must be positive")
    for kind in cfg.kinds:
        if kind not in KINDS:
            raise cfg.error("kinds", f"unknown kind {kind!r}; expected {KINDS}")
    if cfg.statistic not in STATISTICS:
        raise cfg.error("statistic", f"expected one of {STATISTICS}")
    if cfg.grid[0] < 1 or cfg.grid[1] < 1:
        raise cfg.error("grid", "dimensions must be positive")

    if cfg.command == "speckle":
        if cfg.tau is None:
            raise cfg.error("tau", "speckle needs tau")
        if cfg.n_modes is None:
            cfg.n_modes = cfg.grid[0] * cfg.grid[1]
        if cfg.inputs is None:
            raise cfg.error("inputs", "speckle needs inputs")
        make_input(cfg, cfg.inputs, cfg.n_modes, "inputs")
    elif cfg.command == "sweep":
        if cfg.n_modes is None:
            raise cfg.error("N", "sweep needs N")
        if not cfg.s_values:
            raise cfg.error("s_values", "sweep needs s_values or a sweep range")
        sets = cfg.input_sets or ([cfg.inputs] if cfg.inputs is not None else None)
        if not sets:
            raise cfg.error("input_sets", "sweep needs input_sets")
        cfg.input_sets = sets
        for spec in sets:
            make_input(cfg, spec, None, "input_sets")
    elif cfg.command == "mc":
        if cfg.tau is None:
            raise cfg.error("tau", "mc needs tau")
        if cfg.realizations < 2:
            raise cfg.error("realizations", "need at least 2")
        if cfg.inputs is None:
            raise cfg.error("inputs", "mc needs inputs")
        make_input(cfg, cfg.inputs, cfg.n_modes, "inputs")


def make_input(cfg: RunConfig, spec, total_ports: int | None, key: str) -> ProductInput:
    """Build a ProductInput from a token list (ports 0, 1, ...) or a ``{port: token}`` map."""
    if isinstance(spec, dict):
        items = list(spec.items())
    elif isinstance(spec, (list, tuple)):
        items = list(enumerate(spec))
    else:
        raise cfg.error(key, f"expected a list of state tokens or a port mapping, got {spec!r}")
    entries = {}
    for port, token in items:
        try:
            port = int(port)
            entries[port] = parse_mode_state(token)
        except ValueError as exc:
            raise cfg.error(key, str(exc)) from None
    total = total_ports if total_ports is not None else (max(entries) + 1 if entries else 1)
    try:
        return ProductInput(entries, total)
    except (IndexError, ValueError) as exc:
        raise cfg.error(key, str(exc)) from None
