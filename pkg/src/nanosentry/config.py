"""Scenario configuration: dataclass, INI-style reader/writer, unit handling.

File layout::

    [scenario]      beta, slots, rule, trials, seed, isi_indexing, truth_model, ...
    [quadrature]    rel_tol, abs_tol, max_subdivisions        (optional)
    [noise]         mu_o, var_o
    [channel]       D_p, D_fc, v, tau                         (shared by all links)
    [link.<name>]   d0, D_cn, n, pd_cn, pf_cn                 (one per CN)

Dimensional values may carry a unit suffix (``20 um``, ``50 ms``,
``2e-10 m2ps``); bare numbers are SI.  ``pd_cn``/``pf_cn`` take a single value
or a comma-separated per-slot list.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal

from .channel import LinkGeometry, QuadratureOptions
from .errors import ConfigError
from .linkstats import CnProfile, NoiseModel

RuleChoice = Literal["and", "or", "both"]

# Unit suffix -> (dimension, factor to SI).
UNITS: dict[str, tuple[str, float]] = {
    "m": ("length", 1.0),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "m2ps": ("diffusivity", 1.0),
    "um2ps": ("diffusivity", 1e-12),
    "mps": ("velocity", 1.0),
    "mmps": ("velocity", 1e-3),
    "umps": ("velocity", 1e-6),
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z0-9]*)\s*$")


@dataclass(frozen=True)
class ScenarioConfig:
    links: tuple[CnProfile, ...]
    noise: NoiseModel
    beta: float
    slots: int
    rule: RuleChoice = "both"
    trials: int = 100_000
    master_seed: int = 0
    isi_indexing: Literal["lag", "absolute"] = "lag"
    truth_model: Literal["per_slot", "persistent"] = "per_slot"
    clamp_counts: bool = False
    quadrature: QuadratureOptions = field(default_factory=QuadratureOptions)
    link_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.links:
            raise ValueError("at least one link is required")
        if self.slots < 1:
            raise ValueError(f"slots must be >= 1, got {self.slots}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.rule not in ("and", "or", "both"):
            raise ValueError(f"rule must be and, or or both, got {self.rule!r}")
        if self.truth_model not in ("per_slot", "persistent"):
            raise ValueError(f"truth_model must be per_slot or persistent, got {self.truth_model!r}")
        if self.isi_indexing not in ("lag", "absolute"):
            raise ValueError(f"isi_indexing must be lag or absolute, got {self.isi_indexing!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        for p in self.links:
            for seq, name in ((p.pd_cn, "pd_cn"), (p.pf_cn, "pf_cn")):
                if len(seq) not in (1, self.slots):
                    raise ValueError(f"{name} needs 1 or {self.slots} entries, got {len(seq)}")
        if not self.link_names:
            object.__setattr__(self, "link_names", tuple(str(i + 1) for i in range(len(self.links))))
        elif len(self.link_names) != len(self.links):
            raise ValueError("link_names must match links")

    @property
    def rules(self) -> tuple[str, ...]:
        return ("and", "or") if self.rule == "both" else (self.rule,)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def with_geometry(self, **changes) -> "ScenarioConfig":
        """Copy with every link's geometry updated (e.g. ``tau=0.2``)."""
        links = tuple(replace(p, geom=replace(p.geom, **changes)) for p in self.links)
        return replace(self, links=links)


def parse_quantity(text: str, dimension: str | None = None) -> float:
    """Parse ``"<number> [unit]"`` into SI; raise ``ValueError`` on mismatch."""
    m = _NUMBER.match(text)
    if not m:
        raise ValueError(f"not a number: {text!r}")
    value = float(m.group(1))
    unit = m.group(2)
    if not unit:
        return value
    if unit not in UNITS:
        raise ValueError(f"unknown unit {unit!r}")
    dim, factor = UNITS[unit]
    if dimension is None or dim != dimension:
        raise ValueError(f"unit {unit!r} is a {dim}, expected {dimension or 'a plain number'}")
    return value * factor


# key -> (dimension or None, kind)
_SCENARIO_KEYS = {
    "beta": (None, "float"),
    "slots": (None, "int"),
    "rule": (None, "str"),
    "trials": (None, "int"),
    "seed": (None, "int"),
    "isi_indexing": (None, "str"),
    "truth_model": (None, "str"),
    "clamp_counts": (None, "bool"),
}
_QUAD_KEYS = {"rel_tol": (None, "float"), "abs_tol": (None, "float"), "max_subdivisions": (None, "int")}
_NOISE_KEYS = {"mu_o": (None, "float"), "var_o": (None, "float")}
_CHANNEL_KEYS = {
    "D_p": ("diffusivity", "float"),
    "D_fc": ("diffusivity", "float"),
    "v": ("velocity", "float"),
    "tau": ("time", "float"),
}
_LINK_KEYS = {
    "d0": ("length", "float"),
    "D_cn": ("diffusivity", "float"),
    "n": (None, "int"),
    "pd_cn": (None, "list"),
    "pf_cn": (None, "list"),
}
_REQUIRED = {
    "scenario": ("beta", "slots"),
    "noise": ("mu_o", "var_o"),
    "channel": ("D_p", "D_fc", "v", "tau"),
    "link": ("d0", "D_cn", "n", "pd_cn", "pf_cn"),
}


def _locate(text: str) -> dict[tuple[str, str], tuple[int, int]]:
    """Map ``(section, key)`` to the 1-based line/column of its value."""
    where: dict[tuple[str, str], tuple[int, int]] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            where[(section, "")] = (lineno, line.index("[") + 1)
            continue
        m = re.match(r"^(\s*)([^=:#;\s][^=:]*?)\s*[=:]\s*", line)
        if m and section is not None:
            where[(section, m.group(2))] = (lineno, m.end() + 1)
    return where


def _read_section(cp: configparser.ConfigParser, section: str, schema: dict,
                  where: dict, kind_name: str) -> dict:
    out = {}
    for key, raw in cp.items(section):
        line, col = where.get((section, key), (None, None))
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{section}]", line, col)
        dim, kind = schema[key]
        try:
            if kind == "float":
                out[key] = parse_quantity(raw, dim)
            elif kind == "int":
                try:
                    out[key] = int(raw.strip())
                except ValueError:
                    value = parse_quantity(raw, dim)
                    if value != int(value):
                        raise ValueError(f"expected an integer, got {raw!r}") from None
                    out[key] = int(value)
            elif kind == "bool":
                if raw.strip().lower() not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                    raise ValueError(f"expected a boolean, got {raw!r}")
                out[key] = raw.strip().lower() in ("true", "yes", "1", "on")
            elif kind == "list":
                out[key] = tuple(parse_quantity(part) for part in raw.split(","))
            else:
                out[key] = raw.strip()
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}", line, col) from None
    base = kind_name.split(".")[0]
    for key in _REQUIRED.get(base, ()):
        if key not in out:
            line, col = where.get((section, ""), (None, None))
            raise ConfigError(f"missing required key {key!r} in [{section}]", line, col)
    return out


def loads_config(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), default_section="\x00unused"
    )
    cp.optionxform = str  # keep D_p / D_cn case
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("content before the first [section] header", exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"malformed line: {exc.errors[0][1] if exc.errors else exc}", lineno, 1) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, 1) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, 1) from None

    where = _locate(text)
    values: dict[str, dict] = {}
    link_sections = []
    for section in cp.sections():
        line, col = where.get((section, ""), (None, None))
        if section.startswith("link.") and len(section) > 5:
            link_sections.append(section)
            values[section] = _read_section(cp, section, _LINK_KEYS, where, "link")
        elif section in ("scenario", "quadrature", "noise", "channel"):
            schema = {"scenario": _SCENARIO_KEYS, "quadrature": _QUAD_KEYS,
                      "noise": _NOISE_KEYS, "channel": _CHANNEL_KEYS}[section]
            values[section] = _read_section(cp, section, schema, where, section)
        else:
            raise ConfigError(f"unknown section [{section}]", line, col)
    for required in ("scenario", "noise", "channel"):
        if required not in values:
            raise ConfigError(f"missing section [{required}]")
    if not link_sections:
        raise ConfigError("at least one [link.<name>] section is required")

    sc, ch = values["scenario"], values["channel"]

    def invalid(section: str, exc: Exception, key: str = "") -> ConfigError:
        line, col = where.get((section, key), where.get((section, ""), (None, None)))
        return ConfigError(f"invalid [{section}]: {exc}", line, col)

    try:
        quad = QuadratureOptions(**values.get("quadrature", {}))
    except ValueError as exc:
        raise invalid("quadrature", exc) from None
    try:
        noise = NoiseModel(**values["noise"])
    except ValueError as exc:
        raise invalid("noise", exc, "var_o") from None

    links = []
    for section in link_sections:
        lk = values[section]
        try:
            geom = LinkGeometry(d0=lk["d0"], D_cn=lk["D_cn"], D_fc=ch["D_fc"], D_p=ch["D_p"],
                                v=ch["v"], tau=ch["tau"])
        except ValueError as exc:
            # Channel-wide values are reported at the [channel] section.
            msg = str(exc)
            key = msg.split()[0]
            sec = "channel" if key in _CHANNEL_KEYS else section
            raise invalid(sec, exc, key) from None
        try:
            links.append(CnProfile(lk["pd_cn"], lk["pf_cn"], lk["n"], geom))
        except ValueError as exc:
            raise invalid(section, exc) from None

    try:
        return ScenarioConfig(
            links=tuple(links),
            noise=noise,
            beta=sc["beta"],
            slots=sc["slots"],
            rule=sc.get("rule", "both"),
            trials=sc.get("trials", 100_000),
            master_seed=sc.get("seed", 0),
            isi_indexing=sc.get("isi_indexing", "lag"),
            truth_model=sc.get("truth_model", "per_slot"),
            clamp_counts=sc.get("clamp_counts", False),
            quadrature=quad,
            link_names=tuple(s[5:] for s in link_sections),
        )
    except ValueError as exc:
        raise invalid("scenario", exc) from None


def parse_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    return loads_config(text)


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical SI text form; ``loads_config(serialize_config(c)) == c``."""
    g0 = cfg.links[0].geom
    for p in cfg.links[1:]:
        g = p.geom
        if (g.D_fc, g.D_p, g.v, g.tau) != (g0.D_fc, g0.D_p, g0.v, g0.tau):
            raise ValueError("links disagree on channel-wide parameters")
    q = cfg.quadrature
    lines = [
        "[scenario]",
        f"beta = {_fmt(cfg.beta)}",
        f"slots = {cfg.slots}",
        f"rule = {cfg.rule}",
        f"trials = {cfg.trials}",
        f"seed = {cfg.master_seed}",
        f"isi_indexing = {cfg.isi_indexing}",
        f"truth_model = {cfg.truth_model}",
        f"clamp_counts = {'true' if cfg.clamp_counts else 'false'}",
        "",
        "[quadrature]",
        f"rel_tol = {_fmt(q.rel_tol)}",
        f"abs_tol = {_fmt(q.abs_tol)}",
        f"max_subdivisions = {q.max_subdivisions}",
        "",
        "[noise]",
        f"mu_o = {_fmt(cfg.noise.mu_o)}",
        f"var_o = {_fmt(cfg.noise.var_o)}",
        "",
        "[channel]",
        f"D_p = {_fmt(g0.D_p)}",
        f"D_fc = {_fmt(g0.D_fc)}",
        f"v = {_fmt(g0.v)}",
        f"tau = {_fmt(g0.tau)}",
    ]
    for name, p in zip(cfg.link_names, cfg.links):
        lines += [
            "",
            f"[link.{name}]",
            f"d0 = {_fmt(p.geom.d0)}",
            f"D_cn = {_fmt(p.geom.D_cn)}",
            f"n = {p.n}",
            "pd_cn = " + ", ".join(_fmt(v) for v in p.pd_cn),
            "pf_cn = " + ", ".join(_fmt(v) for v in p.pf_cn),
        ]
    return "\n".join(lines) + "\n"


def config_digest(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()
