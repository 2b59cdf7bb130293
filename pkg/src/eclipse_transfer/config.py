"""Scenario files: sectioned ``key = value`` text with units in the key names.

Example::

    [vehicle]
    mass_kg = 1000
    thrust_n = 1
    isp_s = 1500            ; or ve_ms = 14710

    [initial_orbit]
    apogee_alt_km = 36000
    perigee_alt_km = 500

    [target]
    apogee_alt_km = 36000
    perigee_alt_km = 36000

    [environment]
    perigee_local_time_h = 0
    eclipses = yes

Optional sections: ``[integrator]`` (macro_step_s, event_tol_s, max_time_days,
energy_check, rtol), ``[optimizer]`` (box_half_width_deg, max_evals, epsilon,
workers) and ``[reference]`` (final_mass_kg, final_time_days, delta_v_ms,
revolutions, eclipse_hours), the last one only feeding table deviations.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from eclipse_transfer.dynamics import G0, SUN_RATE, Environment, VehicleSpec
from eclipse_transfer.errors import ConfigError
from eclipse_transfer.orbital import OrbitSpec, local_time_to_alpha0
from eclipse_transfer.propagation import IntegratorSettings
from eclipse_transfer.solver import TransferProblem

DAY = 86400.0
SUN_RATE_DEG_PER_DAY = math.degrees(SUN_RATE) * DAY
REFERENCE_KEYS = ("final_mass_kg", "final_time_days", "delta_v_ms", "revolutions", "eclipse_hours")

# section -> {key: required}
SCHEMA: dict[str, dict[str, bool]] = {
    "scenario": {"name": False},
    "vehicle": {"mass_kg": True, "thrust_n": True, "isp_s": False, "ve_ms": False},
    "initial_orbit": {"apogee_alt_km": True, "perigee_alt_km": True},
    "target": {"apogee_alt_km": True, "perigee_alt_km": True},
    "environment": {"perigee_local_time_h": True, "sun_rate_deg_per_day": False,
                    "eclipses": False},
    "integrator": {"macro_step_s": False, "event_tol_s": False, "max_time_days": False,
                   "energy_check": False, "rtol": False},
    "optimizer": {"box_half_width_deg": False, "max_evals": False, "epsilon": False,
                  "workers": False},
    "reference": {k: False for k in REFERENCE_KEYS},
}


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario in user units (km, days, hours, deg, N, s)."""

    mass_kg: float
    thrust_n: float
    initial_apogee_alt_km: float
    initial_perigee_alt_km: float
    target_apogee_alt_km: float
    target_perigee_alt_km: float
    perigee_local_time_h: float
    isp_s: float | None = None
    ve_ms: float | None = None
    sun_rate_deg_per_day: float = SUN_RATE_DEG_PER_DAY
    eclipses: bool = True
    macro_step_s: float = 1000.0
    event_tol_s: float = 10.0
    max_time_days: float | None = None
    energy_check: bool = False
    rtol: float = 0.0
    box_half_width_deg: float = 10.0
    max_evals: int = 3000
    epsilon: float = 1e-4
    workers: int | None = None
    name: str = "scenario"
    reference: dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def exhaust_velocity(self) -> float:
        return self.ve_ms if self.ve_ms is not None else G0 * self.isp_s

    def to_problem(self) -> TransferProblem:
        """SI problem; validation errors surface as ``ValueError``."""
        env = Environment(
            alpha0=local_time_to_alpha0(self.perigee_local_time_h),
            omega_sun=math.radians(self.sun_rate_deg_per_day) / DAY,
            eclipses_enabled=self.eclipses,
        )
        return TransferProblem(
            env=env,
            vehicle=VehicleSpec(m0=self.mass_kg, thrust=self.thrust_n, ve=self.exhaust_velocity),
            initial_orbit=OrbitSpec(self.initial_apogee_alt_km * 1e3,
                                    self.initial_perigee_alt_km * 1e3),
            target=OrbitSpec(self.target_apogee_alt_km * 1e3, self.target_perigee_alt_km * 1e3),
            integrator=IntegratorSettings(
                macro_step=self.macro_step_s,
                event_tol=self.event_tol_s,
                max_time=None if self.max_time_days is None else self.max_time_days * DAY,
                energy_check=self.energy_check,
                rtol=self.rtol,
            ),
            box_half_width=math.radians(self.box_half_width_deg),
            max_evals=self.max_evals,
            epsilon=self.epsilon,
        )

    @classmethod
    def from_problem(cls, problem: TransferProblem, *, name: str = "scenario",
                     workers: int | None = None) -> ScenarioConfig:
        """Inverse of ``to_problem``; the exhaust velocity is kept as ``ve_ms``."""
        env, veh, integ = problem.env, problem.vehicle, problem.integrator
        lt = ((math.pi - env.alpha0) * 12.0 / math.pi) % 24.0
        return cls(
            mass_kg=veh.m0,
            thrust_n=veh.thrust,
            ve_ms=veh.ve,
            initial_apogee_alt_km=problem.initial_orbit.apogee_alt / 1e3,
            initial_perigee_alt_km=problem.initial_orbit.perigee_alt / 1e3,
            target_apogee_alt_km=problem.target.apogee_alt / 1e3,
            target_perigee_alt_km=problem.target.perigee_alt / 1e3,
            perigee_local_time_h=lt,
            sun_rate_deg_per_day=math.degrees(env.omega_sun) * DAY,
            eclipses=env.eclipses_enabled,
            macro_step_s=integ.macro_step,
            event_tol_s=integ.event_tol,
            max_time_days=None if integ.max_time is None else integ.max_time / DAY,
            energy_check=integ.energy_check,
            rtol=integ.rtol,
            box_half_width_deg=math.degrees(problem.box_half_width),
            max_evals=problem.max_evals,
            epsilon=problem.epsilon,
            workers=workers,
            name=name,
        )

    def to_ini(self) -> str:
        """Render back to the file format (numbers in round-trip precision)."""
        def num(v):
            return repr(float(v)) if isinstance(v, float) else str(v)

        sections = {
            "scenario": {"name": self.name},
            "vehicle": {"mass_kg": self.mass_kg, "thrust_n": self.thrust_n},
            "initial_orbit": {"apogee_alt_km": self.initial_apogee_alt_km,
                              "perigee_alt_km": self.initial_perigee_alt_km},
            "target": {"apogee_alt_km": self.target_apogee_alt_km,
                       "perigee_alt_km": self.target_perigee_alt_km},
            "environment": {"perigee_local_time_h": self.perigee_local_time_h,
                            "sun_rate_deg_per_day": self.sun_rate_deg_per_day,
                            "eclipses": "yes" if self.eclipses else "no"},
            "integrator": {"macro_step_s": self.macro_step_s, "event_tol_s": self.event_tol_s,
                           "energy_check": "yes" if self.energy_check else "no",
                           "rtol": self.rtol},
            "optimizer": {"box_half_width_deg": self.box_half_width_deg,
                          "max_evals": self.max_evals, "epsilon": self.epsilon},
        }
        if self.isp_s is not None:
            sections["vehicle"]["isp_s"] = self.isp_s
        if self.ve_ms is not None:
            sections["vehicle"]["ve_ms"] = self.ve_ms
        if self.max_time_days is not None:
            sections["integrator"]["max_time_days"] = self.max_time_days
        if self.workers is not None:
            sections["optimizer"]["workers"] = self.workers
        if self.reference:
            sections["reference"] = dict(self.reference)
        lines = []
        for sec, items in sections.items():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {num(v)}" for k, v in items.items())
            lines.append("")
        return "\n".join(lines)


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:;#\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    """Line numbers of section headers ``(sec, None)`` and keys ``(sec, key)``."""
    index: dict[tuple[str, str | None], int] = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), no)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[:1].isspace():
            index.setdefault((section, m.group(1).strip().lower()), no)
    return index


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse and validate a scenario.

    Raises:
        ConfigError: naming the offending key and, when known, its line.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"),
                                       interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    lines = _line_index(text)

    def where(section, key=None):
        no = lines.get((section, key)) or lines.get((section, None))
        return f"{source}:{no}" if no else source

    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{where(section)}: unknown section [{section}]")
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{where(section, key)}: unknown key '{key}' in [{section}]")
    for section, keys in SCHEMA.items():
        for key, required in keys.items():
            if required and not parser.has_option(section, key):
                raise ConfigError(f"{where(section)}: missing required key '{key}' in [{section}]")

    def get(section, key, conv, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            if conv is bool:
                return parser.getboolean(section, key)
            value = conv(raw)
        except ValueError:
            raise ConfigError(
                f"{where(section, key)}: bad value {raw!r} for '{key}' in [{section}]") from None
        if conv is float and not math.isfinite(value):
            raise ConfigError(f"{where(section, key)}: '{key}' must be finite, got {raw!r}")
        return value

    isp = get("vehicle", "isp_s", float)
    ve = get("vehicle", "ve_ms", float)
    if (isp is None) == (ve is None):
        raise ConfigError(f"{where('vehicle')}: give exactly one of 'isp_s' or 've_ms' in [vehicle]")

    cfg = ScenarioConfig(
        name=get("scenario", "name", str, Path(source).stem),
        mass_kg=get("vehicle", "mass_kg", float),
        thrust_n=get("vehicle", "thrust_n", float),
        isp_s=isp,
        ve_ms=ve,
        initial_apogee_alt_km=get("initial_orbit", "apogee_alt_km", float),
        initial_perigee_alt_km=get("initial_orbit", "perigee_alt_km", float),
        target_apogee_alt_km=get("target", "apogee_alt_km", float),
        target_perigee_alt_km=get("target", "perigee_alt_km", float),
        perigee_local_time_h=get("environment", "perigee_local_time_h", float),
        sun_rate_deg_per_day=get("environment", "sun_rate_deg_per_day", float,
                                 SUN_RATE_DEG_PER_DAY),
        eclipses=get("environment", "eclipses", bool, True),
        macro_step_s=get("integrator", "macro_step_s", float, 1000.0),
        event_tol_s=get("integrator", "event_tol_s", float, 10.0),
        max_time_days=get("integrator", "max_time_days", float),
        energy_check=get("integrator", "energy_check", bool, False),
        rtol=get("integrator", "rtol", float, 0.0),
        box_half_width_deg=get("optimizer", "box_half_width_deg", float, 10.0),
        max_evals=get("optimizer", "max_evals", int, 3000),
        epsilon=get("optimizer", "epsilon", float, 1e-4),
        workers=get("optimizer", "workers", int),
        reference={k: get("reference", k, float) for k in REFERENCE_KEYS
                   if parser.has_option("reference", k)},
    )
    # physical validation, reported against the section that carries the value
    checks = [
        ("vehicle", "mass_kg", cfg.mass_kg > 0, "must be > 0"),
        ("vehicle", "thrust_n", cfg.thrust_n >= 0, "must be >= 0"),
        ("vehicle", "isp_s" if isp is not None else "ve_ms", cfg.exhaust_velocity > 0,
         "must be > 0"),
        ("initial_orbit", "perigee_alt_km", cfg.initial_perigee_alt_km >= 0, "must be >= 0"),
        ("initial_orbit", "apogee_alt_km",
         cfg.initial_apogee_alt_km >= cfg.initial_perigee_alt_km, "must be >= perigee_alt_km"),
        ("target", "perigee_alt_km", cfg.target_perigee_alt_km > cfg.initial_perigee_alt_km,
         "must exceed the initial perigee altitude"),
        ("target", "apogee_alt_km", cfg.target_apogee_alt_km >= cfg.target_perigee_alt_km,
         "must be >= perigee_alt_km"),
        ("environment", "perigee_local_time_h", 0 <= cfg.perigee_local_time_h < 24,
         "must lie in [0, 24)"),
        ("environment", "sun_rate_deg_per_day", cfg.sun_rate_deg_per_day >= 0, "must be >= 0"),
        ("integrator", "event_tol_s", 0 < cfg.event_tol_s < cfg.macro_step_s,
         "must satisfy 0 < event_tol_s < macro_step_s"),
        ("integrator", "max_time_days", cfg.max_time_days is None or cfg.max_time_days > 0,
         "must be > 0"),
        ("integrator", "rtol", cfg.rtol >= 0, "must be >= 0"),
        ("optimizer", "box_half_width_deg",
         0 < cfg.box_half_width_deg < math.degrees(math.asin(1 / math.sqrt(3))),
         "must lie in (0, 35.26)"),
        ("optimizer", "max_evals", cfg.max_evals >= 1, "must be >= 1"),
        ("optimizer", "epsilon", cfg.epsilon >= 0, "must be >= 0"),
        ("optimizer", "workers", cfg.workers is None or cfg.workers >= 1, "must be >= 1"),
    ]
    for section, key, ok, msg in checks:
        if not ok:
            raise ConfigError(f"{where(section, key)}: '{key}' in [{section}] {msg}")
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    return parse_config(text, str(path))
