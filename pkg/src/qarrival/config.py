"""
Flat ``section.key = value`` configuration for simulation runs.

Example::

    # default transit run
    grid.n = 3201
    packet.k0 = 2.0
    detector.kind = half_line
    detector.x_d = 5.0

Every key is optional; missing keys take the defaults below. Unknown keys are
rejected. ``dumps`` writes every key with round-trip float precision, so
``loads(dumps(cfg)) == cfg``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import PropagatorConfig
from .grid import DetectorSpec, Grid1D, GridError, Region, make_grid, make_region
from .operators import Potential
from .states import WaveFunction, gaussian_packet


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSection:
    x_min: float = -80.0
    x_max: float = 80.0
    n: int = 3201


@dataclass(frozen=True)
class ParticleSection:
    mass: float = 1.0


@dataclass(frozen=True)
class PotentialSection:
    kind: str = "zero"  # zero | step | gaussian_barrier
    height: float = 0.0
    x_edge: float = 0.0
    center: float = 0.0
    width: float = 1.0


@dataclass(frozen=True)
class PacketSection:
    x0: float = -10.0
    sigma: float = 1.0
    k0: float = 2.0


@dataclass(frozen=True)
class DetectorSection:
    kind: str = "half_line"  # half_line | interval
    x_d: float = 5.0
    a: float = 5.0
    b: float = 8.0


@dataclass(frozen=True)
class PropagationSection:
    dt: float = 0.005
    t_final: float = 15.0
    record_every: int = 1


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"


@dataclass(frozen=True)
class SimulationConfig:
    grid: GridSection = field(default_factory=GridSection)
    particle: ParticleSection = field(default_factory=ParticleSection)
    potential: PotentialSection = field(default_factory=PotentialSection)
    packet: PacketSection = field(default_factory=PacketSection)
    detector: DetectorSection = field(default_factory=DetectorSection)
    propagation: PropagationSection = field(default_factory=PropagationSection)
    output: OutputSection = field(default_factory=OutputSection)

    def replace(self, key: str, value) -> SimulationConfig:
        """Copy with one dotted key changed, e.g. ``cfg.replace("packet.k0", 4.0)``."""
        section, name = _split_key(key)
        sec = getattr(self, section)
        return dataclasses.replace(self, **{section: dataclasses.replace(sec, **{name: _coerce(sec, name, value)})})

    @property
    def mass(self) -> float:
        return self.particle.mass


def _sections() -> dict[str, type]:
    return {f.name: f.default_factory for f in dataclasses.fields(SimulationConfig)}


def _split_key(key: str) -> tuple[str, str]:
    section, _, name = key.partition(".")
    cls = _sections().get(section)
    if cls is None or name not in {f.name for f in dataclasses.fields(cls)}:
        raise ConfigError(f"unknown config key {key!r}")
    return section, name


def _coerce(sec, name: str, raw):
    ftype = {f.name: f.type for f in dataclasses.fields(sec)}[name]
    try:
        if ftype == "int":
            if isinstance(raw, str):
                return int(raw.strip())
            if int(raw) != raw:
                raise ValueError
            return int(raw)
        if ftype == "float":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {raw!r} for {name}") from None
    return str(raw).strip()


def loads(text: str) -> SimulationConfig:
    cfg = SimulationConfig()
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        cfg = cfg.replace(key, value)
    return cfg


def load(path) -> SimulationConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return loads(text)


def dumps(cfg: SimulationConfig) -> str:
    lines = []
    for section in _sections():
        sec = getattr(cfg, section)
        for f in dataclasses.fields(sec):
            v = getattr(sec, f.name)
            lines.append(f"{section}.{f.name} = {v!r}" if isinstance(v, float) else f"{section}.{f.name} = {v}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class Setup:
    """Validated objects built from a config."""

    config: SimulationConfig
    grid: Grid1D
    region: Region
    potential: Potential
    psi0: WaveFunction
    propagator: PropagatorConfig

    @property
    def mass(self) -> float:
        return self.config.particle.mass


def n_steps_for(t_final: float, dt: float) -> int:
    steps = t_final / dt
    n = int(round(steps))
    if n < 1 or abs(steps - n) > 1e-9 * max(1.0, steps):
        raise ConfigError(f"t_final={t_final!r} is not a whole number of steps dt={dt!r}")
    return n


def build(cfg: SimulationConfig) -> Setup:
    """Validate every section and construct the run objects, or raise ConfigError."""
    try:
        if not cfg.particle.mass > 0:
            raise ConfigError(f"particle.mass must be positive, got {cfg.particle.mass!r}")
        g = cfg.grid
        grid = make_grid(g.x_min, g.x_max, g.n)

        d = cfg.detector
        if d.kind == "half_line":
            spec = DetectorSpec.half_line(d.x_d)
        elif d.kind == "interval":
            spec = DetectorSpec.interval(d.a, d.b)
        else:
            raise ConfigError(f"detector.kind must be half_line or interval, got {d.kind!r}")
        region = make_region(grid, spec)

        p = cfg.potential
        if p.kind == "zero":
            V = Potential.zero(grid)
        elif p.kind == "step":
            V = Potential.step(grid, p.height, p.x_edge)
        elif p.kind == "gaussian_barrier":
            V = Potential.gaussian_barrier(grid, p.height, p.center, p.width)
        else:
            raise ConfigError(f"potential.kind must be zero, step or gaussian_barrier, got {p.kind!r}")

        k = cfg.packet
        psi0 = gaussian_packet(grid, k.x0, k.sigma, k.k0)
        if region_leak(psi0, region) > 1e-10:
            raise ConfigError("initial packet overlaps the detector region")

        pr = cfg.propagation
        prop = PropagatorConfig(pr.dt, n_steps_for(pr.t_final, pr.dt), pr.record_every)
        if prop.n_steps < 2 * prop.record_every:
            raise ConfigError("propagation must record at least 3 times")
    except ConfigError:
        raise
    except (GridError, ValueError) as e:
        raise ConfigError(str(e)) from None
    return Setup(cfg, grid, region, V, psi0, prop)


def region_leak(psi: WaveFunction, region: Region) -> float:
    a = psi.amplitudes * region.detector_mask
    return float(math.sqrt(psi.grid.dx * float((abs(a) ** 2).sum())))
