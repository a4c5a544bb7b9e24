"""Flat key=value run configuration shared by the command line tools.

The format is a plain text file of ``key = value`` lines with ``#``
comments. Keys live in a few fixed namespaces:

    device.<field>          any DeviceParams field, e.g. device.vdd = 0.9
    cost.<flavor>.<axis>    cost multiples, e.g. cost.camo8.area = 4
    seed                    default RNG seed for seeded subcommands
    jobs                    worker count accepted for compatibility
    report_format           currently only "json"
    out_dir                 default directory for written outputs

Unknown keys are rejected rather than ignored so a typo cannot silently
fall back to defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .camouflage import CostMultiples, CostTable
from .cell import CellFlavor
from .device import DeviceParams
from .errors import ConfigFileError, VtcamoError

_DEVICE_FIELDS = {f.name for f in dataclasses.fields(DeviceParams)}
_COST_AXES = ("area", "power", "delay")
_FLAVOR_NAMES = {f.value.lower(): f for f in CellFlavor}
_REPORT_FORMATS = ("json",)


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration with every default filled in."""

    device: DeviceParams = field(default_factory=DeviceParams)
    cost: CostTable = field(default_factory=CostTable)
    seed: int = 0
    jobs: int = 1
    report_format: str = "json"
    out_dir: str = "."

    def resolved_dict(self) -> dict:
        """Flat mapping of every effective setting, for report embedding."""
        out = {}
        for f in dataclasses.fields(DeviceParams):
            out[f"device.{f.name}"] = getattr(self.device, f.name)
        for flavor in sorted(self.cost.entries, key=lambda fl: fl.value):
            m = self.cost.entries[flavor]
            for axis in _COST_AXES:
                out[f"cost.{flavor.value.lower()}.{axis}"] = getattr(m, axis)
        out["seed"] = self.seed
        out["jobs"] = self.jobs
        out["report_format"] = self.report_format
        out["out_dir"] = self.out_dir
        return out


def _parse_scalar(key: str, raw: str, kind: type) -> float | int | str:
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigFileError(f"{key}: expected a {kind.__name__}, "
                              f"got {raw!r}") from None
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse key=value configuration text into a RunConfig."""
    device_over: dict[str, float] = {}
    cost_over: dict[CellFlavor, dict[str, float]] = {}
    scalars: dict[str, int | str] = {}
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigFileError(f"line {lineno}: expected key = value, "
                                  f"got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if not key or not raw:
            raise ConfigFileError(f"line {lineno}: empty key or value")
        if key in seen:
            raise ConfigFileError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if key.startswith("device."):
            name = key[len("device."):]
            if name not in _DEVICE_FIELDS:
                raise ConfigFileError(f"line {lineno}: unknown device "
                                      f"parameter {name!r}")
            device_over[name] = _parse_scalar(key, raw, float)
        elif key.startswith("cost."):
            parts = key.split(".")
            if (len(parts) != 3 or parts[1] not in _FLAVOR_NAMES
                    or parts[2] not in _COST_AXES):
                raise ConfigFileError(
                    f"line {lineno}: cost keys look like "
                    f"cost.<camo8|cmos3a|cmos3b>.<area|power|delay>, "
                    f"got {key!r}")
            flavor = _FLAVOR_NAMES[parts[1]]
            cost_over.setdefault(flavor, {})[parts[2]] = _parse_scalar(
                key, raw, float)
        elif key == "seed":
            scalars["seed"] = _parse_scalar(key, raw, int)
        elif key == "jobs":
            jobs = _parse_scalar(key, raw, int)
            if jobs < 1:
                raise ConfigFileError(f"line {lineno}: jobs must be >= 1")
            scalars["jobs"] = jobs
        elif key == "report_format":
            if raw not in _REPORT_FORMATS:
                raise ConfigFileError(f"line {lineno}: unsupported "
                                      f"report_format {raw!r}")
            scalars["report_format"] = raw
        elif key == "out_dir":
            scalars["out_dir"] = raw
        else:
            raise ConfigFileError(f"line {lineno}: unknown key {key!r}")
    try:
        device = DeviceParams(**device_over)
        entries = dict(CostTable().entries)
        for flavor, axes in cost_over.items():
            current = entries[flavor]
            entries[flavor] = CostMultiples(
                area=axes.get("area", current.area),
                power=axes.get("power", current.power),
                delay=axes.get("delay", current.delay))
        cost = CostTable(entries)
    except VtcamoError as exc:
        raise ConfigFileError(str(exc)) from exc
    return RunConfig(device=device, cost=cost, **scalars)


def load_config(path: str) -> RunConfig:
    """Read and parse a configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigFileError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text)
