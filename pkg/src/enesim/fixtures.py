"""Measured device parameters: mode frequencies, linewidths and trench depths."""

from __future__ import annotations

from dataclasses import dataclass

from .constants import TWO_PI
from .geometry import Mode
from .spectroscopy import ResonatorParams


@dataclass(frozen=True)
class DeviceFixture:
    name: str
    omega_CM: float  # rad/s
    kappa_CM: float
    omega_DM: float
    kappa_DM: float
    t: float  # m
    # as tabulated: f_CM GHz, kappa_CM kHz, f_DM GHz, kappa_DM kHz, t nm
    source: tuple = ()

    def resonator(self, mode: Mode | str) -> ResonatorParams:
        mode = Mode(mode)
        if mode is Mode.CM:
            return ResonatorParams(self.omega_CM, self.kappa_CM, mode, self.name)
        return ResonatorParams(self.omega_DM, self.kappa_DM, mode, self.name)


_ROWS = (
    ("Shallow Si", "4.5361", "209.0", "4.9251", "154.2", "75"),
    ("Deep Si", "5.2202", "705.0", "6.1839", "994.0", "1100"),
    ("Sapphire 1", "4.5564", "2905.9", "5.6406", "886.6", "0"),
    ("Sapphire 2", "4.9072", "367.8", "5.6788", "265.4", "0"),
    ("Sapphire 3", "4.5361", "167.2", "4.9251", "234.3", "0"),
)


def _make(row) -> DeviceFixture:
    name, fc, kc, fd, kd, t = row
    return DeviceFixture(
        name=name,
        omega_CM=TWO_PI * float(fc) * 1e9,
        kappa_CM=TWO_PI * float(kc) * 1e3,
        omega_DM=TWO_PI * float(fd) * 1e9,
        kappa_DM=TWO_PI * float(kd) * 1e3,
        t=float(t) * 1e-9,
        source=tuple(row[1:]),
    )


DEVICES = tuple(_make(r) for r in _ROWS)


def get_device(name: str) -> DeviceFixture:
    key = name.strip().lower().replace("_", " ")
    for d in DEVICES:
        if d.name.lower() == key:
            return d
    raise KeyError(f"unknown device {name!r}; known: {', '.join(d.name for d in DEVICES)}")


def list_fixtures() -> str:
    """Device table as CSV, frequencies in GHz and linewidths in kHz as tabulated."""
    lines = ["device,omega_CM_2pi_GHz,kappa_CM_2pi_kHz,omega_DM_2pi_GHz,kappa_DM_2pi_kHz,t_nm"]
    lines += [",".join((d.name,) + d.source) for d in DEVICES]
    return "\n".join(lines) + "\n"
