"""Complex refractive indices, constant or tabulated against wavelength."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


class MaterialError(ValueError):
    pass


@dataclass(frozen=True)
class Material:
    """A passive, isotropic medium.

    Either ``n`` is a constant complex index (n + i*kappa), or ``table`` holds
    rows ``(wavelength_nm, n, kappa)`` with strictly increasing wavelength and
    the index is interpolated linearly between rows.
    """

    name: str
    n: complex | None = None
    table: tuple[tuple[float, float, float], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if (self.n is None) == (self.table is None):
            raise MaterialError(f"{self.name}: give exactly one of a constant index or a table")
        if self.n is not None:
            n = complex(self.n)
            if n.imag < 0:
                raise MaterialError(f"{self.name}: kappa must be >= 0 (passive media only)")
            object.__setattr__(self, "n", n)
        else:
            rows = tuple(tuple(float(v) for v in row) for row in self.table)
            if len(rows) < 2 or any(len(r) != 3 for r in rows):
                raise MaterialError(f"{self.name}: table needs >= 2 rows of (wavelength, n, kappa)")
            wl = np.array([r[0] for r in rows])
            if np.any(np.diff(wl) <= 0):
                raise MaterialError(f"{self.name}: table wavelengths must be strictly increasing")
            if any(r[2] < 0 for r in rows):
                raise MaterialError(f"{self.name}: kappa must be >= 0 (passive media only)")
            object.__setattr__(self, "table", rows)

    def index(self, wavelength: float) -> complex:
        if wavelength <= 0:
            raise MaterialError("wavelength must be positive")
        if self.n is not None:
            return self.n
        wl, n, k = np.array(self.table).T
        if not wl[0] <= wavelength <= wl[-1]:
            raise MaterialError(
                f"{self.name}: wavelength {wavelength} nm outside tabulated range "
                f"[{wl[0]}, {wl[-1]}] nm"
            )
        return complex(np.interp(wavelength, wl, n), np.interp(wavelength, wl, k))

    def is_lossless(self, wavelength: float) -> bool:
        return self.index(wavelength).imag == 0

    @classmethod
    def from_dict(cls, d: dict) -> "Material":
        if "table" in d:
            return cls(d["name"], table=tuple(tuple(r) for r in d["table"]))
        return cls(d["name"], n=complex(d["n"], d.get("k", 0.0)))

    def to_dict(self) -> dict:
        if self.n is not None:
            return {"name": self.name, "n": self.n.real, "k": self.n.imag}
        return {"name": self.name, "table": [list(r) for r in self.table]}


VACUUM = Material("vacuum", 1.0)
SILICA = Material("silica", 1.46)
DIAMOND = Material("diamond", 2.42)
# 700 nm value used for every emission calculation.
SILVER_700 = Material("silver", complex(0.16761, 4.2867))
# Literature value, only used for the pump standing wave.
SILVER_532 = Material("silver_532", complex(0.129, 3.19))


def load_materials(path: str | Path | None = None) -> dict[str, Material]:
    """Read a JSON list of material records; defaults to the bundled set."""
    if path is None:
        text = resources.files("nvmirror.data").joinpath("materials.json").read_text()
    else:
        text = Path(path).read_text()
    records = json.loads(text)
    if isinstance(records, dict):
        records = records["materials"]
    out = {}
    for rec in records:
        mat = Material.from_dict(rec)
        out[mat.name] = mat
    return out
