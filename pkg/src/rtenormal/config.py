"""Experiment configuration: JSON schema, defaults, validation."""
from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import AngularField, GridSpec
from .io import read_field
from .scene import (
    NoiseSpec,
    PhantomSpec,
    disk_bumps,
    example_medium,
    rect_bumps,
    spiral_bumps,
    centered_disk,
)
from .transport import CutoffSpec, MediumSpec, ScatteringKernel

__all__ = ["DEFAULTS", "ExperimentConfig", "load_config"]

CONFIG_SCHEMA_VERSION = 1

DEFAULTS = {
    "schema_version": CONFIG_SCHEMA_VERSION,
    "grid": {"n_x": 256, "n_d": 128},
    "medium": {"preset": "example", "scale": 1.0, "g": 0.85},
    "phantom": {"preset": "disk_bumps"},
    "cutoff": {"arc_start": 0.0, "arc_end": float(np.pi / 3), "taper_pos": None, "taper_dir": 0.1,
               "outward_only": True},
    "truncation": {"m1": 8, "m2": 2},
    "noise": {"mu": 0.0, "seed": 0},
    "visibility": {"n_xi": 16},
    "outputs": {"directory": "out", "formats": ["raw", "pgm"]},
}

PHANTOM_PRESETS = {
    "disk_bumps": disk_bumps,
    "rect_bumps": rect_bumps,
    "spiral_bumps": spiral_bumps,
    "centered_disk": centered_disk,
}


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for key, val in over.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(where, "unknown key")
        if isinstance(base[key], dict) and isinstance(val, dict) and key not in ("medium", "phantom"):
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _num(d, key, where, kind=float, minimum=None):
    try:
        v = kind(d[key])
    except (KeyError, TypeError, ValueError):
        raise ConfigError(where, f"expected a {kind.__name__}") from None
    if kind is float and not np.isfinite(v):
        raise ConfigError(where, "must be finite")
    if minimum is not None and v < minimum:
        raise ConfigError(where, f"must be >= {minimum}")
    return v


class ExperimentConfig:
    """Validated configuration; ``raw`` is the fully expanded JSON document."""

    def __init__(self, raw):
        self.raw = _merge(DEFAULTS, raw or {})
        self.base_dir = Path(".")
        self._validate()

    # -- construction -----------------------------------------------------
    def _validate(self):
        r = self.raw
        if r["schema_version"] != CONFIG_SCHEMA_VERSION:
            raise ConfigError("schema_version", f"expected {CONFIG_SCHEMA_VERSION}")
        try:
            self.grid = GridSpec(int(r["grid"]["n_x"]), int(r["grid"]["n_d"]))
        except (ValueError, TypeError) as exc:
            raise ConfigError("grid", str(exc)) from None
        m1 = _num(r["truncation"], "m1", "truncation.m1", int, 0)
        m2 = _num(r["truncation"], "m2", "truncation.m2", int, 0)
        self.m1, self.m2 = m1, m2
        try:
            c = r["cutoff"]
            self.cutoff = CutoffSpec(
                _num(c, "arc_start", "cutoff.arc_start"),
                _num(c, "arc_end", "cutoff.arc_end"),
                None if c.get("taper_pos") is None else _num(c, "taper_pos", "cutoff.taper_pos"),
                _num(c, "taper_dir", "cutoff.taper_dir"),
                bool(c.get("outward_only", True)),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("cutoff", str(exc)) from None
        try:
            self.noise = NoiseSpec(_num(r["noise"], "mu", "noise.mu"), _num(r["noise"], "seed", "noise.seed", int))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("noise", str(exc)) from None
        self.n_xi = _num(r["visibility"], "n_xi", "visibility.n_xi", int, 1)
        med = r["medium"]
        if "preset" in med and med["preset"] not in ("example", "vacuum", "constant"):
            raise ConfigError("medium.preset", f"unknown preset {med['preset']!r}")
        if "preset" not in med and "sigma" not in med:
            raise ConfigError("medium", "give a preset or a sigma file")
        ph = r["phantom"]
        if "preset" in ph:
            if ph["preset"] not in PHANTOM_PRESETS:
                raise ConfigError("phantom.preset", f"unknown preset {ph['preset']!r}")
        elif "file" not in ph:
            try:
                PhantomSpec.from_dict(ph)
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError("phantom", str(exc)) from None
        fmts = r["outputs"]["formats"]
        if not set(fmts) <= {"raw", "pgm"}:
            raise ConfigError("outputs.formats", "allowed formats are 'raw' and 'pgm'")

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError("config", f"{path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path}: invalid JSON ({exc})") from None
        cfg = cls(raw)
        cfg.base_dir = path.parent
        cfg._check_files()
        return cfg

    def _resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def _check_files(self):
        for where, p in self._file_refs():
            f = self._resolve(p)
            if not Path(str(_strip(f)) + ".json").exists():
                raise ConfigError(where, f"file not found: {f}")

    def _file_refs(self):
        med, ph = self.raw["medium"], self.raw["phantom"]
        for key in ("sigma", "kernel_spatial"):
            if key in med:
                yield f"medium.{key}", med[key]
        if "file" in ph:
            yield "phantom.file", ph["file"]

    def override(self, **flags):
        """Apply command-line overrides (``None`` values are ignored)."""
        r = copy.deepcopy(self.raw)
        table = {
            "n_x": ("grid", "n_x"), "n_d": ("grid", "n_d"), "m1": ("truncation", "m1"),
            "m2": ("truncation", "m2"), "mu": ("noise", "mu"), "seed": ("noise", "seed"),
            "arc_start": ("cutoff", "arc_start"), "arc_end": ("cutoff", "arc_end"),
            "out": ("outputs", "directory"),
        }
        for key, val in flags.items():
            if val is None:
                continue
            sec, name = table[key]
            r[sec][name] = val
        cfg = ExperimentConfig(r)
        cfg.base_dir = self.base_dir
        return cfg

    # -- builders ---------------------------------------------------------
    def medium(self):
        med = self.raw["medium"]
        preset = med.get("preset")
        if preset == "example":
            return example_medium(self.grid, float(med.get("scale", 1.0)), float(med.get("g", 0.85)))
        if preset == "vacuum":
            return MediumSpec.vacuum(self.grid)
        if preset == "constant":
            return MediumSpec.constant_absorption(self.grid, float(med.get("value", 0.0)))
        sigma = read_field(self._resolve(med["sigma"]))
        if not isinstance(sigma, AngularField) or sigma.spec != self.grid:
            raise ConfigError("medium.sigma", "must be an AngularField on the configured grid")
        kernel = None
        if "kernel_spatial" in med:
            from .scene import _hg_matrix

            spatial = read_field(self._resolve(med["kernel_spatial"]))
            kernel = ScatteringKernel(spatial=spatial.values, angular=_hg_matrix(self.grid.angles, float(med.get("g", 0.85))))
        return MediumSpec(sigma, kernel, None, "file")

    def phantom(self):
        from .scene import make_phantom

        ph = self.raw["phantom"]
        if "file" in ph:
            return read_field(self._resolve(ph["file"]))
        spec = PHANTOM_PRESETS[ph["preset"]]() if "preset" in ph else PhantomSpec.from_dict(ph)
        return make_phantom(spec, self.grid)

    @property
    def out_dir(self):
        return Path(self.raw["outputs"]["directory"])

    @property
    def formats(self):
        return set(self.raw["outputs"]["formats"])


def _strip(p):
    p = Path(p)
    return p.with_suffix("") if p.suffix in (".f64", ".json") else p


def load_config(path=None):
    return ExperimentConfig.from_file(path) if path else ExperimentConfig({})
