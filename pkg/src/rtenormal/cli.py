"""Command line: ``rtenormal <phantom|forward|noise|normal|visibility|verify|run>``.

Every subcommand reads the same JSON config (``--config``), accepts the
common overrides, and writes raw fields with sidecars plus, optionally,
PGM renderings into the output directory.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig, load_config
from .errors import ConfigError
from .grid import BoundaryData, ScalarField
from .pipeline import adjoint_XV, forward_XV
from .scene import RNG_ALGORITHM, add_noise
from .visibility import visibility_map

EXIT_CONFIG = 2
EXIT_NONFINITE = 3
EXIT_VERIFY = 4


class _Run:
    """Output bookkeeping for one invocation."""

    def __init__(self, cfg, command):
        self.cfg = cfg
        self.command = command
        self.out = cfg.out_dir
        self.files = []
        self.timings = {}
        self.extra = {}

    def field(self, name, field_, render=True):
        if not np.all(np.isfinite(field_.values)):
            raise FloatingPointError(f"non-finite values in {name}")
        if "raw" in self.cfg.formats:
            self.files.append(str(io.write_field(self.out / name, field_).name))
        if render and "pgm" in self.cfg.formats and field_.values.ndim == 2:
            io.render_pgm(field_, self.out / f"{name}.pgm")
            self.files.append(f"{name}.pgm")

    def array(self, name, arr, kind, render=None):
        if "raw" in self.cfg.formats:
            self.files.append(str(io.write_array(self.out / name, arr, kind, self.cfg.grid).name))
        if render is not None and "pgm" in self.cfg.formats:
            io.render_pgm(render, self.out / f"{name}.pgm")
            self.files.append(f"{name}.pgm")

    def timed(self, key, fn, *args, **kw):
        t0 = time.perf_counter()
        out = fn(*args, **kw)
        self.timings[key] = round(time.perf_counter() - t0, 3)
        return out

    def manifest(self):
        doc = {
            "schema_version": io.SCHEMA_VERSION,
            "command": self.command,
            "config": self.cfg.raw,
            "rng": {"algorithm": RNG_ALGORITHM, "seed": self.cfg.noise.seed},
            "outputs": sorted(set(self.files)),
            "timings": self.timings,
            **self.extra,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / "manifest.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path


def _load(path, kind):
    f = io.read_field(path)
    if not isinstance(f, kind):
        raise ConfigError(str(path), f"expected a {kind.__name__} file")
    return f


def _forward(run, f):
    cfg = run.cfg
    res = run.timed("forward_s", forward_XV, f, cfg.medium(), cfg.cutoff, cfg.m1, keep_terms=False)
    spec = cfg.grid
    mean = ScalarField(spec, spec.delta * res.u_total.values.sum(axis=0) / (2 * np.pi))
    run.field("solution_mean", mean)
    run.field("data_full", res.data_full)
    run.field("data", res.data)
    polar, _ = io.boundary_to_polar(res.data)
    run.array("data_polar", polar, "polar_boundary", render=polar)
    polar_full, _ = io.boundary_to_polar(res.data_full)
    run.array("data_full_polar", polar_full, "polar_boundary", render=polar_full)
    run.extra["term_norms_forward"] = res.term_norms
    return res


def _noise(run, data):
    noisy = add_noise(data, run.cfg.noise)
    run.field("data_noisy", noisy)
    return noisy


def _normal(run, data):
    cfg = run.cfg
    res = run.timed("adjoint_s", adjoint_XV, data, cfg.medium(), cfg.cutoff, cfg.m2, keep_terms=False)
    run.field("normal", res.image)
    run.extra["term_norms_adjoint"] = res.term_norms
    return res


def _visibility(run):
    cfg = run.cfg
    vm = run.timed("visibility_s", visibility_map, cfg.grid, cfg.medium(), cfg.cutoff, cfg.n_xi)
    run.array("visibility", vm.values, "visibility", render=None)
    run.array("visibility_mask", vm.mask.astype(np.float64), "visibility_mask", render=vm.visible_fraction())
    if "pgm" in cfg.formats:
        for k in range(vm.n_xi):
            name = f"visibility_xi{k:02d}.pgm"
            io.render_pgm(vm.values[k], run.out / "visibility" / name)
            run.files.append(f"visibility/{name}")
    run.extra["visibility"] = {"xi_angles": vm.xi_angles.tolist(), "threshold": vm.threshold,
                               "visible_fraction": float(vm.mask.mean())}
    return vm


def _panel(images, n):
    """Side-by-side montage of min-max normalized panels, each resized to ``n x n``."""
    cols = []
    for img in images:
        img = np.asarray(img, dtype=np.float64)
        ri = (np.arange(n) * img.shape[0]) // n
        ci = (np.arange(n) * img.shape[1]) // n
        im = img[np.ix_(ri, ci)]
        span = im.max() - im.min()
        cols.append((im - im.min()) / span if span > 0 else np.zeros_like(im))
        cols.append(np.ones((n, 4)))
    return np.hstack(cols[:-1])


# ---------------------------------------------------------------------------
# subcommands


def cmd_phantom(run, args):
    run.field("phantom", run.cfg.phantom())


def cmd_forward(run, args):
    f = _load(args.phantom, ScalarField) if args.phantom else run.cfg.phantom()
    _forward(run, f)


def cmd_noise(run, args):
    _noise(run, _load(args.data, BoundaryData))


def cmd_normal(run, args):
    if args.data:
        data = _load(args.data, BoundaryData)
    else:
        f = _load(args.phantom, ScalarField) if args.phantom else run.cfg.phantom()
        data = _forward(run, f).data
        if run.cfg.noise.mu > 0:
            data = _noise(run, data)
    _normal(run, data)


def cmd_visibility(run, args):
    _visibility(run)


def cmd_run(run, args):
    cfg = run.cfg
    f = cfg.phantom()
    run.field("phantom", f)
    fwd = _forward(run, f)
    data = fwd.data
    if cfg.noise.mu > 0:
        data = _noise(run, data)
    res = _normal(run, data)
    if not args.skip_visibility:
        _visibility(run)
    if "pgm" in cfg.formats:
        polar = lambda b: io.boundary_to_polar(b)[0]
        panels = [f.values[::-1], polar(fwd.data), polar(data), res.image.values[::-1]]
        io.render_pgm(_panel(panels, cfg.grid.n_x), run.out / "figure.pgm", flip=False)
        run.files.append("figure.pgm")


def cmd_verify(run, args):
    from .verify import run_checks

    rows = run_checks(run.cfg.grid if args.full else None)
    width = max(len(r[0]) for r in rows)
    ok_all = True
    for name, ok, detail in rows:
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    run.extra["verify"] = [{"check": n, "pass": bool(o), "detail": d} for n, o, d in rows]
    if not ok_all:
        run.manifest()
        raise SystemExit(EXIT_VERIFY)


COMMANDS = {
    "phantom": (cmd_phantom, "sample the configured phantom"),
    "forward": (cmd_forward, "boundary data X_V f (and the angularly averaged solution)"),
    "noise": (cmd_noise, "add relative Gaussian noise to boundary data"),
    "normal": (cmd_normal, "normal-operator image from data (or from a phantom)"),
    "visibility": (cmd_visibility, "principal-symbol / visible-set maps"),
    "verify": (cmd_verify, "compare the solver against the reference oracles"),
    "run": (cmd_run, "phantom, forward, noise, normal and visibility in one go"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="rtenormal", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="JSON experiment config")
        s.add_argument("--nx", type=int, dest="n_x")
        s.add_argument("--nd", type=int, dest="n_d")
        s.add_argument("--m1", type=int)
        s.add_argument("--m2", type=int)
        s.add_argument("--mu", type=float)
        s.add_argument("--seed", type=int)
        s.add_argument("--arc-start", type=float, dest="arc_start")
        s.add_argument("--arc-end", type=float, dest="arc_end")
        s.add_argument("--out", help="output directory")
        if name in ("forward", "normal"):
            s.add_argument("--phantom", help="phantom field file (default: from config)")
        if name in ("noise", "normal"):
            s.add_argument("--data", required=(name == "noise"), help="boundary data file")
        if name == "run":
            s.add_argument("--skip-visibility", action="store_true")
        if name == "verify":
            s.add_argument("--full", action="store_true", help="run the checks on the configured grid")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).override(
            n_x=args.n_x, n_d=args.n_d, m1=args.m1, m2=args.m2, mu=args.mu, seed=args.seed,
            arc_start=args.arc_start, arc_end=args.arc_end, out=args.out,
        )
        run = _Run(cfg, args.command)
        COMMANDS[args.command][0](run, args)
        path = run.manifest()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FloatingPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
