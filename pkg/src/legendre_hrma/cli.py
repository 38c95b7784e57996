"""Command-line driver.

Exit status: 0 on success, 1 when an internal consistency check fails, 2 on
bad input (malformed config, invalid arguments).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ConfigError, RunSettings, builtin, load_config
from .convex_core import SampledFunction, lower_convex_envelope
from .intervals import hausdorff_distance
from .mass import mass_report, write_chords_csv, write_mass_csv, chords, s_mesh, swept_area
from .ray import fmt, ray_slice, write_slice_csv
from .svg import Figure, padded_range
from .toric import a_set, a_set_components, convex_lifespan, u_s, interior_grid

X_WINDOW = (-3.0, 3.0)


def _writer(path: Path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _require_1d(data, command: str):
    if data.dimension != 1:
        raise ConfigError("polytope", f"'{command}' supports one-dimensional data only")


def cmd_lifespan(data, settings: RunSettings, args) -> int:
    res = convex_lifespan(data, n=settings.grid)
    argmin = ",".join(fmt(c) for c in res.argmin)
    print(f"t_cvx={res.t_cvx_text()} argmin={argmin}")
    fh, w = _writer(args.out / "lifespan.csv")
    with fh:
        w.writerow(["t_cvx"] + [f"argmin_y{j + 1}" for j in range(len(res.argmin))])
        w.writerow(["inf" if res.is_infinite else fmt(res.t_cvx)] + [fmt(c) for c in res.argmin])
    return 0


def cmd_envelope(data, settings: RunSettings, args) -> int:
    _require_1d(data, "envelope")
    s = args.s if args.s is not None else 0.0
    f = u_s(data, s, n=settings.grid)
    env = lower_convex_envelope(f)
    env_vals = np.interp(f.nodes, env.breakpoints, env.values)
    A = a_set(data, s, n=settings.grid)
    inside = np.array([A.contains(float(y)) for y in f.nodes])
    fh, w = _writer(args.out / "envelope.csv")
    with fh:
        w.writerow(["y", "u_s", "u_s_env", "in_A_s"])
        for row in zip(f.nodes, f.values, env_vals, inside):
            w.writerow([fmt(v) for v in row])
    if args.svg:
        fig = Figure(padded_range(f.nodes, 0.0), padded_range(np.concatenate([f.values, env_vals])),
                     f"u_s and its convex envelope, s = {s:g}")
        for a, b in A:
            fig.vband(a, b)
        fig.polyline(f.nodes, f.values, "#1f77b4", label="u_s")
        fig.polyline(f.nodes, env_vals, "#d62728", width=1.0, label="envelope")
        fig.save(args.out / "envelope.svg")
    ok = bool(np.all(env_vals <= f.values + 1e-12 * (1 + np.abs(f.values))))
    print(f"s={fmt(s)} components={len(A)} measure={fmt(A.measure)}")
    return 0 if ok else 1


def cmd_ray(data, settings: RunSettings, args) -> int:
    _require_1d(data, "ray")
    s = args.s if args.s is not None else 2.0
    x = np.linspace(*X_WINDOW, settings.x_nodes)
    sl = ray_slice(data, s, x, n=settings.grid)
    write_slice_csv(args.out / "ray.csv", sl)
    s_top = max(2.0, s)
    lattice_s = np.linspace(0.0, s_top, 41)
    lattice_x = np.linspace(*X_WINDOW, 121)
    ok = True
    gh, gw = _writer(args.out / "graph.csv")
    kh, kw = _writer(args.out / "kinks.csv")
    with gh, kh:
        gw.writerow(["s", "x", "psi"])
        kw.writerow(["s", "x_s", "a", "b"])
        for sv in lattice_s:
            lsl = ray_slice(data, float(sv), lattice_x, n=settings.grid)
            vals = lsl.psi(lattice_x)
            for xv, pv in zip(lattice_x, vals):
                gw.writerow([fmt(sv), fmt(xv), fmt(pv)])
            for k in lsl.singular_points:
                kw.writerow([fmt(sv), fmt(k.x), fmt(k.a), fmt(k.b)])
            comps = a_set_components(data, float(sv), n=settings.grid)
            ok &= len(comps) == len(lsl.singular_points)
            ok &= bool(np.all(np.diff(lsl.psi.slopes) >= -1e-12))
    if args.svg:
        fig = Figure(X_WINDOW, padded_range(sl.psi(x)), f"psi_s, s = {s:g}")
        fig.polyline(x, sl.psi(x), "#1f77b4", label="psi")
        for k in sl.singular_points:
            fig.vband(k.x - 0.01, k.x + 0.01, "#d62728")
        fig.save(args.out / "ray.svg")
    print(f"s={fmt(s)} kinks={len(sl.singular_points)} regular={int(sl.regular_mask.sum())}/{x.size}")
    return 0 if ok else 1


def cmd_mass(data, settings: RunSettings, args) -> int:
    _require_1d(data, "mass")
    T = args.T if args.T is not None else (settings.T if settings.T is not None else 1.5)
    rep = mass_report(data, T, s_mesh_size=settings.s_mesh, raster_cells=settings.raster,
                      n=settings.grid)
    write_mass_csv(args.out / "mass.csv", rep)
    mesh = s_mesh(rep.t_cvx, T, settings.s_mesh)
    chs = chords(data, mesh, settings.grid)
    write_chords_csv(args.out / "chords.csv", chs)
    if args.svg:
        ax = data.axis
        lo, hi = ax.bounds
        y = np.linspace(lo, hi, 801)
        t = -ax.udot(y)
        env = lower_convex_envelope(SampledFunction(y, ax.udot(y)))
        t_env = -np.interp(y, env.breakpoints, env.values)
        fig = Figure(padded_range(np.concatenate([t, t_env])), (lo, hi),
                     f"subgradient image up to T = {T:g}")
        if chs:
            region = swept_area(chs, min(settings.raster, 512), max_cells=512)
            fig.cells(region.occupied, (region.t_lo, region.t_hi, region.y_lo, region.y_hi))
        fig.polyline(t, y, "#1f77b4", label="-udot0")
        fig.polyline(t_env, y, "#d62728", label="-(udot0**)")
        fig.save(args.out / "subdiff.svg")
    sys.stdout.write(rep.as_keyvalue())
    return 0 if rep.ok else 1


def cmd_sweep(data, settings: RunSettings, args) -> int:
    _require_1d(data, "sweep")
    T = args.T if args.T is not None else (settings.T if settings.T is not None else 3.0)
    s_vals = np.linspace(0.0, T, 61)[1:]
    sets = [a_set(data, float(s), n=settings.grid) for s in s_vals]
    nodes = interior_grid(*data.axis.bounds, settings.grid)
    exclude = (float(nodes[0]), float(nodes[-1]))
    ok = True
    fh, w = _writer(args.out / "sweep.csv")
    with fh:
        w.writerow(["s", "components", "measure", "hausdorff_to_next", "nested_in_next"])
        for i, (s, A) in enumerate(zip(s_vals, sets)):
            if i + 1 < len(sets):
                d = hausdorff_distance(A, sets[i + 1])
                nested = A.closure_inside(sets[i + 1], 1e-10, exclude)
                ok &= nested
                w.writerow([fmt(s), len(A), fmt(A.measure), fmt(d), fmt(nested)])
            else:
                w.writerow([fmt(s), len(A), fmt(A.measure), "", ""])
    print(f"sweep over (0, {T:g}]: {len(s_vals)} slices, nesting {'ok' if ok else 'violated'}")
    return 0 if ok else 1


COMMANDS = {
    "lifespan": cmd_lifespan,
    "envelope": cmd_envelope,
    "ray": cmd_ray,
    "mass": cmd_mass,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="legendre-hrma",
                                description="Legendre transform solutions of the real "
                                            "Monge-Ampere Cauchy problem on toric data.")
    p.add_argument("command", choices=sorted(COMMANDS))
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="JSON file with Cauchy data")
    src.add_argument("--builtin", default=None, help="fubini-study or p1xp1")
    p.add_argument("--s", type=float, help="time parameter for envelope and ray")
    p.add_argument("--T", type=float, help="final time for mass and sweep")
    p.add_argument("--grid", type=int, help="moment grid nodes (>= 64)")
    p.add_argument("--raster", type=int, help="raster cells per axis (>= 64)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--svg", action="store_true", help="also write SVG figures")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            data, settings = load_config(args.config)
        else:
            data, settings = builtin(args.builtin or "fubini-study"), RunSettings()
        overrides = {}
        for flag, key in (("grid", "grid"), ("raster", "raster")):
            v = getattr(args, flag)
            if v is not None:
                if v < 64:
                    raise ConfigError(f"--{flag}", "must be at least 64")
                overrides[key] = v
        if args.T is not None and args.T <= 0:
            raise ConfigError("--T", "must be positive")
        if args.s is not None and args.s < 0:
            raise ConfigError("--s", "must be non-negative")
        if overrides:
            settings = RunSettings(**{**settings.__dict__, **overrides})
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](data, settings, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
