"""Command-line interface.

Every command writes its primary output plus ``<output>.manifest.json``
recording the exact argument vector; ``sosfield rerun <manifest>`` replays
it. Exit codes: 0 success, 1 validation failure, 2 usage or format error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import fitter as fit_mod
from . import generator as gen
from . import validate as val
from .acf import ACF_FUNCTIONS, AcfSamples, InvalidAcfError, sample_acf
from .fitter import FitConfig, SinusoidSet
from .io import TableFormatError, load_process, load_table, save_process, save_table, write_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _version() -> str:
    try:
        return version("sosfield")
    except PackageNotFoundError:  # pragma: no cover - running from a source tree
        return "unknown"


def _write_manifest(out: Path, argv: list[str], args: argparse.Namespace, outputs: list[Path], started: float) -> Path:
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = {
        "command": args.command,
        "argv": argv,
        "config": config,
        "rng_seed": getattr(args, "seed", None),
        "outputs": [str(p) for p in outputs],
        "duration_s": round(time.perf_counter() - started, 6),
        "version": _version(),
    }
    path = out.with_name(out.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=1, default=str) + "\n")
    return path


def _rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


# --------------------------------------------------------------------------
# position sources


def _parse_dims(text: str, count: int) -> tuple[float, ...]:
    try:
        parts = tuple(float(x) for x in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"cannot parse extent {text!r}") from None
    if len(parts) == 1:
        parts = parts * count
    if len(parts) != count or any(not p > 0 for p in parts):
        raise UsageError(f"extent {text!r} needs {count} positive values")
    return parts


def _grid_positions(extent: str, spacing: float, z: float) -> np.ndarray:
    ex, ey = _parse_dims(extent, 2)
    if not spacing > 0:
        raise UsageError("--spacing must be positive")
    xs = np.arange(0.0, ex, spacing)
    ys = np.arange(0.0, ey, spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])


def _box_positions(extent: str, count: int, rng: np.random.Generator) -> np.ndarray:
    if count < 1:
        raise UsageError("--count must be positive")
    size = np.asarray(_parse_dims(extent, 3))
    return rng.random((count, 3)) * size


def _positions(args, rng: np.random.Generator, width: int) -> np.ndarray:
    """Positions from ``--positions``, ``--grid``, ``--cube`` or ``--box``; (M, width)."""
    if args.positions:
        data = np.loadtxt(args.positions, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] < width:
            raise UsageError(f"{args.positions}: need at least {width} columns")
        return data[:, :width]
    if args.grid:
        p = _grid_positions(args.grid, args.spacing, args.z)
        if width == 6:
            rx = np.broadcast_to(np.asarray(args.rx, dtype=float), p.shape)
            p = np.hstack([p, rx])
        return p
    if args.cube or args.box:
        extent = str(args.cube) if args.cube else args.box
        count = args.count or 1000
        p = _box_positions(extent, count, rng)
        if width == 6:
            p = np.hstack([p, _box_positions(extent, count, rng)])
        return p
    raise UsageError("one of --positions, --grid, --cube or --box is required")


def _target_acf(args, table: SinusoidSet) -> AcfSamples:
    if getattr(args, "acf_file", None):
        return AcfSamples.from_csv(args.acf_file)
    if table.acf_name not in ACF_FUNCTIONS:
        raise UsageError(f"table ACF {table.acf_name!r} is not built in; pass --acf-file")
    count = int(round(table.d_max / args.acf_spacing)) + 1
    return sample_acf(ACF_FUNCTIONS[table.acf_name], table.decorr_distance, args.acf_spacing, count)


# --------------------------------------------------------------------------
# commands


def cmd_fit(args) -> tuple[int, Path, list[Path]]:
    if args.acf_file:
        acf = AcfSamples.from_csv(args.acf_file, args.dlambda_file)
    else:
        acf = sample_acf(ACF_FUNCTIONS[args.acf], args.dlambda, args.spacing, args.count)
    config = FitConfig(
        n_sinusoids=args.n,
        n_test_directions=args.t,
        n_restarts=args.restarts,
        max_sweeps=args.max_sweeps,
        dims=args.dims,
        rng_seed=args.seed,
        normalized_freq_max=args.freq_max,
        direction_jitter=args.jitter,
        n_jobs=args.jobs,
    )
    best = fit_mod.fit(acf, config)
    out = Path(args.out)
    save_table(best, out)
    print(f"fit_ase_db = {best.fit_ase_db:.3f}")
    return EXIT_OK, out, [out]


def cmd_generate(args) -> tuple[int, Path, list[Path]]:
    pos_rng, phase_rng = _rngs(args.seed, 2)
    if args.process:
        if args.d2d:
            raise UsageError("--process cannot be combined with --d2d")
        process = load_process(args.process)
        table = process.sinusoids
    else:
        if not args.table:
            raise UsageError("--table or --process is required")
        table = load_table(args.table)
    if args.rescale is not None:
        if not args.rescale > 0:
            raise UsageError("--rescale must be positive")
        table = gen.rescale(table, args.rescale)

    out = Path(args.out)
    outputs = [out]
    if args.d2d:
        rx = load_table(args.d2d)
        if args.rescale is not None:
            rx = gen.rescale(rx, args.rescale)
        if not math.isclose(rx.d_max, table.d_max):
            warnings.warn(f"tx and rx tables have different d_max ({table.d_max} vs {rx.d_max})", stacklevel=1)
        dual = gen.bind_phases_dual(table, rx, phase_rng)
        pts = _positions(args, pos_rng, 6)
        values = gen.evaluate6(dual, pts)
        header = ["x", "y", "z", "x_r", "y_r", "z_r", "value"]
    else:
        if args.process:
            process = gen.CorrelatedProcess(table, process.phases)
        else:
            process = gen.bind_phases(table, phase_rng)
        pts = _positions(args, pos_rng, 3)
        values = gen.evaluate3(process, pts)
        header = ["x", "y", "z", "value"]
        if args.snapshot:
            save_process(process, args.snapshot)
            outputs.append(Path(args.snapshot))
    if args.uniform:
        values = gen.to_uniform(values)
    write_csv(out, header, np.column_stack([pts, values]))
    print(f"wrote {len(values)} values to {out}")
    return EXIT_OK, out, outputs


def _acf_report(binned: val.BinnedAcf, out: Path, max_center: float, tolerance: float, label: str) -> int:
    centers = binned.bin_centers
    rows = []
    for k in range(len(binned)):
        rows.append(
            [centers[k], binned.mean_corr[k], binned.min_corr[k], binned.max_corr[k], int(binned.pair_counts[k]), binned.target_corr[k]]
        )
    write_csv(out, ["bin_center", "mean_corr", "min_corr", "max_corr", "pair_count", "target"], rows)
    sel = centers <= max_center
    undefined = sel & ~binned.defined
    for k in np.nonzero(undefined)[0]:
        print(f"bin {centers[k]:g} m: undefined (fewer than 2 pairs)")
    dev = np.abs(binned.mean_corr - binned.target_corr)[sel & binned.defined]
    worst = float(dev.max()) if dev.size else math.nan
    ok = dev.size > 0 and worst <= tolerance
    print(f"{'PASS' if ok else 'FAIL'} {label}: max |deviation| = {worst:.4f} (tolerance {tolerance})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_validate(args) -> tuple[int, Path, list[Path]]:
    out = Path(args.out)
    kind = args.kind
    if kind in ("acf", "acf-d2d", "cdf") and not (args.table or args.values):
        raise UsageError(f"validate {kind} needs --table or --values")

    if kind == "plane-ase":
        if not args.table:
            raise UsageError("validate plane-ase needs --table")
        table = load_table(args.table)
        acf = _target_acf(args, table)
        plane = args.plane or ("xy" if table.dims == 2 else "all")
        value = val.plane_ase(table, acf, plane, args.resolution)
        write_csv(out, ["plane", "plane_ase_db", "fit_ase_db"], [[plane, value, table.fit_ase_db]])
        tol = 2.0 if args.tolerance is None else args.tolerance
        ok = math.isfinite(table.fit_ase_db) and abs(value - table.fit_ase_db) <= tol
        print(f"{'PASS' if ok else 'FAIL'} plane-ase: {value:.3f} dB vs fit {table.fit_ase_db:.3f} dB (tolerance {tol} dB)")
        if table.dims == 3:
            # the fit ASE only sees the test directions; a dense set shows the isotropic error
            dense = fit_mod.ase(table, acf, fit_mod.make_directions(2000))
            print(f"info: ASE over 2000 directions = {dense:.3f} dB")
        return (EXIT_OK if ok else EXIT_FAIL), out, [out]

    if kind == "cdf":
        if args.values:
            values = np.loadtxt(args.values, delimiter=",", skiprows=1, ndmin=2)[:, -1]
        else:
            pos_rng, phase_rng = _rngs(args.seed, 2)
            table = load_table(args.table)
            pts = _box_positions(args.box or "1000x1000x50", args.count or 10_000, pos_rng)
            values = gen.evaluate3(gen.bind_phases(table, phase_rng), pts)
        table_rows = val.cdf_table(values)
        write_csv(out, ["quantile", "empirical", "gaussian"], table_rows)
        d = val.ks_gaussian(values)
        tol = 0.05 if args.tolerance is None else args.tolerance
        ok = d < tol
        print(f"{'PASS' if ok else 'FAIL'} cdf: KS D = {d:.4f} (threshold {tol})")
        return (EXIT_OK if ok else EXIT_FAIL), out, [out]

    max_center = args.max_distance
    edge = float(args.cube or 56.0)
    if kind == "acf":
        if args.values:
            data = np.loadtxt(args.values, delimiter=",", skiprows=1, ndmin=2)
            if not args.table and not args.acf_file:
                raise UsageError("--values needs --table or --acf-file for the target ACF")
            target = AcfSamples.from_csv(args.acf_file) if args.acf_file else _target_acf(args, load_table(args.table))
            binned = val.empirical_acf(
                data[:, :3], data[:, -1], args.bin_width, max_center + args.bin_width / 2, target.evaluate, rng=args.seed
            )
        else:
            table = load_table(args.table)
            target = _target_acf(args, table)
            count = args.count or 6000
            runs = []
            for pos_rng, phase_rng in (_rngs(s, 2) for s in np.random.SeedSequence(args.seed).generate_state(args.repeats)):
                pts = pos_rng.random((count, 3)) * edge
                values = gen.evaluate3(gen.bind_phases(table, phase_rng), pts)
                runs.append(
                    val.empirical_acf(pts, values, args.bin_width, max_center + args.bin_width / 2, target.evaluate, rng=pos_rng)
                )
            binned = val.combine_runs(runs)
        tol = 0.10 if args.tolerance is None else args.tolerance
        return _acf_report(binned, out, max_center, tol, "acf"), out, [out]

    # acf-d2d
    if args.values:
        data = np.loadtxt(args.values, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] < 7:
            raise UsageError("acf-d2d --values needs x,y,z,x_r,y_r,z_r,value columns")
        if not args.table and not args.acf_file:
            raise UsageError("--values needs --table or --acf-file for the target ACF")
        target = AcfSamples.from_csv(args.acf_file) if args.acf_file else _target_acf(args, load_table(args.table))
        binned = val.empirical_acf_d2d(
            data[:, :3], data[:, 3:6], data[:, -1], args.bin_width, max_center + args.bin_width / 2, target.evaluate, rng=args.seed
        )
    else:
        tx = load_table(args.table)
        rx = load_table(args.rx_table) if args.rx_table else tx
        target = _target_acf(args, tx)
        count = args.count or 3000
        runs = []
        for pos_rng, phase_rng in (_rngs(s, 2) for s in np.random.SeedSequence(args.seed).generate_state(args.repeats)):
            pt = pos_rng.random((count, 3)) * edge
            pr = pos_rng.random((count, 3)) * edge
            values = gen.evaluate6(gen.bind_phases_dual(tx, rx, phase_rng), np.hstack([pt, pr]))
            runs.append(
                val.empirical_acf_d2d(pt, pr, values, args.bin_width, max_center + args.bin_width / 2, target.evaluate, rng=pos_rng)
            )
        binned = val.combine_runs(runs)
    tol = 0.12 if args.tolerance is None else args.tolerance
    return _acf_report(binned, out, max_center, tol, "acf-d2d"), out, [out]


def cmd_bench(args) -> tuple[int, Path, list[Path]]:
    try:
        n_list = [int(x) for x in args.n.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --n {args.n!r}") from None
    if not n_list or any(n < 1 for n in n_list):
        raise UsageError("--n needs a non-empty list of positive sinusoid counts")
    rng = np.random.default_rng(args.seed)
    pts = rng.random((args.positions, 3)) * np.array([1000.0, 1000.0, 50.0])
    if args.dims == 2:
        pts[:, 2] = 0.0
    rows = []
    for n in n_list:
        freqs = rng.uniform(-0.1, 0.1, size=(n, 3))
        if args.dims == 2:
            freqs[:, 2] = 0.0
        table = SinusoidSet(freqs, d_max=49.75, decorr_distance=10.0, dims=args.dims)
        process = gen.bind_phases(table, rng)
        gen.evaluate3(process, pts[: min(len(pts), 10_000)])  # warm-up
        best = math.inf
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            gen.evaluate3(process, pts)
            best = min(best, time.perf_counter() - t0)
        cost = val.cost_model("sos", args.dims, n)
        rows.append([n, args.positions, best, 1e9 * best / args.positions, cost["memory_elements"], cost["per_output_ops"]])
        print(f"N={n}: {1e9 * best / args.positions:.1f} ns/value, memory {cost['memory_elements']} coefficients")
    out = Path(args.out)
    write_csv(out, ["n_sinusoids", "positions", "seconds", "ns_per_value", "memory_elements", "predicted_ops_per_value"], rows)
    if len(rows) > 1:
        ns = np.array([r[0] for r in rows], dtype=float)
        tv = np.array([r[3] for r in rows])
        slope, icpt = np.polyfit(ns, tv, 1)
        print(f"linear fit: {slope:.3f} ns per sinusoid per value (+ {icpt:.1f} ns)")
    return EXIT_OK, out, [out]


def cmd_rescale(args) -> tuple[int, Path, list[Path]]:
    if not args.dlambda > 0:
        raise UsageError("--dlambda must be positive")
    table = gen.rescale(load_table(args.table), args.dlambda)
    out = Path(args.out)
    save_table(table, out)
    print(f"decorrelation distance {table.decorr_distance:g} m written to {out}")
    return EXIT_OK, out, [out]


# --------------------------------------------------------------------------
# parser


def _add_positions(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("positions")
    g.add_argument("--positions", help="CSV with a header row; first 3 (or 6 with --d2d) columns are used")
    g.add_argument("--grid", help="regular x-y grid extent, e.g. 250x250 (meters)")
    g.add_argument("--spacing", type=float, default=0.5, help="grid spacing in meters")
    g.add_argument("--z", type=float, default=0.0, help="height of grid positions")
    g.add_argument("--rx", type=float, nargs=3, default=(0.0, 0.0, 0.0), help="fixed receiver for --grid with --d2d")
    g.add_argument("--cube", type=float, help="uniform random positions in a cube of this edge length")
    g.add_argument("--box", help="uniform random positions in a box, e.g. 1000x1000x50")
    g.add_argument("--count", type=int, default=None, help="number of random positions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sosfield", description="Sum-of-sinusoids spatially correlated random fields")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a coefficient table to an ACF")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--acf", choices=sorted(ACF_FUNCTIONS), default="gauss-exp")
    src.add_argument("--acf-file", help="two-column CSV (distance, correlation) with header")
    p.add_argument("--dlambda", type=float, default=10.0, help="decorrelation distance (m)")
    p.add_argument("--dlambda-file", type=float, default=None, help="decorrelation distance of --acf-file data")
    p.add_argument("--spacing", type=float, default=0.25)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--n", type=int, default=300, help="number of sinusoids")
    p.add_argument("--t", type=int, default=28, help="number of test directions")
    p.add_argument("--dims", type=int, choices=(2, 3), default=3)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--max-sweeps", type=int, default=50)
    p.add_argument("--freq-max", type=float, default=4.0 * math.pi, help="search bound for normalized frequencies")
    p.add_argument("--jitter", action="store_true", help="randomly rotate the direction set per restart")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("generate", help="evaluate a correlated process at positions")
    p.add_argument("--table")
    p.add_argument("--process", help="process snapshot (table + phases) instead of --table/--seed phases")
    p.add_argument("--d2d", metavar="RX_TABLE", help="dual mobility with this receiver-side table")
    p.add_argument("--rescale", type=float, default=None, metavar="DLAMBDA")
    p.add_argument("--uniform", action="store_true")
    p.add_argument("--snapshot", help="also write the bound process (phases) to this JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_positions(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="statistical checks")
    p.add_argument("kind", choices=("acf", "acf-d2d", "cdf", "plane-ase"))
    p.add_argument("--table")
    p.add_argument("--rx-table")
    p.add_argument("--values", help="CSV written by `generate` to check instead of generating")
    p.add_argument("--acf-file")
    p.add_argument("--acf-spacing", type=float, default=0.25)
    p.add_argument("--cube", type=float, default=None)
    p.add_argument("--box", default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--bin-width", type=float, default=2.0)
    p.add_argument("--max-distance", type=float, default=30.0, help="largest bin center checked")
    p.add_argument("--plane", choices=("xy", "xz", "yz", "all"), default=None)
    p.add_argument("--resolution", type=float, default=0.5)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="generation time vs number of sinusoids")
    p.add_argument("--n", default="100,200", help="comma-separated sinusoid counts")
    p.add_argument("--positions", type=int, default=1_000_000)
    p.add_argument("--dims", type=int, choices=(2, 3), default=3)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rescale", help="scale a table to a new decorrelation distance")
    p.add_argument("--table", required=True)
    p.add_argument("--dlambda", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rescale)

    p = sub.add_parser("rerun", help="replay a command from its manifest")
    p.add_argument("manifest")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        try:
            recorded = json.loads(Path(args.manifest).read_text())["argv"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            print(f"error: cannot read manifest {args.manifest}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return main(recorded)

    started = time.perf_counter()
    try:
        code, out, outputs = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TableFormatError, InvalidAcfError) as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write_manifest(out, argv, args, outputs, started)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
