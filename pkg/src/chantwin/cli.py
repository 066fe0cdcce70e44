"""``chantwin`` command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import io as cio
from .config import RunConfig, load_config, parse_config, render_config
from .ensemble import twin_emit, twin_fit
from .errors import ChantwinError, ConfigError, DataError, DivergenceWarning
from .experiments import SWEEP_PARAMETERS, run_sweep, truth_plan
from .grid import RadioMap
from .metrics import correlation, mse, psnr, ssim
from .powerapp import AllocationConfig, allocation_trials
from .synthdata import generate_series

MANIFEST = "manifest.json"
SWEEP_COLUMNS = [
    "parameter", "value", "seed", "t", "mode", "mse", "psnr", "ssim", "corr",
    "mse_cdmd", "ssim_cdmd", "mse_edmd", "ssim_edmd", "mse_persist", "ssim_persist", "wall_time",
]


def _out_grid(text: str) -> tuple[int, int]:
    try:
        qx, qy = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected QxQy such as 100x100, got {text!r}") from None
    return qx, qy


def parse_range(text: str) -> list[float]:
    """``a:b:step`` (inclusive of ``b``), ``a:b`` (integer steps) or ``v1,v2,...``."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1.0)
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        return [float(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad range {text!r}; use a:b:step, a:b or a comma list") from None


def _with_overrides(config: RunConfig, args) -> RunConfig:
    twin, scenario = config.twin, config.scenario
    if getattr(args, "seed", None) is not None:
        scenario = scenario.with_(seed=args.seed)
    if getattr(args, "omega", None) is not None:
        twin = twin.with_(omega=args.omega)
    if getattr(args, "rank", None) is not None:
        twin = twin.with_(cdmd_rank=args.rank)
    if getattr(args, "edmd_rank", None) is not None:
        twin = twin.with_(edmd_rank=args.edmd_rank)
    if getattr(args, "kernel_bandwidth", None) is not None:
        twin = twin.with_(kernel=replace(twin.kernel, bandwidth=args.kernel_bandwidth))
    if getattr(args, "out_grid", None) is not None:
        twin = twin.with_(out_shape=args.out_grid)
    return replace(config, scenario=scenario, twin=twin)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_generate(args) -> int:
    config = _with_overrides(load_config(args.config), args)
    clean, noisy = generate_series(config.scenario)
    out = Path(args.out)
    cio.write_series(out / "clean.csv", clean)
    cio.write_series(out / "noisy.csv", noisy)
    cio.write_manifest(out / MANIFEST, {
        "tool": f"chantwin {__version__}",
        "config": render_config(config),
        "config_sha256": config.digest,
        "seed": config.scenario.seed,
        "files": {name: _sha256(out / name) for name in ("clean.csv", "noisy.csv")},
    })
    print(f"wrote {len(noisy)} snapshots of {noisy.grid.size} cells to {out}")
    return 0


def _series_config(series_path, config_path=None) -> RunConfig:
    """Config given explicitly, else the one recorded next to the series."""
    if config_path is not None:
        return load_config(config_path)
    manifest = Path(series_path).parent / MANIFEST
    if not manifest.exists():
        raise ConfigError(f"no --config given and no {MANIFEST} beside {series_path}")
    return parse_config(cio.read_manifest(manifest)["config"], str(manifest))


def cmd_fit(args) -> int:
    series = cio.read_series(args.series)
    config = _with_overrides(_series_config(args.series, args.config), args)
    n_train = min(config.train_length, len(series))
    model = twin_fit(series.head(n_train), config.twin)
    cio.write_twin_model(args.out, model)
    print(f"fitted cDMD rank {model.cdmd.rank} and eDMD rank {model.edmd.rank} on {n_train} snapshots")
    return 0


def cmd_emit(args) -> int:
    model = cio.read_twin_model(args.model)
    if args.omega is not None:
        model = model.with_omega(args.omega)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DivergenceWarning)
        fused, trace = twin_emit(model, args.t)
    if trace.divergent or caught:
        print(f"warning: divergent eigenvalues in the forecast at t={args.t}", file=sys.stderr)
    cio.write_map(args.out, fused)
    print(f"emitted {fused.mode} map at t={args.t} on a {fused.grid.nx}x{fused.grid.ny} grid")
    return 0


def cmd_krige(args) -> int:
    series = cio.read_series(args.series)
    config = _with_overrides(_series_config(args.series, args.config), args)
    if not 0 <= args.t < len(series):
        raise DataError(f"t={args.t} outside the series of {len(series)} snapshots")
    grid_out = series.grid.resampled(*config.twin.out_shape)
    plan = truth_plan(series, grid_out, config.twin)
    values = plan.predict(series.data[args.t]).reshape(grid_out.shape)
    cio.write_map(args.out, RadioMap(grid_out, values, args.t, "kriged"))
    print(f"kriged snapshot {args.t} onto a {grid_out.nx}x{grid_out.ny} grid")
    return 0


def cmd_evaluate(args) -> int:
    truth, twin = cio.read_map(args.truth), cio.read_map(args.twin)
    if truth.grid != twin.grid:
        raise DataError("truth and twin maps live on different grids")
    row = {"time_index": twin.time_index, "mse": mse(truth, twin), "psnr": psnr(truth, twin),
           "ssim": ssim(truth, twin)}
    try:
        row["corr"] = correlation(truth, twin)
    except ChantwinError:
        row["corr"] = float("nan")
    cio.write_report(args.out, [row])
    print(", ".join(f"{k}={v:.6g}" for k, v in row.items()))
    return 0


def cmd_power(args) -> int:
    truth, twin = cio.read_map(args.truth), cio.read_map(args.twin)
    ks = [int(k) for k in parse_range(args.users)]
    rows = allocation_trials(truth, twin, ks, args.trials, args.seed, AllocationConfig())
    cio.write_report(args.out, rows, ["seed", "k", "rate_twin", "rate_oracle"])
    for k in ks:
        sel = [r for r in rows if r["k"] == k]
        print(f"k={k}: mean rate twin {np.mean([r['rate_twin'] for r in sel]):.6g} bit/s, "
              f"oracle {np.mean([r['rate_oracle'] for r in sel]):.6g} bit/s")
    return 0


def cmd_sweep(args) -> int:
    series = cio.read_series(args.series)
    config = _with_overrides(_series_config(args.series, args.config), args)
    base = config.scenario.with_(n_snapshots=config.train_length)
    if args.check_series:
        clean, noisy = generate_series(config.scenario)
        if series not in (clean, noisy):
            raise DataError(f"{args.series} does not match the recorded scenario; regenerate it")
    values = parse_range(args.range)
    seeds = range(base.seed, base.seed + args.seeds)
    rows = run_sweep(args.param, values, seeds, base, config.twin, args.t)
    columns = SWEEP_COLUMNS if args.timing else SWEEP_COLUMNS[:-1]
    cio.write_report(args.out, rows, columns)
    print(f"wrote {len(rows)} rows for {args.param} over {args.seeds} seeds")
    return 0


def cmd_export_pgm(args) -> int:
    radio_map = cio.read_map(args.map)
    cio.write_pgm(args.out, radio_map)
    print(f"wrote {radio_map.grid.nx}x{radio_map.grid.ny} PGM")
    return 0


def _overrides(p: argparse.ArgumentParser, seed=True):
    g = p.add_argument_group("config overrides")
    if seed:
        g.add_argument("--seed", type=int, help="scenario seed")
    g.add_argument("--omega", type=float, help="fusion weight on the cDMD map")
    g.add_argument("--rank", type=int, help="cDMD rank")
    g.add_argument("--edmd-rank", type=int, help="eDMD rank")
    g.add_argument("--kernel-bandwidth", type=float, help="rbf kernel bandwidth")
    g.add_argument("--out-grid", type=_out_grid, metavar="QxQy", help="output grid, e.g. 100x100")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chantwin", description="Radio-map twinning with ensemble DMD.")
    parser.add_argument("--version", action="version", version=f"chantwin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesise clean and noisy snapshot series")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output directory")
    _overrides(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit a twin model to a snapshot series")
    p.add_argument("series")
    p.add_argument("--config", help="config file (default: the manifest beside the series)")
    p.add_argument("--out", required=True, help="model file")
    _overrides(p, seed=False)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("emit", help="emit the twin map at one time index")
    p.add_argument("model")
    p.add_argument("--t", type=int, required=True, help="time index, 0 = first training snapshot")
    p.add_argument("--omega", type=float)
    p.add_argument("--out", required=True, help="map file")
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("krige", help="Krige one snapshot of a series to the output grid")
    p.add_argument("series")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--config")
    p.add_argument("--out-grid", type=_out_grid, metavar="QxQy")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_krige)

    p = sub.add_parser("evaluate", help="MSE, PSNR, SSIM and correlation of a twin map")
    p.add_argument("truth")
    p.add_argument("twin")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("power", help="water-filling sum rates from twin gains")
    p.add_argument("truth")
    p.add_argument("twin")
    p.add_argument("--users", default="15", help="user counts: k, a:b or k1,k2,...")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("sweep", help="seeded parameter sweep on regenerated scenarios")
    p.add_argument("series", help="a series written by 'generate' (its manifest supplies the scenario)")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--range", required=True, help="a:b:step, a:b or v1,v2,...")
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds from the scenario seed")
    p.add_argument("--t", type=int, help="evaluation time index (not used for horizon)")
    p.add_argument("--config")
    p.add_argument("--no-timing", dest="timing", action="store_false",
                   help="omit the wall_time column so reports are byte-reproducible")
    p.add_argument("--no-check", dest="check_series", action="store_false",
                   help="skip checking the series against its recorded scenario")
    p.add_argument("--out", required=True)
    _overrides(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-pgm", help="render a map file as an 8-bit PGM")
    p.add_argument("map")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_pgm)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChantwinError as exc:
        print(f"chantwin {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"chantwin {args.command}: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
