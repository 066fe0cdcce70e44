"""File formats. Every writer is atomic (temp file, then rename).

Series CSV
    ``# chantwin-series nx=.. ny=.. spacing=.. origin_x=.. origin_y=..``
    then one row per snapshot: the time in seconds followed by the M cell
    gains in row-major order (x fastest).
Map CSV
    ``# chantwin-map nx=.. ny=.. spacing=.. origin_x=.. origin_y=.. t=.. mode=..``
    then ``ny`` rows of ``nx`` gains; row ``iy`` holds ``y = origin_y + iy*spacing``.
Model text
    A ``chantwin-model 1`` line, then ``[section]`` blocks holding
    ``key = value`` lines and ``matrix name rows cols real|complex`` blocks.
    Complex entries are ``re,im`` pairs, row-major, separated by spaces.
PGM
    Binary 8-bit greyscale with a ``# min_db=.. max_db=..`` comment; the top
    image row is the largest ``y``.

Floats are written with ``repr``, which round-trips exactly.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .dmd import DmdModel
from .ensemble import TwinConfig, TwinModel
from .errors import DataError
from .grid import Grid, RadioMap, SnapshotSeries
from .kriging import VariogramModel
from .variants import CompressionSpec, EdmdModel, KernelSpec

SERIES_TAG = "chantwin-series"
MAP_TAG = "chantwin-map"
MODEL_TAG = "chantwin-model 1"


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write(path, data: bytes | str):
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not a text file") from exc


def _f(x) -> str:
    return repr(float(x))


def _header(tag: str, fields: dict) -> str:
    return "# " + tag + " " + " ".join(f"{k}={v}" for k, v in fields.items())


def _parse_header(line: str, tag: str, path) -> dict:
    parts = line[1:].split() if line.startswith("#") else []
    if not parts or parts[0] != tag:
        raise DataError(f"{path}: missing '# {tag}' header")
    try:
        return dict(p.split("=", 1) for p in parts[1:])
    except ValueError:
        raise DataError(f"{path}: malformed header {line!r}") from None


def _grid_fields(grid: Grid) -> dict:
    return {"nx": grid.nx, "ny": grid.ny, "spacing": _f(grid.spacing),
            "origin_x": _f(grid.origin[0]), "origin_y": _f(grid.origin[1])}


def _grid_from(fields: dict, path) -> Grid:
    try:
        return Grid(int(fields["nx"]), int(fields["ny"]), float(fields["spacing"]),
                    (float(fields["origin_x"]), float(fields["origin_y"])))
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: bad grid header ({exc})") from None


def _rows(lines, path) -> np.ndarray:
    try:
        return np.array([[float(v) for v in line.split(",")] for line in lines if line.strip()])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


# series ---------------------------------------------------------------------

def series_text(series: SnapshotSeries) -> str:
    lines = [_header(SERIES_TAG, _grid_fields(series.grid))]
    for t, row in zip(series.times, series.data):
        lines.append(",".join([_f(t)] + [_f(v) for v in row]))
    return "\n".join(lines) + "\n"


def write_series(path, series: SnapshotSeries):
    atomic_write(path, series_text(series))


def read_series(path) -> SnapshotSeries:
    lines = _read_text(path).splitlines()
    if not lines:
        raise DataError(f"{path}: empty file")
    grid = _grid_from(_parse_header(lines[0], SERIES_TAG, path), path)
    table = _rows(lines[1:], path)
    if table.ndim != 2 or table.shape[1] != grid.size + 1:
        raise DataError(f"{path}: rows must hold a time and {grid.size} gains")
    return SnapshotSeries(grid, table[:, 0], table[:, 1:])


# maps -----------------------------------------------------------------------

def map_text(radio_map: RadioMap) -> str:
    fields = _grid_fields(radio_map.grid)
    fields["t"] = radio_map.time_index
    fields["mode"] = radio_map.mode or "none"
    lines = [_header(MAP_TAG, fields)]
    lines += [",".join(_f(v) for v in row) for row in radio_map.values]
    return "\n".join(lines) + "\n"


def write_map(path, radio_map: RadioMap):
    atomic_write(path, map_text(radio_map))


def read_map(path) -> RadioMap:
    lines = _read_text(path).splitlines()
    if not lines:
        raise DataError(f"{path}: empty file")
    fields = _parse_header(lines[0], MAP_TAG, path)
    grid = _grid_from(fields, path)
    values = _rows(lines[1:], path)
    if values.shape != grid.shape:
        raise DataError(f"{path}: expected {grid.ny} rows of {grid.nx} values")
    mode = fields.get("mode", "none")
    return RadioMap(grid, values, int(fields.get("t", 0)), "" if mode == "none" else mode)


# models ---------------------------------------------------------------------

class _Section:
    def __init__(self, name: str):
        self.name = name
        self.scalars: dict[str, str] = {}
        self.matrices: dict[str, np.ndarray] = {}

    def get(self, key, cast=str, default=None):
        if key not in self.scalars:
            if default is not None:
                return default
            raise DataError(f"model section [{self.name}] lacks {key!r}")
        raw = self.scalars[key]
        if raw == "none":
            return None
        try:
            return cast(raw)
        except ValueError:
            raise DataError(f"model section [{self.name}]: bad {key!r} = {raw!r}") from None

    def matrix(self, key) -> np.ndarray:
        if key not in self.matrices:
            raise DataError(f"model section [{self.name}] lacks matrix {key!r}")
        return self.matrices[key]


def _fmt_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _section_text(name: str, scalars: dict, matrices: dict) -> list[str]:
    out = [f"[{name}]"]
    out += [f"{k} = {_fmt_value(v)}" for k, v in scalars.items()]
    for key, mat in matrices.items():
        mat = np.atleast_2d(mat)
        if np.iscomplexobj(mat):
            out.append(f"matrix {key} {mat.shape[0]} {mat.shape[1]} complex")
            out += [" ".join(f"{_f(z.real)},{_f(z.imag)}" for z in row) for row in mat]
        else:
            out.append(f"matrix {key} {mat.shape[0]} {mat.shape[1]} real")
            out += [" ".join(_f(v) for v in row) for row in mat]
    return out


def _parse_sections(text: str, path) -> dict[str, _Section]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MODEL_TAG:
        raise DataError(f"{path}: not a '{MODEL_TAG}' file")
    sections: dict[str, _Section] = {}
    current = None
    i = 1
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1], _Section(line[1:-1]))
            continue
        if current is None:
            raise DataError(f"{path}:{i}: content before the first section")
        if line.startswith("matrix "):
            try:
                _, key, rows, cols, kind = line.split()
                rows, cols = int(rows), int(cols)
            except ValueError:
                raise DataError(f"{path}:{i}: malformed matrix header {line!r}") from None
            body = lines[i:i + rows]
            i += rows
            try:
                if kind == "complex":
                    mat = np.array([[complex(float(a), float(b)) for a, b in (e.split(",") for e in r.split())]
                                    for r in body], dtype=complex)
                else:
                    mat = np.array([[float(v) for v in r.split()] for r in body], dtype=float)
            except ValueError:
                raise DataError(f"{path}: bad entries in matrix {key!r}") from None
            if mat.shape != (rows, cols):
                raise DataError(f"{path}: matrix {key!r} is not {rows}x{cols}")
            current.matrices[key] = mat
        elif "=" in line:
            key, value = (p.strip() for p in line.split("=", 1))
            current.scalars[key] = value
        else:
            raise DataError(f"{path}:{i}: cannot parse {line!r}")
    return sections


def _bool(text: str) -> bool:
    return text == "true"


def _dmd_section(name: str, model: DmdModel) -> list[str]:
    scalars = {"variant": model.meta.get("variant", "dmd"), "rank": model.rank,
               "state_dim": model.state_dim, "n_train": model.n_train,
               "requested_rank": model.requested_rank, "fit_residual": float(model.fit_residual)}
    spec = model.meta.get("compression")
    if spec is not None:
        scalars.update({"compression_kind": spec.kind, "compression_dim": spec.p, "compression_seed": spec.seed})
    matrices = {"eigenvalues": model.eigenvalues[None, :], "modes": model.modes,
                "amplitudes": model.amplitudes[None, :]}
    return _section_text(name, scalars, matrices)


def _dmd_from(sec: _Section) -> DmdModel:
    meta = {"variant": sec.get("variant")}
    if "compression_kind" in sec.scalars:
        meta["compression"] = CompressionSpec(sec.get("compression_dim", int), sec.get("compression_kind"),
                                              sec.get("compression_seed", int))
    model = DmdModel(
        modes=sec.matrix("modes"), eigenvalues=sec.matrix("eigenvalues")[0],
        amplitudes=sec.matrix("amplitudes")[0], n_train=sec.get("n_train", int),
        requested_rank=sec.get("requested_rank", int), fit_residual=sec.get("fit_residual", float),
        meta=meta,
    )
    if model.modes.shape != (sec.get("state_dim", int), sec.get("rank", int)):
        raise DataError(f"model section [{sec.name}]: modes do not match rank/state_dim")
    return model


def _edmd_section(name: str, model: EdmdModel) -> list[str]:
    k = model.kernel
    scalars = {"rank": model.rank, "state_dim": model.state_dim, "n_train": model.n_train,
               "requested_rank": model.requested_rank, "fit_residual": float(model.fit_residual),
               "koopman_residual": float(model.koopman_residual), "kernel": k.kind,
               "kernel_bandwidth": None if k.bandwidth is None else float(k.bandwidth),
               "kernel_degree": int(k.degree), "kernel_offset": float(k.offset)}
    matrices = {"eigenvalues": model.eigenvalues[None, :], "coefficients": model.coefficients,
                "modes": model.modes, "amplitudes": model.amplitudes[None, :], "snapshots": model.X}
    return _section_text(name, scalars, matrices)


def _edmd_from(sec: _Section) -> EdmdModel:
    kernel = KernelSpec(sec.get("kernel"), sec.get("kernel_bandwidth", float),
                        sec.get("kernel_degree", int), sec.get("kernel_offset", float))
    arrays = {key: sec.matrix(key) for key in ("eigenvalues", "coefficients", "modes", "amplitudes", "snapshots")}
    for a in arrays.values():
        a.setflags(write=False)
    return EdmdModel(
        X=arrays["snapshots"], kernel=kernel, eigenvalues=arrays["eigenvalues"][0],
        coefficients=arrays["coefficients"], modes=arrays["modes"], amplitudes=arrays["amplitudes"][0],
        n_train=sec.get("n_train", int), requested_rank=sec.get("requested_rank", int),
        fit_residual=sec.get("fit_residual", float), koopman_residual=sec.get("koopman_residual", float),
    )


def _grid_section(name: str, grid: Grid) -> list[str]:
    return _section_text(name, {"nx": grid.nx, "ny": grid.ny, "spacing": grid.spacing,
                                "origin_x": grid.origin[0], "origin_y": grid.origin[1]}, {})


def _grid_from_section(sec: _Section) -> Grid:
    return Grid(sec.get("nx", int), sec.get("ny", int), sec.get("spacing", float),
                (sec.get("origin_x", float), sec.get("origin_y", float)))


def dmd_model_text(model: DmdModel) -> str:
    return "\n".join([MODEL_TAG] + _dmd_section("dmd", model)) + "\n"


def write_dmd_model(path, model: DmdModel):
    atomic_write(path, dmd_model_text(model))


def read_dmd_model(path) -> DmdModel:
    sections = _parse_sections(_read_text(path), path)
    if "dmd" not in sections:
        raise DataError(f"{path}: no [dmd] section")
    return _dmd_from(sections["dmd"])


def twin_model_text(model: TwinModel) -> str:
    cfg, v = model.config, model.variogram
    twin_scalars = {
        "omega": float(model.omega), "cdmd_rank": cfg.cdmd_rank, "compression_kind": cfg.compression_kind,
        "compression_dim": cfg.compression_dim, "compression_seed": cfg.compression_seed,
        "edmd_rank": cfg.edmd_rank, "out_nx": cfg.out_shape[0], "out_ny": cfg.out_shape[1],
        "variogram_bins": cfg.variogram_bins, "refit_variogram": cfg.refit_variogram,
        "kernel": cfg.kernel.kind,
        "kernel_bandwidth": None if cfg.kernel.bandwidth is None else float(cfg.kernel.bandwidth),
        "kernel_degree": int(cfg.kernel.degree), "kernel_offset": float(cfg.kernel.offset),
    }
    lines = [MODEL_TAG]
    lines += _section_text("twin", twin_scalars, {})
    lines += _section_text("variogram", {"kind": v.kind, "nugget": float(v.nugget), "sill": float(v.sill),
                                         "range": float(v.range), "degenerate": v.degenerate}, {})
    lines += _grid_section("grid_in", model.grid_in)
    lines += _grid_section("grid_out", model.grid_out)
    lines += _dmd_section("cdmd", model.cdmd)
    lines += _edmd_section("edmd", model.edmd)
    return "\n".join(lines) + "\n"


def write_twin_model(path, model: TwinModel):
    atomic_write(path, twin_model_text(model))


def read_twin_model(path) -> TwinModel:
    sections = _parse_sections(_read_text(path), path)
    missing = {"twin", "variogram", "grid_in", "grid_out", "cdmd", "edmd"} - sections.keys()
    if missing:
        raise DataError(f"{path}: missing sections {sorted(missing)}")
    tw, vs = sections["twin"], sections["variogram"]
    kernel = KernelSpec(tw.get("kernel"), tw.get("kernel_bandwidth", float), tw.get("kernel_degree", int),
                        tw.get("kernel_offset", float))
    config = TwinConfig(
        cdmd_rank=tw.get("cdmd_rank", int), compression_kind=tw.get("compression_kind"),
        compression_dim=tw.get("compression_dim", int), compression_seed=tw.get("compression_seed", int),
        kernel=kernel, edmd_rank=tw.get("edmd_rank", int), omega=tw.get("omega", float),
        out_shape=(tw.get("out_nx", int), tw.get("out_ny", int)), variogram_kind=vs.get("kind"),
        variogram_bins=tw.get("variogram_bins", int), refit_variogram=tw.get("refit_variogram", _bool),
    )
    variogram = VariogramModel(vs.get("kind"), vs.get("nugget", float), vs.get("sill", float),
                               vs.get("range", float), vs.get("degenerate", _bool))
    return TwinModel(
        cdmd=_dmd_from(sections["cdmd"]), edmd=_edmd_from(sections["edmd"]), variogram=variogram,
        omega=config.omega, grid_in=_grid_from_section(sections["grid_in"]),
        grid_out=_grid_from_section(sections["grid_out"]), config=config,
    )


# PGM ------------------------------------------------------------------------

def pgm_bytes(radio_map: RadioMap) -> bytes:
    """8-bit PGM, min-max scaled; a constant map is uniform grey 128."""
    v = radio_map.values[::-1]
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        pixels = np.rint(255.0 * (v - lo) / (hi - lo)).astype(np.uint8)
    else:
        pixels = np.full(v.shape, 128, dtype=np.uint8)
        hi = lo
    ny, nx = v.shape
    head = f"P5\n# min_db={_f(lo)} max_db={_f(hi)}\n{nx} {ny}\n255\n".encode()
    return head + pixels.tobytes()


def write_pgm(path, radio_map: RadioMap):
    atomic_write(path, pgm_bytes(radio_map))


def read_pgm(path) -> tuple[np.ndarray, float, float]:
    """Decoded dB values (map orientation) and the recorded ``(min_db, max_db)``."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    stream = _io.BytesIO(raw)
    tokens: list[str] = []
    lo = hi = None
    while len(tokens) < 4:
        line = stream.readline()
        if not line:
            raise DataError(f"{path}: truncated PGM header")
        text = line.decode("ascii", "replace").strip()
        if text.startswith("#"):
            fields = dict(p.split("=", 1) for p in text[1:].split() if "=" in p)
            lo, hi = float(fields.get("min_db", "nan")), float(fields.get("max_db", "nan"))
            continue
        tokens += text.split()
    if tokens[0] != "P5" or tokens[3] != "255" or lo is None:
        raise DataError(f"{path}: not an 8-bit chantwin PGM")
    nx, ny = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(stream.read(nx * ny), dtype=np.uint8)
    if pixels.size != nx * ny:
        raise DataError(f"{path}: truncated pixel data")
    pixels = pixels.reshape(ny, nx)[::-1].astype(float)
    values = np.full(pixels.shape, lo) if hi == lo else lo + pixels / 255.0 * (hi - lo)
    return values, lo, hi


# reports --------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def report_text(rows: list[dict], columns: list[str] | None = None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def write_report(path, rows: list[dict], columns: list[str] | None = None):
    atomic_write(path, report_text(rows, columns))


def read_report(path) -> list[dict]:
    return list(csv.DictReader(_io.StringIO(_read_text(path))))


def write_manifest(path, manifest: dict):
    atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid manifest ({exc.msg})") from None
