"""Plain-text ``key = value`` run configuration.

One setting per line; ``#`` starts a comment. ``obstacle`` and ``extra_tx``
may repeat. Unset keys take the library defaults of
:func:`~chantwin.synthdata.default_scenario` and
:class:`~chantwin.ensemble.TwinConfig`. Errors name the line and the key.

Example::

    nx = 30
    ny = 30
    spacing = 5.0
    noise_variance = 10
    omega = 0.6
    obstacle = 60, 20, 80, 40, 15     # xmin, ymin, xmax, ymax, attenuation dB
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .ensemble import TwinConfig
from .errors import ChantwinError, ConfigError
from .grid import make_grid
from .synthdata import ChannelParams, Obstacle, Scenario, Transmitter, default_scenario
from .variants import KernelSpec


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(n: int):
    def parse(text: str) -> tuple[float, ...]:
        parts = [float(p) for p in text.split(",")]
        if len(parts) != n:
            raise ValueError(f"expected {n} comma-separated numbers, got {len(parts)}")
        return tuple(parts)

    return parse


def _optional(parse):
    def inner(text: str):
        return None if text.lower() in ("none", "auto", "median") else parse(text)

    return inner


SCALAR_KEYS = {
    "nx": int, "ny": int, "spacing": float, "origin_x": float, "origin_y": float,
    "tx_x": float, "tx_y": float, "tx_vx": float, "tx_vy": float,
    "n_snapshots": int, "dt": float, "noise_variance": float, "seed": int,
    "bbox": _floats(4),
    "g0": float, "gamma": float, "shadow_sigma": float, "shadow_decorrelation": float,
    "smallscale_sigma": float,
    "n_train": int,
    "cdmd_rank": int, "compression_kind": str, "compression_dim": _optional(int),
    "compression_seed": int,
    "kernel": str, "kernel_bandwidth": _optional(float), "kernel_degree": int,
    "kernel_offset": float,
    "edmd_rank": _optional(int), "omega": float, "out_nx": int, "out_ny": int,
    "variogram": str, "variogram_bins": int, "refit_variogram": _bool,
}
LIST_KEYS = {"obstacle": _floats(5), "extra_tx": _floats(4)}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Raw typed settings; list keys map to lists of tuples."""
    settings: dict = {key: [] for key in LIST_KEYS}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        parse = SCALAR_KEYS.get(key) or LIST_KEYS.get(key)
        if parse is None:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in SCALAR_KEYS and key in seen:
            raise ConfigError(f"{source}:{lineno}: key {key!r} already set on line {seen[key]}")
        try:
            parsed = parse(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
        if key in LIST_KEYS:
            settings[key].append(parsed)
        else:
            settings[key] = parsed
            seen[key] = lineno
    return settings


@dataclass(frozen=True)
class RunConfig:
    """A scenario, the twin settings and the training-window length."""

    scenario: Scenario
    twin: TwinConfig = field(default_factory=TwinConfig)
    n_train: int | None = None
    text: str = ""

    @property
    def train_length(self) -> int:
        return self.scenario.n_snapshots if self.n_train is None else self.n_train

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical settings, independent of comments and layout."""
        return hashlib.sha256(render_config(self).encode()).hexdigest()


def build_config(settings: dict, text: str = "") -> RunConfig:
    """Turn parsed settings into validated objects."""
    base = default_scenario()
    twin_base = TwinConfig()
    get = settings.get
    try:
        grid = make_grid(
            get("nx", base.grid.nx), get("ny", base.grid.ny), get("spacing", base.grid.spacing),
            (get("origin_x", base.grid.origin[0]), get("origin_y", base.grid.origin[1])),
        )
        channel = ChannelParams(
            g0=get("g0", base.channel.g0), gamma=get("gamma", base.channel.gamma),
            shadow_sigma=get("shadow_sigma", base.channel.shadow_sigma),
            shadow_decorrelation=get("shadow_decorrelation", base.channel.shadow_decorrelation),
            smallscale_sigma=get("smallscale_sigma", base.channel.smallscale_sigma),
        )
        scenario = Scenario(
            grid=grid,
            tx_start=(get("tx_x", base.tx_start[0]), get("tx_y", base.tx_start[1])),
            tx_velocity=(get("tx_vx", base.tx_velocity[0]), get("tx_vy", base.tx_velocity[1])),
            n_snapshots=get("n_snapshots", base.n_snapshots), dt=get("dt", base.dt),
            channel=channel, noise_variance=get("noise_variance", base.noise_variance),
            seed=get("seed", base.seed),
            extra_transmitters=tuple(Transmitter((x, y), (vx, vy)) for x, y, vx, vy in get("extra_tx", [])),
            obstacles=tuple(Obstacle(*box) for box in get("obstacle", [])),
            bbox=get("bbox"),
        )
        kernel = KernelSpec(
            kind=get("kernel", twin_base.kernel.kind),
            bandwidth=get("kernel_bandwidth", twin_base.kernel.bandwidth),
            degree=get("kernel_degree", twin_base.kernel.degree),
            offset=get("kernel_offset", twin_base.kernel.offset),
        )
        twin = TwinConfig(
            cdmd_rank=get("cdmd_rank", twin_base.cdmd_rank),
            compression_kind=get("compression_kind", twin_base.compression_kind),
            compression_dim=get("compression_dim", twin_base.compression_dim),
            compression_seed=get("compression_seed", twin_base.compression_seed),
            kernel=kernel,
            edmd_rank=get("edmd_rank", twin_base.edmd_rank),
            omega=get("omega", twin_base.omega),
            out_shape=(get("out_nx", twin_base.out_shape[0]), get("out_ny", twin_base.out_shape[1])),
            variogram_kind=get("variogram", twin_base.variogram_kind),
            variogram_bins=get("variogram_bins", twin_base.variogram_bins),
            refit_variogram=get("refit_variogram", twin_base.refit_variogram),
        )
    except ConfigError:
        raise
    except ChantwinError as exc:
        raise ConfigError(str(exc)) from exc
    n_train = get("n_train")
    if n_train is not None and not 3 <= n_train <= scenario.n_snapshots:
        raise ConfigError(f"n_train must lie in [3, n_snapshots={scenario.n_snapshots}], got {n_train}")
    return RunConfig(scenario, twin, n_train, text)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    return build_config(parse_config_text(text, source), text)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, str(path))


def render_config(config: RunConfig) -> str:
    """Canonical text form; parsing it gives back an equal configuration."""
    sc, tw = config.scenario, config.twin
    ch, k = sc.channel, tw.kernel

    def fmt(v):
        if v is None:
            return "none"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, tuple):
            return ", ".join(repr(float(x)) for x in v)
        return repr(v) if isinstance(v, float) else str(v)

    items = [
        ("nx", sc.grid.nx), ("ny", sc.grid.ny), ("spacing", sc.grid.spacing),
        ("origin_x", sc.grid.origin[0]), ("origin_y", sc.grid.origin[1]),
        ("tx_x", float(sc.tx_start[0])), ("tx_y", float(sc.tx_start[1])),
        ("tx_vx", float(sc.tx_velocity[0])), ("tx_vy", float(sc.tx_velocity[1])),
        ("n_snapshots", sc.n_snapshots), ("dt", float(sc.dt)),
        ("noise_variance", float(sc.noise_variance)), ("seed", sc.seed),
        ("g0", float(ch.g0)), ("gamma", float(ch.gamma)), ("shadow_sigma", float(ch.shadow_sigma)),
        ("shadow_decorrelation", float(ch.shadow_decorrelation)),
        ("smallscale_sigma", float(ch.smallscale_sigma)),
        ("cdmd_rank", tw.cdmd_rank), ("compression_kind", tw.compression_kind),
        ("compression_dim", tw.compression_dim), ("compression_seed", tw.compression_seed),
        ("kernel", k.kind), ("kernel_bandwidth", None if k.bandwidth is None else float(k.bandwidth)),
        ("kernel_degree", k.degree), ("kernel_offset", float(k.offset)),
        ("edmd_rank", tw.edmd_rank), ("omega", float(tw.omega)),
        ("out_nx", tw.out_shape[0]), ("out_ny", tw.out_shape[1]),
        ("variogram", tw.variogram_kind), ("variogram_bins", tw.variogram_bins),
        ("refit_variogram", tw.refit_variogram),
    ]
    if config.n_train is not None:
        items.append(("n_train", config.n_train))
    if sc.bbox is not None:
        items.append(("bbox", tuple(sc.bbox)))
    lines = [f"{key} = {fmt(value)}" for key, value in items]
    lines += [f"extra_tx = {fmt(tuple(tx.start) + tuple(tx.velocity))}" for tx in sc.extra_transmitters]
    lines += [
        f"obstacle = {fmt((b.xmin, b.ymin, b.xmax, b.ymax, b.attenuation))}" for b in sc.obstacles
    ]
    return "\n".join(lines) + "\n"
