"""Command-line front end: parse configs, run experiments, write tables."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .arrays import ULA, UPA, ArrayGeometry
from .cellular import (
    CellularConfig,
    PathLossModel,
    cellular_config_to_dict,
    run_coverage,
    write_coverage_csv,
    write_coverage_json,
)
from .channel import ChannelConfig
from .harness import (
    ExperimentConfig,
    experiment_config_to_dict,
    run_antenna_sweep,
    run_quantization_sweep,
    run_rate_experiment,
    write_rate_csv,
    write_rate_json,
)
from .metrics import (
    large_array_loss_bound,
    quantized_feedback_loss_bound,
    required_feedback_bits,
)
from .presets import (
    EXPERIMENT_ANTENNA_SWEEP,
    EXPERIMENT_COVERAGE,
    EXPERIMENT_QUANT_SWEEP,
    EXPERIMENT_RATES,
    PRESETS,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class ConfigError(Exception):
    """Invalid configuration; the message names the offending field."""


@dataclass
class LoadedConfig:
    """A parsed configuration document plus its experiment kind."""

    kind: str
    experiment: ExperimentConfig | None = None
    cellular: CellularConfig | None = None
    sweep_vary: str | None = None
    sweep_values: list | None = None
    quant_vary: str | None = None
    quant_values: list | None = None


def _require_keys(doc: dict, allowed: set[str], context: str) -> None:
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"{context}: unknown key {key!r}")


def _get_int(doc: dict, key: str, default, minimum=None):
    value = doc.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}")
    return value


def _get_number(doc: dict, key: str, default, positive=False):
    value = doc.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: must be a number")
    if positive and value <= 0:
        raise ConfigError(f"{key}: must be > 0")
    return float(value)


def _get_number_list(doc: dict, key: str, default) -> list[float]:
    values = doc.get(key, default)
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{key}: must be a non-empty list of numbers")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{key}: must be a non-empty list of numbers")
        out.append(float(v))
    return out


def _parse_array(doc: dict, key: str, default: dict) -> ArrayGeometry:
    data = doc.get(key, default)
    if not isinstance(data, dict):
        raise ConfigError(f"{key}: must be an object")
    _require_keys(
        data, {"kind", "n_elements", "spacing", "n_horizontal", "n_vertical"}, key
    )
    kind = data.get("kind")
    if kind not in (ULA, UPA):
        raise ConfigError(f"{key}.kind: must be 'ULA' or 'UPA'")
    spacing = data.get("spacing", 0.5)
    try:
        if kind == ULA:
            return ArrayGeometry.ula(data["n_elements"], spacing)
        n_h, n_v = data.get("n_horizontal"), data.get("n_vertical")
        if n_h is None or n_v is None:
            raise ConfigError(f"{key}: UPA requires n_horizontal and n_vertical")
        geometry = ArrayGeometry.upa(n_h, n_v, spacing)
        if "n_elements" in data and data["n_elements"] != geometry.n_elements:
            raise ConfigError(f"{key}.n_elements: inconsistent with the UPA grid")
        return geometry
    except KeyError as exc:
        raise ConfigError(f"{key}: missing {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def _parse_channel(doc: dict) -> ChannelConfig:
    data = doc.get("channel", {})
    if not isinstance(data, dict):
        raise ConfigError("channel: must be an object")
    _require_keys(data, {"paths", "gain_variance", "elevation"}, "channel")
    try:
        return ChannelConfig(
            n_paths=_get_int(data, "paths", 1, minimum=1),
            gain_variance=_get_number(data, "gain_variance", 1.0, positive=True),
            elevation=data.get("elevation", "uniform"),
        )
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from exc


_EXPERIMENT_KEYS = {
    "experiment",
    "bs_array",
    "ms_array",
    "users",
    "channel",
    "snr_db",
    "schemes",
    "rf_bits_bs",
    "rf_bits_ms",
    "bb_bits",
    "trials",
    "seed",
    "sweep",
    "quant_sweep",
}

_DEFAULT_BS = {"kind": "UPA", "n_horizontal": 8, "n_vertical": 8, "spacing": 0.5}
_DEFAULT_MS = {"kind": "UPA", "n_horizontal": 4, "n_vertical": 4, "spacing": 0.5}
_DEFAULT_SCHEMES = ["hybrid", "beamsteering", "single_user"]


def _parse_experiment(doc: dict) -> LoadedConfig:
    kind = doc["experiment"]
    _require_keys(doc, _EXPERIMENT_KEYS, "config")
    if kind not in (EXPERIMENT_RATES, EXPERIMENT_ANTENNA_SWEEP, EXPERIMENT_QUANT_SWEEP):
        raise ConfigError(f"experiment: unknown kind {kind!r}")

    schemes = doc.get("schemes", _DEFAULT_SCHEMES)
    if not isinstance(schemes, list) or not all(isinstance(s, str) for s in schemes):
        raise ConfigError("schemes: must be a list of scheme names")
    try:
        config = ExperimentConfig(
            bs_geometry=_parse_array(doc, "bs_array", _DEFAULT_BS),
            ms_geometry=_parse_array(doc, "ms_array", _DEFAULT_MS),
            n_users=_get_int(doc, "users", 4, minimum=1),
            channel=_parse_channel(doc),
            snr_db_grid=tuple(_get_number_list(doc, "snr_db", [0.0])),
            schemes=tuple(schemes),
            rf_bits_bs=_get_int(doc, "rf_bits_bs", None, minimum=0),
            rf_bits_ms=_get_int(doc, "rf_bits_ms", None, minimum=0),
            bb_bits=_get_int(doc, "bb_bits", None, minimum=0),
            trials=_get_int(doc, "trials", 100, minimum=1),
            seed=_get_int(doc, "seed", 0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    loaded = LoadedConfig(kind=kind, experiment=config)
    if kind == EXPERIMENT_ANTENNA_SWEEP:
        sweep = doc.get("sweep")
        if not isinstance(sweep, dict):
            raise ConfigError("sweep: antenna_sweep requires a sweep object")
        _require_keys(sweep, {"vary", "values"}, "sweep")
        if sweep.get("vary") not in ("bs", "ms", "both"):
            raise ConfigError("sweep.vary: must be 'bs', 'ms', or 'both'")
        values = sweep.get("values")
        if not isinstance(values, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in values
        ):
            raise ConfigError("sweep.values: must be a list of positive integers")
        loaded.sweep_vary, loaded.sweep_values = sweep["vary"], values
    elif "sweep" in doc:
        raise ConfigError("sweep: only valid for antenna_sweep experiments")

    if kind == EXPERIMENT_QUANT_SWEEP:
        sweep = doc.get("quant_sweep")
        if not isinstance(sweep, dict):
            raise ConfigError("quant_sweep: quant_sweep requires a quant_sweep object")
        _require_keys(sweep, {"vary", "values"}, "quant_sweep")
        if sweep.get("vary") not in ("rf_bits", "bb_bits"):
            raise ConfigError("quant_sweep.vary: must be 'rf_bits' or 'bb_bits'")
        values = sweep.get("values")
        if not isinstance(values, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in values
        ):
            raise ConfigError("quant_sweep.values: must be a list of bit counts >= 0")
        loaded.quant_vary, loaded.quant_values = sweep["vary"], values
    elif "quant_sweep" in doc:
        raise ConfigError("quant_sweep: only valid for quant_sweep experiments")
    return loaded


_COVERAGE_KEYS = {
    "experiment",
    "bs_density",
    "ms_density_factor",
    "region_side",
    "pathloss",
    "users_per_bs",
    "thresholds",
    "bs_array",
    "ms_array",
    "tx_power",
    "noise_power",
    "schemes",
    "include_single_user",
    "trials",
    "seed",
}


def _parse_coverage(doc: dict) -> LoadedConfig:
    _require_keys(doc, _COVERAGE_KEYS, "config")
    pathloss_doc = doc.get("pathloss", {})
    if not isinstance(pathloss_doc, dict):
        raise ConfigError("pathloss: must be an object")
    _require_keys(pathloss_doc, {"los_exponent", "nlos_exponent", "los_radius"}, "pathloss")
    users = doc.get("users_per_bs", [2, 3, 4, 5])
    if not isinstance(users, list) or not all(
        isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in users
    ):
        raise ConfigError("users_per_bs: must be a list of positive integers")
    include_single = doc.get("include_single_user", True)
    if not isinstance(include_single, bool):
        raise ConfigError("include_single_user: must be a boolean")
    schemes = doc.get("schemes", ["hybrid", "beamsteering"])
    if not isinstance(schemes, list) or not all(isinstance(s, str) for s in schemes):
        raise ConfigError("schemes: must be a list of scheme names")
    los_radius = pathloss_doc.get("los_radius")
    if los_radius is not None:
        if isinstance(los_radius, bool) or not isinstance(los_radius, (int, float)):
            raise ConfigError("pathloss.los_radius: must be a number or null")
        los_radius = float(los_radius)
    try:
        config = CellularConfig(
            bs_density=_get_number(doc, "bs_density", 8.0, positive=True),
            ms_density_factor=_get_number(doc, "ms_density_factor", 30.0, positive=True),
            region_side=_get_number(doc, "region_side", 2.0, positive=True),
            pathloss=PathLossModel(
                los_exponent=_get_number(pathloss_doc, "los_exponent", 2.0),
                nlos_exponent=_get_number(pathloss_doc, "nlos_exponent", 4.0),
                los_radius=los_radius,
            ),
            users_per_bs=tuple(users),
            thresholds=tuple(_get_number_list(doc, "thresholds", [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])),
            bs_geometry=_parse_array(doc, "bs_array", _DEFAULT_BS),
            ms_geometry=_parse_array(doc, "ms_array", _DEFAULT_MS),
            tx_power=_get_number(doc, "tx_power", 1.0, positive=True),
            noise_power=_get_number(doc, "noise_power", 100.0, positive=True),
            schemes=tuple(schemes),
            include_single_user=include_single,
            trials=_get_int(doc, "trials", 100, minimum=1),
            seed=_get_int(doc, "seed", 0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return LoadedConfig(kind=EXPERIMENT_COVERAGE, cellular=config)


def parse_config_document(doc: dict) -> LoadedConfig:
    """Parse a configuration document; unknown keys are errors."""
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    kind = doc.get("experiment")
    if kind is None:
        raise ConfigError("experiment: missing (one of rates, antenna_sweep, quant_sweep, coverage)")
    if kind == EXPERIMENT_COVERAGE:
        return _parse_coverage(doc)
    return _parse_experiment(doc)


def load_config(path: str | Path) -> LoadedConfig:
    """Load and strictly validate a JSON configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config_document(doc)


def compose_document(loaded: LoadedConfig) -> dict:
    """Canonical configuration document with all defaults filled in.

    Parsing the composed document reproduces the same configuration, so
    emitted provenance files re-run identically.
    """
    if loaded.kind == EXPERIMENT_COVERAGE:
        return {"experiment": loaded.kind, **cellular_config_to_dict(loaded.cellular)}
    doc = {"experiment": loaded.kind, **experiment_config_to_dict(loaded.experiment)}
    if loaded.kind == EXPERIMENT_ANTENNA_SWEEP:
        doc["sweep"] = {"vary": loaded.sweep_vary, "values": list(loaded.sweep_values)}
    if loaded.kind == EXPERIMENT_QUANT_SWEEP:
        doc["quant_sweep"] = {"vary": loaded.quant_vary, "values": list(loaded.quant_values)}
    return doc


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems as config errors."""

    def error(self, message):
        raise ConfigError(message)


_PLOT_TEMPLATE = '''\
#!/usr/bin/env python3
"""Plot {csv_name} (generated alongside the results; requires matplotlib)."""

import csv
from collections import defaultdict

import matplotlib.pyplot as plt

XCOL = {xcol!r}
YCOL = {ycol!r}

series = defaultdict(list)
with open({csv_name!r}) as f:
    for row in csv.DictReader(f):
        key = row["scheme"]
        if row.get("sweep_param") not in (None, ""):
            key += " (" + row["sweep_param"] + ")" if XCOL != "sweep_param" else ""
        if row.get("n") not in (None, ""):
            key += " n=" + row["n"]
        series[key].append((float(row[XCOL]), float(row[YCOL])))

for key, points in sorted(series.items()):
    points.sort()
    plt.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=key)
plt.xlabel(XCOL)
plt.ylabel(YCOL)
plt.legend()
plt.grid(True)
plt.savefig({png_name!r}, dpi=150, bbox_inches="tight")
print("wrote " + {png_name!r})
'''


def _write_plot_script(out_dir: Path, base: str, kind: str) -> None:
    if kind == EXPERIMENT_COVERAGE:
        xcol, ycol = "eta", "coverage"
    elif kind == EXPERIMENT_RATES:
        xcol, ycol = "snr_db", "mean_rate"
    else:
        xcol, ycol = "sweep_param", "mean_rate"
    script = _PLOT_TEMPLATE.format(
        csv_name=f"{base}.csv", xcol=xcol, ycol=ycol, png_name=f"{base}.png"
    )
    (out_dir / f"{base}_plot.py").write_text(script)


def _resolve_config(args) -> tuple[LoadedConfig, str]:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("provide exactly one of --config or --preset")
    if args.preset is not None:
        if args.preset not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ConfigError(f"preset: unknown preset {args.preset!r} (known: {known})")
        doc = dict(PRESETS[args.preset].document)
        base = args.preset
    else:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config: top level must be an object")
        base = path.stem
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.trials is not None:
        doc["trials"] = args.trials
    return parse_config_document(doc), base


def _expected_kind(subcommand: str) -> str:
    return {
        "rates": EXPERIMENT_RATES,
        "antenna-sweep": EXPERIMENT_ANTENNA_SWEEP,
        "quant-sweep": EXPERIMENT_QUANT_SWEEP,
        "coverage": EXPERIMENT_COVERAGE,
    }[subcommand]


def _run_subcommand(args) -> int:
    loaded, base = _resolve_config(args)
    expected = _expected_kind(args.subcommand)
    if loaded.kind != expected:
        raise ConfigError(
            f"experiment: config is {loaded.kind!r} but the subcommand expects {expected!r}"
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    doc = compose_document(loaded)
    if loaded.kind == EXPERIMENT_COVERAGE:
        table = run_coverage(loaded.cellular)
        if all(math.isnan(r.coverage) for r in table.rows):
            raise RuntimeError("no cell served any user; coverage is undefined")
        if args.format == "json":
            write_coverage_json(table, doc, out_dir / f"{base}.json")
        else:
            write_coverage_csv(table, out_dir / f"{base}.csv")
    else:
        if loaded.kind == EXPERIMENT_RATES:
            table = run_rate_experiment(loaded.experiment)
        elif loaded.kind == EXPERIMENT_ANTENNA_SWEEP:
            table = run_antenna_sweep(loaded.experiment, loaded.sweep_vary, loaded.sweep_values)
        else:
            rf = loaded.quant_values if loaded.quant_vary == "rf_bits" else None
            bb = loaded.quant_values if loaded.quant_vary == "bb_bits" else None
            table = run_quantization_sweep(loaded.experiment, rf, bb)
        starved = [r for r in table.rows if r.trials == 0]
        if starved:
            raise RuntimeError(
                f"scheme {starved[0].scheme!r} lost every trial "
                f"({starved[0].excluded} excluded); no rates to report"
            )
        if args.format == "json":
            write_rate_json(table, doc, out_dir / f"{base}.json")
        else:
            write_rate_csv(table, out_dir / f"{base}.csv")

    with open(out_dir / f"{base}.config.json", "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    if args.emit_plot_script:
        _write_plot_script(out_dir, base, loaded.kind)
    return EXIT_OK


def _run_bounds(args) -> int:
    chosen = [
        name
        for name, flag in (
            ("quantized-loss", args.quantized_loss),
            ("required-bits", args.required_bits),
            ("multipath-loss", args.multipath_loss),
        )
        if flag
    ]
    if len(chosen) != 1:
        raise ConfigError(
            "bounds: choose exactly one of --quantized-loss, --required-bits, --multipath-loss"
        )

    def need(name):
        value = getattr(args, name.replace("-", "_"))
        if value is None:
            raise ConfigError(f"--{name}: required for this bound")
        return value

    snr_linear = 10.0 ** (need("snr-db") / 10.0)
    if chosen[0] == "quantized-loss":
        value = quantized_feedback_loss_bound(
            snr=snr_linear,
            n_users=need("users"),
            n_bs=need("n-bs"),
            n_ms=need("n-ms"),
            alpha_bar=args.alpha_bar,
            bb_bits=need("bb-bits"),
            mu_bs=need("mu-bs"),
            mu_ms=need("mu-ms"),
        )
    elif chosen[0] == "required-bits":
        value = required_feedback_bits(
            snr_db=need("snr-db"),
            n_users=need("users"),
            n_bs=need("n-bs"),
            n_ms=need("n-ms"),
            alpha_bar=args.alpha_bar,
            mu_bs=need("mu-bs"),
            mu_ms=need("mu-ms"),
            target=need("target-factor"),
        )
    else:
        value = large_array_loss_bound(
            snr=snr_linear,
            n_users=need("users"),
            n_bs=need("n-bs"),
            n_ms=need("n-ms"),
            n_paths=need("paths"),
            alpha_bar=args.alpha_bar,
            bb_bits=need("bb-bits"),
        )
    print(repr(float(value)))
    return EXIT_OK


def _run_preset(args) -> int:
    if args.list or args.name is None:
        for name in sorted(PRESETS):
            print(f"{name}: {PRESETS[name].description}")
        return EXIT_OK
    if args.name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"preset: unknown preset {args.name!r} (known: {known})")
    loaded = parse_config_document(dict(PRESETS[args.name].document))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / f"{args.name}.config.json"
    with open(target, "w") as f:
        json.dump(compose_document(loaded), f, indent=2)
        f.write("\n")
    print(f"wrote {target}")
    return EXIT_OK


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a JSON configuration file")
    parser.add_argument("--preset", help="name of a built-in configuration")
    parser.add_argument("--out", default=".", help="output directory (default: .)")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--trials", type=int, help="override the configured trial count")
    parser.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="results format"
    )
    parser.add_argument(
        "--emit-plot-script",
        action="store_true",
        help="also write a matplotlib script that plots the CSV",
    )


def build_parser() -> argparse.ArgumentParser:
    epilog_lines = ["presets:"]
    for name in sorted(PRESETS):
        epilog_lines.append(f"  {name:8s} {PRESETS[name].description}")
    parser = _Parser(
        prog="mmwave-hybrid",
        description=(
            "Multi-user mmWave hybrid precoding simulator: Monte Carlo rate "
            "experiments, codebook sweeps, cellular coverage, and analytical "
            "bound evaluation. Configuration defaults: 8x8 BS / 4x4 MS planar "
            "arrays, 4 users, single-path channels with unit gain variance, "
            "continuous RF angles (null bit counts), perfect feedback (null "
            "bb_bits), 100 trials, seed 0."
        ),
        epilog="\n".join(epilog_lines),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    for name, text in (
        ("rates", "averaged per-user rate vs SNR"),
        ("antenna-sweep", "averaged per-user rate vs antenna count"),
        ("quant-sweep", "averaged per-user rate vs codebook size"),
        ("coverage", "per-user coverage probability vs rate threshold"),
    ):
        p = sub.add_parser(name, help=text)
        _add_run_options(p)
        p.set_defaults(handler=_run_subcommand)

    b = sub.add_parser("bounds", help="evaluate analytical bounds in closed form")
    b.add_argument("--quantized-loss", action="store_true",
                   help="rate-loss bound for joint RF/baseband quantization")
    b.add_argument("--required-bits", action="store_true",
                   help="feedback bits needed to hold a target rate loss")
    b.add_argument("--multipath-loss", action="store_true",
                   help="large-array multipath quantization loss bound")
    b.add_argument("--snr-db", type=float, dest="snr_db",
                   help="P/sigma^2 in dB (not the plotted per-user SNR)")
    b.add_argument("--users", type=int)
    b.add_argument("--n-bs", type=int, dest="n_bs")
    b.add_argument("--n-ms", type=int, dest="n_ms")
    b.add_argument("--alpha-bar", type=float, default=1.0, dest="alpha_bar",
                   help="mean squared path gain (default 1.0)")
    b.add_argument("--bb-bits", type=float, dest="bb_bits")
    b.add_argument("--mu-bs", type=float, dest="mu_bs",
                   help="BS codebook correlation floor")
    b.add_argument("--mu-ms", type=float, dest="mu_ms",
                   help="MS codebook correlation floor")
    b.add_argument("--paths", type=int)
    b.add_argument("--target-factor", type=float, dest="target_factor",
                   help="loss target b; the bound holds the loss at log2(b)")
    b.set_defaults(handler=_run_bounds)

    pr = sub.add_parser("preset", help="list presets or write one as a config file")
    pr.add_argument("name", nargs="?", help="preset to write out")
    pr.add_argument("--list", action="store_true", help="list presets and exit")
    pr.add_argument("--out", default=".", help="output directory (default: .)")
    pr.set_defaults(handler=_run_preset)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures map to a distinct exit code
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
