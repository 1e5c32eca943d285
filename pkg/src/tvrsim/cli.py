"""Command line driver: ``tvrsim generate|calibrate|evaluate|analyze``.

Settings come from an optional INI file (section ``[tvrsim]``) and are
overridden by flags. Every run writes the effective settings to
``<out>/config.ini`` so it can be repeated with ``--config``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import analysis, calibration, geometry
from .channel import ChannelParams, link_matrix
from .routing import DEFAULT_XMAX, build_neighbor_table, parse_strategy
from .scenario import DENSITY_PRESETS, RoadConfig, generate
from .stats import NoRootError

log = logging.getLogger("tvrsim")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
SECTION = "tvrsim"


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    out: str = "out"
    density: str = "medium"
    powers: tuple[float, ...] = ()
    pairs: int = 0
    xmax: float = DEFAULT_XMAX
    sigma: float = 0.0
    snapshots: int = 1
    strategies: tuple[str, ...] = ("farthest", "most_new", "tvr")
    tall_fraction: float = 0.1436
    lanes: int = 4
    road_length: float = 13_500.0
    los_range: float = 750.0
    relay_range: float = 500.0
    bin_width: float = 20.0

    @property
    def density_value(self) -> float:
        return resolve_density(self.density)

    def road(self) -> RoadConfig:
        return RoadConfig(length=self.road_length, lanes=self.lanes, density=self.density_value,
                          tall_fraction=self.tall_fraction)

    def channel(self) -> ChannelParams:
        return ChannelParams(shadowing_sigma=self.sigma)

    def scenarios(self):
        road = self.road()
        return [generate(road, snapshot_seed(self.seed, k)) for k in range(self.snapshots)]

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser[SECTION] = {f.name: _ini_value(getattr(self, f.name)) for f in fields(self)}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _ini_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def resolve_density(text) -> float:
    key = str(text).strip().lower()
    if key in DENSITY_PRESETS:
        return DENSITY_PRESETS[key]
    try:
        value = float(key)
    except ValueError:
        raise UsageError(f"density must be low, medium, high or a number, got {text!r}") from None
    if not value > 0:
        raise UsageError("density must be positive")
    return value


def snapshot_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1, dtype=np.uint64)[0])


# per-command defaults applied when neither file nor flag sets a value
COMMAND_DEFAULTS = {
    "generate": {},
    "calibrate": {"powers": tuple(float(p) for p in range(1, 21)), "pairs": 200, "snapshots": 3},
    "evaluate": {"powers": (5.0, 10.0, 15.0), "pairs": 2000},
    "analyze": {"powers": (10.0,), "sigma": 3.0, "snapshots": 3},
}

_CASTS = {
    "seed": int, "pairs": int, "snapshots": int, "lanes": int,
    "xmax": float, "sigma": float, "tall_fraction": float, "road_length": float,
    "los_range": float, "relay_range": float, "bin_width": float,
    "out": str, "density": str,
    "powers": lambda s: tuple(float(p) for p in str(s).split(",") if p.strip()),
    "strategies": lambda s: tuple(p.strip() for p in str(s).split(",") if p.strip()),
}


def build_config(command: str, args: argparse.Namespace) -> ExperimentConfig:
    values = dict(COMMAND_DEFAULTS[command])
    if args.config:
        parser = configparser.ConfigParser()
        try:
            with open(args.config, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if parser.has_section(SECTION):
            for key, raw in parser[SECTION].items():
                if key not in _CASTS:
                    raise UsageError(f"unknown config key {key!r}")
                try:
                    values[key] = _CASTS[key](raw)
                except ValueError as exc:
                    raise UsageError(f"bad value for {key}: {exc}") from None

    flag_map = {
        "seed": args.seed, "out": args.out, "density": args.density, "pairs": args.pairs,
        "xmax": args.xmax, "sigma": args.sigma, "snapshots": args.snapshots,
        "tall_fraction": args.tall_fraction,
        "powers": tuple(args.power) if args.power else None,
        "strategies": tuple(s for item in args.strategies for s in item.split(",") if s)
        if args.strategies else None,
    }
    values.update({k: v for k, v in flag_map.items() if v is not None})
    if "seed" not in values:
        raise UsageError("--seed is required (on the command line or in the config file)")
    cfg = ExperimentConfig(**values)

    resolve_density(cfg.density)
    for name in cfg.strategies:
        try:
            parse_strategy(name)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if cfg.snapshots < 1:
        raise UsageError("--snapshots must be at least 1")
    if not 0 <= cfg.tall_fraction <= 1:
        raise UsageError("--tall-fraction must lie in [0, 1]")
    if cfg.sigma < 0 or cfg.xmax < 0:
        raise UsageError("--sigma and --xmax must be non-negative")
    try:
        cfg.road()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(cfg.to_ini(), encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"cannot write to output directory {out}: {exc.strerror or exc}") from None
    return out


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc.strerror or exc}") from None


def _table(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# --- commands -----------------------------------------------------------------


def cmd_generate(cfg: ExperimentConfig) -> int:
    out = _prepare_out(cfg)
    scenarios = cfg.scenarios()
    if len(scenarios) == 1:
        _write(out / "scenario.csv", scenarios[0].to_csv())
    else:
        for k, s in enumerate(scenarios):
            _write(out / f"scenario_{k:03d}.csv", s.to_csv())
    print(f"wrote {sum(len(s) for s in scenarios)} vehicles to {out}")
    return EXIT_OK


def cmd_calibrate(cfg: ExperimentConfig) -> int:
    out = _prepare_out(cfg)
    scenarios = cfg.scenarios()
    try:
        result = calibration.average_xmax(scenarios, cfg.powers, cfg.channel(), n_pairs=cfg.pairs,
                                          seed=cfg.seed)
    except calibration.InsufficientSamples as exc:
        print(f"error: {exc} (density {cfg.density}, tall fraction {cfg.tall_fraction}, "
              f"powers {list(cfg.powers)})", file=sys.stderr)
        return EXIT_RUNTIME

    rows = []
    for power in cfg.powers:
        subset = [s for s in result.samples if s.power == power]
        tall = [s for s in subset if s.label is calibration.Label.TALL_BEST]
        short = [s for s in subset if s.label is calibration.Label.SHORT_BEST]
        root = ""
        try:
            root = repr(calibration.solve_xmax(calibration.fit_normal(tall), calibration.fit_normal(short)))
        except (calibration.InsufficientSamples, NoRootError, ArithmeticError) as exc:
            log.info("no normal-fit threshold at %s dBm: %s", power, exc)
        mean_t = result.per_power.get(power)
        rows.append([repr(float(power)), "" if mean_t is None else repr(mean_t), len(tall), len(short), root])
    rows.append(["average", repr(result.x_max), sum(r[2] for r in rows), sum(r[3] for r in rows), ""])
    _write(out / "xmax.csv", _table(
        ["power_dbm", "mean_tall_best_m", "n_tall_best", "n_short_best", "normal_fit_root_m"], rows))
    _write(out / "samples.csv", calibration.samples_to_csv(result.samples))

    for power, value in result.per_power.items():
        print(f"  {power:5.1f} dBm  E[t] = {value:8.2f} m")
    for power in result.skipped:
        print(f"  {power:5.1f} dBm  skipped: no tall-best samples")
    print(f"x_max = {result.x_max:.2f} m")
    return EXIT_OK


def cmd_evaluate(cfg: ExperimentConfig) -> int:
    out = _prepare_out(cfg)
    scenarios = cfg.scenarios()
    strategies = [parse_strategy(s, cfg.xmax) for s in cfg.strategies]
    params = cfg.channel()
    report = analysis.compare_strategies(scenarios, cfg.pairs, cfg.powers, strategies, params,
                                         seed=cfg.seed, group=str(cfg.density), keep_routes=True)

    top = params.with_power(max(cfg.powers))
    links = [link_matrix(s, top) for s in scenarios]
    obst_rows, usage_rows = [], []
    for power in cfg.powers:
        tables = [build_neighbor_table(s, params.with_power(power), lm) for s, lm in zip(scenarios, links)]
        for rule in strategies:
            selected = np.zeros(1, dtype=np.int64)
            every = np.zeros(1, dtype=np.int64)
            usage = []
            for k, (scenario, table) in enumerate(zip(scenarios, tables)):
                routes = report.routes.get((power, rule.name, k), [])
                hist = analysis.chosen_link_obstructions(routes, table)
                selected = _add(selected, hist.selected)
                every = _add(every, hist.all_links)
                if routes:
                    usage.append(analysis.relay_usage(routes, scenario))
            width = max(selected.size, every.size)
            for n_obst in range(width):
                obst_rows.append([repr(float(power)), rule.name, n_obst,
                                  int(_at(selected, n_obst)), int(_at(every, n_obst))])
            pct = float(np.mean(usage)) if usage else 0.0
            usage_rows.append([repr(float(power)), rule.name, f"{pct:.6f}", round(pct)])

    _write(out / "comparison.csv", report.to_csv())
    _write(out / "obstructions.csv", _table(
        ["power_dbm", "strategy", "n_obstacles", "selected_links", "all_links"], obst_rows))
    _write(out / "relay_usage.csv", _table(
        ["power_dbm", "strategy", "relay_pct", "relay_pct_rounded"], usage_rows))

    for name, stats in report.summary().items():
        print(f"  {name:10s} best {stats['best_pct']:6.2f}% (sd {stats['best_pct_std']:.2f})  "
              f"hops {stats['mean_hops']:.2f}  failures {100 * stats['failure_rate']:.2f}%")
    return EXIT_OK


def _add(a, b):
    width = max(a.size, b.size)
    return np.pad(a, (0, width - a.size)) + np.pad(b, (0, width - b.size))


def _at(arr, k):
    return arr[k] if k < arr.size else 0


def cmd_analyze(cfg: ExperimentConfig) -> int:
    out = _prepare_out(cfg)
    scenarios = cfg.scenarios()
    params = cfg.channel().with_power(cfg.powers[0])

    los_rows = []
    for k, s in enumerate(scenarios):
        ratios = geometry.per_vehicle_los_ratio(s, cfg.los_range, params.wavelength)
        for vid, ratio in ratios.items():
            los_rows.append([k, vid, s.vehicle(vid).vclass.value, repr(float(ratio))])
    _write(out / "los_ratio.csv", _table(["snapshot", "vehicle_id", "class", "los_ratio"], los_rows))

    road = cfg.road()
    pt_rows = []
    for x_max in np.arange(0.0, min(150.0, cfg.relay_range) + 1e-9, 5.0):
        pt_rows.append([
            repr(float(x_max)),
            repr(analysis.tall_relay_prob_analytic(road.tall_fraction, road.linear_density, x_max)),
            repr(analysis.tall_relay_prob_empirical(scenarios, cfg.relay_range, x_max)),
        ])
    _write(out / "p_tall.csv", _table(["x_max_m", "analytic", "empirical"], pt_rows))

    margin = 3.0 * params.shadowing_sigma
    links = [link_matrix(s, params, margin_db=margin) for s in scenarios]
    curves = {}
    for pairing in analysis.Pairing:
        for nlos in (False, True):
            curve = analysis.pdr_vs_distance(scenarios, params, pairing, cfg.bin_width, nlos_only=nlos,
                                             links=links)
            tag = f"{pairing.value}_{'nlos' if nlos else 'all'}"
            curves[tag] = curve
            _write(out / f"pdr_{tag}.csv", curve.to_csv())

    range_rows = []
    for target in np.round(np.arange(0.5, 1.0001, 0.05), 2):
        row = [repr(float(target))]
        for tag in ("car_car_nlos", "van_x_nlos"):
            r = analysis.effective_range(curves[tag], float(target))
            row.append("" if r is None else repr(r))
        range_rows.append(row)
    _write(out / "effective_range.csv", _table(["target_pdr", "car_car_m", "van_x_m"], range_rows))
    print(f"wrote analysis tables for {len(scenarios)} snapshot(s) to {out}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "analyze": cmd_analyze,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--density", metavar="low|medium|high|NUMBER")
    common.add_argument("--power", type=float, action="append", metavar="DBM")
    common.add_argument("--pairs", type=int, metavar="N")
    common.add_argument("--xmax", type=float, metavar="METERS")
    common.add_argument("--sigma", type=float, metavar="DB")
    common.add_argument("--snapshots", type=int, metavar="N")
    common.add_argument("--tall-fraction", type=float, metavar="GAMMA")
    common.add_argument("--strategies", action="append", metavar="farthest,most_new,tvr")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="tvrsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args.command, args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tvrsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"tvrsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg)
    except RuntimeError as exc:
        print(f"tvrsim: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
