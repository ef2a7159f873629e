"""Command-line front end: synth / simulate / sweep / compare.

Configuration is plain ``key = value`` text with ``#`` comments; all
outputs are deterministic comma-separated files with 17 significant
digits, plus a gnuplot script for the sweep figures.  Exit codes:
0 success, 1 usage error, 2 synthesis failure, 3 integration failure.
The environment variable STE_LAB_OUT overrides the output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dynamics import (
    IntegrationError,
    Trajectory,
    adiabatic_work,
    direction_of,
    efficiency,
    entropy_balance,
    simulate,
)
from .states import BathParams, SystemParams
from .synthesis import (
    Protocol,
    ProtocolKind,
    SynthesisError,
    adiabatic_protocol,
    custom_protocol,
    quench_protocol,
    synthesize_ste,
)

__all__ = [
    "ConfigError",
    "UsageError",
    "RunConfig",
    "SweepRow",
    "SweepResult",
    "parse_config",
    "cmd_synth",
    "cmd_simulate",
    "cmd_sweep",
    "cmd_compare",
    "main",
]

PROTOCOL_COLUMNS = ("t", "omega", "mu", "alpha", "k_down", "k_up")
TRAJECTORY_COLUMNS = ("t", "omega", "beta", "energy", "work", "heat", "entropy", "fidelity")
SWEEP_COLUMNS = (
    "t_f", "kind", "fidelity", "accuracy", "W", "W_adi", "eta",
    "dS_sys", "dS_bath", "dS_total", "upsilon_max",
)


class ConfigError(ValueError):
    pass


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Fully deterministic run description; defaults match the stock model."""

    system: SystemParams = SystemParams()
    bath: BathParams = BathParams()
    t_f: float | tuple[float, ...] = 8.0
    n_grid: int = 4000
    protocol_kind: ProtocolKind = ProtocolKind.STE
    f_inertial: float = 0.05
    output_dir: Path = field(default=Path("."))

    def t_f_scalar(self) -> float:
        if isinstance(self.t_f, tuple):
            raise UsageError("this command needs a single t_f, got a sweep list")
        return self.t_f

    def t_f_list(self) -> tuple[float, ...]:
        return self.t_f if isinstance(self.t_f, tuple) else (self.t_f,)


def _parse_tf(text: str):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    values = tuple(float(p) for p in parts)
    if not values:
        raise ValueError("empty t_f")
    if len(values) == 1:
        return values[0]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("sweep list must be strictly increasing")
    return values


_CONFIG_KEYS = {
    "system.m": ("m", float),
    "system.omega_i": ("omega_i", float),
    "system.omega_f": ("omega_f", float),
    "bath.T": ("T", float),
    "bath.g": ("g", float),
    "t_f": ("t_f", _parse_tf),
    "n_grid": ("n_grid", int),
    "protocol_kind": ("protocol_kind", ProtocolKind),
    "f_inertial": ("f_inertial", float),
    "output_dir": ("output_dir", Path),
}


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines into a RunConfig; unknown keys are errors."""
    system_kw, bath_kw, top_kw = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        name, conv = _CONFIG_KEYS[key]
        try:
            parsed = conv(value)
        except (ValueError, KeyError) as err:
            raise ConfigError(f"line {lineno}: cannot parse {key} = {value!r}: {err}") from None
        if key.startswith("system."):
            system_kw[name] = parsed
        elif key.startswith("bath."):
            bath_kw[name] = parsed
        else:
            top_kw[name] = parsed
        if key == "n_grid" and parsed < 16:
            raise ConfigError(f"line {lineno}: n_grid must be >= 16, got {parsed}")
        if key == "f_inertial" and not 0 < parsed < 1:
            raise ConfigError(f"line {lineno}: f_inertial must be in (0, 1), got {parsed}")
    try:
        system = SystemParams(**system_kw)
        bath = BathParams(**bath_kw)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return RunConfig(system=system, bath=bath, **top_kw)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# CSV emission (17 significant digits, '.' decimal, '\n' newlines)

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_protocol_csv(path: Path, protocol: Protocol) -> None:
    cols = (protocol.t, protocol.omega, protocol.mu, protocol.alpha,
            protocol.k_down, protocol.k_up)
    _write_csv(path, PROTOCOL_COLUMNS, zip(*cols))


def read_protocol_csv(path: str | Path, system: SystemParams, bath: BathParams) -> Protocol:
    """Re-ingest a protocol file; the stored samples are used verbatim."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    missing = [c for c in PROTOCOL_COLUMNS if c not in (data.dtype.names or ())]
    if missing:
        raise ConfigError(f"protocol file {path} lacks columns: {', '.join(missing)}")
    proto = custom_protocol(data["t"], data["omega"], system, bath)
    # keep the emitted derived samples so a round trip is exact
    return replace_samples(proto, data)


def replace_samples(proto: Protocol, data) -> Protocol:
    proto.mu = np.asarray(data["mu"], dtype=float)
    proto.alpha = np.asarray(data["alpha"], dtype=float)
    proto.k_down = np.asarray(data["k_down"], dtype=float)
    proto.k_up = np.asarray(data["k_up"], dtype=float)
    return proto


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    beta = traj.beta if traj.beta is not None else np.full(traj.t.size, np.nan)
    cols = (traj.t, traj.omega, beta, traj.energy, traj.work, traj.heat,
            traj.entropy, traj.fidelity_to_target)
    _write_csv(path, TRAJECTORY_COLUMNS, zip(*cols))


@dataclass(frozen=True)
class SweepRow:
    t_f: float
    kind: str
    fidelity: float
    accuracy: float
    W: float
    W_adi: float
    eta: float
    dS_sys: float
    dS_bath: float
    dS_total: float
    upsilon_max: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]


def write_sweep_csv(path: Path, result: SweepResult) -> None:
    rows = [
        (r.t_f, r.kind, r.fidelity, r.accuracy, r.W, r.W_adi, r.eta,
         r.dS_sys, r.dS_bath, r.dS_total, r.upsilon_max)
        for r in result.rows
    ]
    _write_csv(path, SWEEP_COLUMNS, rows)


GNUPLOT_TEMPLATE = """\
# gnuplot script for sweep figures; run: gnuplot sweep.gp
set datafile separator ','
set key autotitle columnhead
set key top right
csv = '{csv}'
set terminal pngcairo size 900,600

set output 'fidelity_vs_tf.png'
set xlabel 't_f'
set ylabel 'accuracy -log10(1-F)'
plot csv using (strcol(2) eq 'ste' ? $1 : NaN):4 with linespoints title 'ste', \\
     csv using (strcol(2) eq 'quench' ? $1 : NaN):4 with linespoints title 'quench'

set output 'work_vs_tf.png'
set ylabel 'work'
plot csv using (strcol(2) eq 'ste' ? $1 : NaN):5 with linespoints title 'ste', \\
     csv using (strcol(2) eq 'quench' ? $1 : NaN):5 with linespoints title 'quench', \\
     csv using 1:6 with lines dashtype 2 title 'quasi-static'

set output 'entropy_vs_tf.png'
set ylabel 'entropy production'
plot csv using (strcol(2) eq 'ste' ? $1 : NaN):10 with linespoints title 'ste', \\
     csv using (strcol(2) eq 'quench' ? $1 : NaN):10 with linespoints title 'quench'
"""


def write_plot_script(path: Path, csv_name: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(GNUPLOT_TEMPLATE.format(csv=csv_name))


# ---------------------------------------------------------------------------
# commands

def _build_protocol(config: RunConfig, kind: ProtocolKind, t_f: float) -> Protocol:
    if kind is ProtocolKind.STE:
        return synthesize_ste(
            config.system, config.bath, t_f, config.n_grid, config.f_inertial
        )
    if kind is ProtocolKind.QUENCH:
        return quench_protocol(config.system, config.bath, t_f, config.n_grid)
    if kind is ProtocolKind.ADIABATIC:
        return adiabatic_protocol(config.system, config.bath, t_f, config.n_grid)
    raise UsageError("custom protocols are only available through --protocol")


def cmd_synth(config: RunConfig) -> Path:
    """Synthesize a protocol and write protocol_<kind>.csv."""
    kind = config.protocol_kind
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        protocol = _build_protocol(config, kind, config.t_f_scalar())
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(config.output_dir) / f"protocol_{kind.value}.csv"
    write_protocol_csv(out, protocol)
    return out


def cmd_simulate(config: RunConfig, protocol_file: str | Path | None = None) -> Path:
    """Simulate a protocol (generated or replayed) and write the trajectory."""
    if protocol_file is not None:
        protocol = read_protocol_csv(protocol_file, config.system, config.bath)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            protocol = _build_protocol(config, config.protocol_kind, config.t_f_scalar())
    traj = simulate(protocol)
    out = Path(config.output_dir) / f"trajectory_{protocol.kind.value}.csv"
    write_trajectory_csv(out, traj)
    return out


def _sweep_point(args) -> tuple:
    config, kind, t_f = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        protocol = _build_protocol(config, kind, t_f)
    traj = simulate(protocol)
    bal = entropy_balance(traj)
    w = float(traj.work[-1])
    w_adi = adiabatic_work(config.system, config.bath)
    eta = efficiency(w, w_adi, direction_of(config.system))
    fid = traj.final_fidelity
    ups = protocol.inertial.upsilon_max if kind is ProtocolKind.STE else 0.0
    return SweepRow(
        t_f=t_f, kind=kind.value, fidelity=fid,
        accuracy=float(-np.log10(max(1.0 - fid, 1e-300))),
        W=w, W_adi=w_adi, eta=eta,
        dS_sys=bal.dS_sys, dS_bath=bal.dS_bath, dS_total=bal.dS_total,
        upsilon_max=ups,
    )


def run_sweep(config: RunConfig, workers: int = 1) -> SweepResult:
    """STE and quench observables across the configured t_f list."""
    tasks = [
        (config, kind, t_f)
        for t_f in config.t_f_list()
        for kind in (ProtocolKind.STE, ProtocolKind.QUENCH)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(task) for task in tasks]
    rows.sort(key=lambda r: (r.t_f, r.kind))
    return SweepResult(rows=tuple(rows))


def cmd_sweep(config: RunConfig, workers: int = 1) -> Path:
    result = run_sweep(config, workers)
    out_dir = Path(config.output_dir)
    csv_path = out_dir / "sweep.csv"
    write_sweep_csv(csv_path, result)
    write_plot_script(out_dir / "sweep.gp", csv_path.name)
    return csv_path


def cmd_compare(config: RunConfig) -> Path:
    """Joint STE / quench / quasi-static report at a single duration."""
    t_f = config.t_f_scalar()
    rows = []
    for kind in (ProtocolKind.STE, ProtocolKind.QUENCH, ProtocolKind.ADIABATIC):
        row = _sweep_point((config, kind, t_f))
        if kind is ProtocolKind.ADIABATIC:
            row = SweepRow(**{**row.__dict__, "upsilon_max": 0.0})
        rows.append(row)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            protocol = _build_protocol(config, kind, t_f)
        write_trajectory_csv(
            Path(config.output_dir) / f"trajectory_{kind.value}.csv", simulate(protocol)
        )
    out = Path(config.output_dir) / "compare.csv"
    write_sweep_csv(out, SweepResult(rows=tuple(rows)))
    return out


# ---------------------------------------------------------------------------
# argument handling

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ste-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("synth", "synthesize a protocol and write it as CSV"),
        ("simulate", "integrate a protocol and write the trajectory CSV"),
        ("sweep", "run STE+quench across a t_f list; CSV + plot script"),
        ("compare", "joint STE/quench/quasi-static report at one t_f"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--tf", help="duration or comma-separated sweep list")
        p.add_argument(
            "--kind", choices=[k.value for k in ProtocolKind if k is not ProtocolKind.CUSTOM]
        )
        p.add_argument("--workers", type=int, default=1)
        if name == "simulate":
            p.add_argument("--protocol", help="replay a protocol CSV")
    return parser


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    updates = {}
    if args.tf:
        try:
            updates["t_f"] = _parse_tf(args.tf)
        except ValueError as err:
            raise UsageError(f"bad --tf: {err}") from None
    if args.kind:
        updates["protocol_kind"] = ProtocolKind(args.kind)
    out = os.environ.get("STE_LAB_OUT") or args.out
    if out:
        updates["output_dir"] = Path(out)
    return replace(config, **updates) if updates else config


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        config = _apply_overrides(load_config(args.config), args)
    except (UsageError, ConfigError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        if args.command == "synth":
            path = cmd_synth(config)
        elif args.command == "simulate":
            path = cmd_simulate(config, getattr(args, "protocol", None))
        elif args.command == "sweep":
            path = cmd_sweep(config, workers=max(1, args.workers))
        else:
            path = cmd_compare(config)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except SynthesisError as err:
        print(f"synthesis failed: {err}", file=sys.stderr)
        return 2
    except IntegrationError as err:
        print(f"integration failed: {err}", file=sys.stderr)
        return 3
    print(path)
    return 0


def main_entry() -> None:
    sys.exit(main())
