"""Command line front end.

Exit codes: 0 success, 2 bad parameters, 3 unreadable input audio,
4 the filter went unstable.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import analysis
from .filters import (
    FilterParams,
    InstabilityError,
    Topology,
    k_bilinear,
    k_chamberlin,
    new_state,
    process_block,
    stability_limit_chamberlin,
)
from .wavio import WavFormatError, read_wav, write_wav

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_UNSTABLE = 4

GRID_LOW_HZ = 10.0
GRID_HIGH_FRACTION = 0.49


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    topology: Topology
    outputs: Tuple[str, ...]
    f: float
    q: float
    fs: float
    n_fft: int = 8192

    def validate(self) -> None:
        if not (math.isfinite(self.fs) and self.fs > 0):
            raise ConfigError(f"fs must be > 0 (got {self.fs})")
        if not (math.isfinite(self.q) and self.q > 0):
            raise ConfigError(f"q must be > 0 (got {self.q})")
        if not (math.isfinite(self.f) and self.f > 0):
            raise ConfigError(f"f must be > 0 (got {self.f})")
        if self.n_fft < 2 or self.n_fft & (self.n_fft - 1):
            raise ConfigError(f"n-fft must be a power of two >= 2 (got {self.n_fft})")
        if not self.outputs:
            raise ConfigError("at least one output must be selected")
        for name in self.outputs:
            if name not in self.topology.outputs:
                raise ConfigError(
                    f"output {name!r} is not available for the {self.topology.value} "
                    f"topology (choose from {','.join(self.topology.outputs)})"
                )
        try:
            self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def params(self) -> FilterParams:
        if self.topology in (Topology.CHAMBERLIN, Topology.REARRANGED):
            k = k_chamberlin(self.f, self.fs)
        else:
            k = k_bilinear(self.f, self.fs)
        return FilterParams(k, self.q, self.fs)


# -- helpers ----------------------------------------------------------------

def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _output_list(text: str) -> Tuple[str, ...]:
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    for name in names:
        if name not in ("hp", "bp", "lp", "br", "ap"):
            raise argparse.ArgumentTypeError(f"unknown output {name!r}")
    return names


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _write_table(rows, header, dest: Optional[str]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if dest is None or dest == "-":
        sys.stdout.write(text)
    else:
        with open(dest, "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def _config(args) -> RunConfig:
    cfg = RunConfig(
        topology=Topology(args.topology),
        outputs=args.out,
        f=args.f,
        q=args.q,
        fs=args.fs,
        n_fft=args.n_fft,
    )
    cfg.validate()
    return cfg


def _measure(topology: Topology, params: FilterParams, n: int, outputs) -> dict:
    x = np.zeros(n)
    x[0] = 1.0
    res = process_block(topology, new_state(topology), params, x)
    idx = _first_bad(res)
    if idx is not None:
        raise InstabilityError(idx, f"impulse response unstable at sample {idx}")
    return {name: res.outputs[name] for name in outputs}


def _first_bad(res) -> Optional[int]:
    found = [i for i in (res.nonfinite_index, res.overflow_index) if i is not None]
    return min(found) if found else None


# -- commands ---------------------------------------------------------------

def cmd_response(args) -> int:
    cfg = _config(args)
    if args.points < 2:
        raise ConfigError(f"points must be >= 2 (got {args.points})")
    params = cfg.params()
    measured = _measure(cfg.topology, params, cfg.n_fft, cfg.outputs)
    bins = np.arange(cfg.n_fft // 2 + 1) * (cfg.fs / cfg.n_fft)
    if args.grid == "fft":
        grid = bins
    else:
        grid = np.logspace(math.log10(GRID_LOW_HZ),
                           math.log10(GRID_HIGH_FRACTION * cfg.fs), args.points)

    rows = []
    for name in cfg.outputs:
        coeffs = analysis.topology_biquad(cfg.topology, params, name)
        curves = (
            ("closed_form", analysis.closed_form_curve(coeffs, grid, cfg.fs)),
            ("measured", analysis.dft_magnitude(measured[name], cfg.fs, cfg.n_fft)),
        )
        for source, curve in curves:
            for f, db, ph in zip(curve.freqs, curve.mag_db, curve.phase):
                rows.append((name, source, _fmt(f), _fmt(db), _fmt(ph)))
    _write_table(rows, ("output", "source", "freq_hz", "mag_db", "phase_rad"), args.output)
    return EXIT_OK


def cmd_process(args) -> int:
    if len(args.out) != 1:
        raise ConfigError("process writes a single output; select exactly one with --out")
    x, rate = read_wav(args.input)
    args.fs = float(rate)
    cfg = _config(args)
    if not np.all(np.isfinite(x)):
        raise WavFormatError(f"{args.input}: contains non-finite samples")
    res = process_block(cfg.topology, new_state(cfg.topology), cfg.params(), x)
    idx = _first_bad(res)
    if idx is not None:
        raise InstabilityError(idx, f"filter unstable at sample {idx}")
    write_wav(args.output, res.outputs[cfg.outputs[0]], rate)
    return EXIT_OK


def cmd_stability(args) -> int:
    if not (math.isfinite(args.fs) and args.fs > 0):
        raise ConfigError(f"fs must be > 0 (got {args.fs})")
    rows = []
    for q in args.q:
        if not (math.isfinite(q) and q > 0):
            raise ConfigError(f"q must be > 0 (got {q})")
        kmax = stability_limit_chamberlin(q)
        if kmax >= 2.0:
            fmax = args.fs / 2.0
        else:
            fmax = args.fs / math.pi * math.asin(kmax / 2.0)
        rows.append((_fmt(q), _fmt(kmax), _fmt(fmax)))
    _write_table(rows, ("q", "kmax", "fmax_chamberlin_hz"), args.output)
    return EXIT_OK


def compare_rows(freqs: Sequence[float], q: float, fs: float, n_fft: int = 8192):
    """Lowpass peak location for Chamberlin (sine map) and improved (tangent
    map) at each target frequency."""
    rows = []
    for f in freqs:
        for topology in (Topology.CHAMBERLIN, Topology.IMPROVED):
            cfg = RunConfig(topology, ("lp",), f, q, fs, n_fft)
            cfg.validate()
            h = _measure(topology, cfg.params(), n_fft, ("lp",))["lp"]
            peak = analysis.peak_frequency(analysis.dft_magnitude(h, fs, n_fft))
            rows.append((f, topology.value, peak, 100.0 * abs(peak - f) / f))
    return rows


def cmd_compare(args) -> int:
    if not args.f:
        raise ConfigError("at least one frequency is required")
    rows = compare_rows(args.f, args.q, args.fs, args.n_fft)
    _write_table(
        [(_fmt(f), t, _fmt(p), _fmt(e)) for f, t, p, e in rows],
        ("f_hz", "topology", "peak_hz", "peak_err_pct"),
        args.output,
    )
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statevar", description="State variable filter tools."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    topologies = [t.value for t in Topology]

    def filter_args(p, need_fs=True):
        p.add_argument("--topology", choices=topologies, default="improved")
        p.add_argument("--out", type=_output_list, default=("lp",),
                       help="comma-separated outputs from hp,bp,lp,br,ap")
        p.add_argument("--f", type=float, required=True, help="cutoff/centre frequency, Hz")
        p.add_argument("--q", type=float, default=1.0 / math.sqrt(2.0))
        if need_fs:
            p.add_argument("--fs", type=float, default=44100.0, help="sample rate, Hz")
        p.add_argument("--n-fft", type=int, default=8192)

    p = sub.add_parser("response", help="closed-form and measured response table")
    filter_args(p)
    p.add_argument("--points", type=int, default=1024, help="log grid size")
    p.add_argument("--grid", choices=("log", "fft"), default="log",
                   help="frequency grid for closed-form rows")
    p.add_argument("-o", "--output", help="CSV destination (default stdout)")
    p.set_defaults(func=cmd_response)

    p = sub.add_parser("process", help="filter a mono WAV file")
    filter_args(p, need_fs=False)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("stability", help="Chamberlin stability limits")
    p.add_argument("--q", type=_float_list, required=True, help="comma-separated Q values")
    p.add_argument("--fs", type=float, default=44100.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("compare", help="lowpass peak drift, Chamberlin vs improved")
    p.add_argument("--f", type=_float_list, default=[5000.0, 10000.0, 15000.0])
    p.add_argument("--q", type=float, default=5.0)
    p.add_argument("--fs", type=float, default=44100.0)
    p.add_argument("--n-fft", type=int, default=8192)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"statevar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WavFormatError as exc:
        print(f"statevar: error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except InstabilityError as exc:
        print(f"statevar: error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except FileNotFoundError as exc:
        print(f"statevar: error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
