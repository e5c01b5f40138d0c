"""Command-line front end.

    centralspin reduce   --n0 0 --n 999 --m 3
    centralspin dynamics --n 49 --m 4 --b 0 --tmax 10 --ntimes 101 --out rzz.csv
    centralspin sw       --samples 100000 --tmax 10
    centralspin compare  --preset n49-field-long

``--n0 0`` selects the uniform model, ``--n0 >= 2`` the exponential one and
``--couplings-file`` reads one coupling per line (``#`` starts a comment).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .combinatorics import allowed_twice_spins
from .dynamics import ALL_COMPONENTS, DynamicsConfig, correlation_tensor
from .hyperfine import HyperfineDistribution, exponential_couplings, uniform_couplings
from .moments import ReducedModel, ReductionFailed, moment_report, reduce_model
from .sw import SWConfig, sw_correlation

THREADS_ENV = "CENTRALSPIN_THREADS"

DEFAULTS = dict(
    n0=0, n=49, m=4, b=0.0, tmax=10.0, ntimes=101, threshold=1000,
    samples=1000, seed=0, drop=0.0, sw_samples=100_000,
)

# Named run configurations. The long-time ones are far beyond desktop scale.
PRESETS = {
    "n49": dict(n0=0, n=49, m=4, b=0.0, tmax=10.0, ntimes=101),
    "n49-field-long": dict(n0=0, n=49, m=5, b=0.25, tmax=100.0, ntimes=1001),
    "n99-long": dict(n0=0, n=99, m=4, b=0.0, tmax=100.0, ntimes=1001),
    "n999-long": dict(n0=0, n=999, m=3, b=0.0, tmax=100.0, ntimes=1001),
}


@dataclass
class RunConfig:
    model: HyperfineDistribution
    n0: int | None
    m: int
    b_field: float
    t_max: float
    n_times: int
    deterministic_threshold: int
    n_samples: int
    seed: int
    threads: int
    block_filter: float
    sw_samples: int

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError(f"tmax must be positive, got {self.t_max}")
        if self.n_times < 2:
            raise ValueError(f"ntimes must be at least 2, got {self.n_times}")
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_times)


def read_couplings(path) -> HyperfineDistribution:
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                values.append(float(line))
    if not values:
        raise ValueError(f"no couplings found in {path}")
    return HyperfineDistribution(tuple(values)).normalized()


def write_couplings(path, dist: HyperfineDistribution, comment: str = "") -> None:
    with open(path, "w") as fh:
        fh.write("# hyperfine couplings a_j * tau, one per line\n")
        if comment:
            fh.write(f"# {comment}\n")
        for a in dist.couplings:
            fh.write(f"{a!r}\n")


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return int(env)
    return os.cpu_count() or 1


def _setting(args, name):
    value = getattr(args, name, None)
    if value is not None:
        return value
    preset = PRESETS.get(getattr(args, "preset", None) or "", {})
    return preset.get(name, DEFAULTS[name])


def build_config(args) -> RunConfig:
    n0 = _setting(args, "n0")
    if args.couplings_file:
        model, n0 = read_couplings(args.couplings_file), None
    elif n0 == 0:
        model = uniform_couplings(_setting(args, "n"))
    else:
        model = exponential_couplings(n0, _setting(args, "n"))
    threads = args.threads if args.threads is not None else default_threads()
    return RunConfig(
        model=model,
        n0=n0,
        m=_setting(args, "m"),
        b_field=_setting(args, "b"),
        t_max=_setting(args, "tmax"),
        n_times=_setting(args, "ntimes"),
        deterministic_threshold=_setting(args, "threshold"),
        n_samples=_setting(args, "samples"),
        seed=_setting(args, "seed"),
        threads=threads,
        block_filter=_setting(args, "drop"),
        sw_samples=_setting(args, "sw_samples"),
    )


def reduced(config: RunConfig) -> ReducedModel:
    """The M-set model; M = N keeps every nucleus as its own set."""
    dist = config.model
    if config.m == dist.n:
        return ReducedModel(dist.couplings, (1,) * dist.n)
    return reduce_model(dist, config.m)[0]


def format_report(n0, dist: HyperfineDistribution, model: ReducedModel) -> str:
    report = moment_report(dist, model)
    lines = [
        "",
        f"  N0 = {n0 if n0 is not None else 0:5d}   N = {dist.n:5d}   M = {model.m:5d}",
        "",
        "      j      N_j                 A_j",
        "",
    ]
    for j, (nj, aj) in enumerate(zip(model.counts, model.couplings), start=1):
        lines.append(f" {j:6d}{nj:9d}{aj:20.12f}")
    lines += ["", "      k                    error (%)", ""]
    for k, err in enumerate(report.percent_errors, start=1):
        if k == model.m + 1:
            lines.append("")
        lines.append(f" {k:6d}{err:29.6f}")
    lines.append("")
    return "\n".join(lines) + "\n"


def csv_text(times, values, stderr=None, columns=ALL_COMPONENTS) -> str:
    header = ["t_over_tau"] + ["R" + c for c in columns]
    if stderr is not None:
        header += ["se_" + c for c in columns]
    idx = [("xyz".index(c[0]), "xyz".index(c[1])) for c in columns]
    rows = [",".join(header)]
    for ti, t in enumerate(times):
        cells = [f"{t:.10g}"] + [f"{values[ti, a, b]:.15e}" for a, b in idx]
        if stderr is not None:
            cells += [f"{stderr[ti, a, b]:.6e}" for a, b in idx]
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dynamics(config: RunConfig):
    model = reduced(config)
    dyn = DynamicsConfig(
        deterministic_threshold=config.deterministic_threshold,
        n_samples=config.n_samples,
        master_seed=config.seed,
        block_filter=config.block_filter,
        threads=config.threads,
    )
    return correlation_tensor(model, config.b_field, config.times, dyn)


def _dry_run(config: RunConfig) -> str:
    """Workload summary computed from the set sizes alone (no block enumeration)."""
    model = reduced(config)
    n_blocks = math.prod(len(allowed_twice_spins(nj)) for nj in model.counts)
    largest = 2 * math.prod(nj + 1 for nj in model.counts)
    return (
        f"N = {model.n}  M = {model.m}  counts = {model.counts}\n"
        f"B = {config.b_field}  tmax = {config.t_max}  ntimes = {config.n_times}\n"
        f"blocks = {n_blocks}  largest block = {largest}  threshold = {config.deterministic_threshold}\n"
        f"samples = {config.n_samples}  drop = {config.block_filter}  threads = {config.threads}\n"
    )


def cmd_reduce(args) -> int:
    config = build_config(args)
    model = reduced(config)
    _emit(format_report(config.n0, config.model, model), args.out)
    if args.save_couplings:
        write_couplings(args.save_couplings, config.model, f"N = {config.model.n}")
    return 0


def cmd_dynamics(args) -> int:
    config = build_config(args)
    if args.dry_run:
        _emit(_dry_run(config), args.out)
        return 0
    r = _dynamics(config)
    _emit(csv_text(r.times, r.values, r.stderr), args.out)
    return 0


def cmd_sw(args) -> int:
    config = build_config(args)
    r = sw_correlation(SWConfig(config.sw_samples, config.seed, config.b_field), config.times)
    _emit(csv_text(r.times, r.values, r.stderr), args.out)
    return 0


def cmd_compare(args) -> int:
    config = build_config(args)
    if args.dry_run:
        _emit(_dry_run(config), args.out)
        return 0
    qm = _dynamics(config)
    sw = sw_correlation(SWConfig(config.sw_samples, config.seed, config.b_field), config.times)
    rows = ["t_over_tau,QM_Rxx,QM_Ryy,QM_Rzz,SW_Rxx,SW_Ryy,SW_Rzz"]
    for i, t in enumerate(config.times):
        cells = [f"{t:.10g}"]
        cells += [f"{qm.values[i, a, a]:.10f}" for a in range(3)]
        cells += [f"{sw.values[i, a, a]:.10f}" for a in range(3)]
        rows.append(",".join(cells))
    _emit("\n".join(rows) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=sorted(PRESETS), help="named run configuration")
    common.add_argument("--n0", type=int, help="0 = uniform model, >= 2 = exponential model")
    common.add_argument("--n", type=int, help="number of nuclear spins")
    common.add_argument("--m", type=int, help="number of sets of equivalent nuclei")
    common.add_argument("--couplings-file", help="read couplings from a file instead")
    common.add_argument("--b", type=float, help="magnetic field in units of 1/tau")
    common.add_argument("--tmax", type=float, help="final time in units of tau")
    common.add_argument("--ntimes", type=int, help="number of output times")
    common.add_argument("--threshold", type=int, help="blocks at least this large are sampled")
    common.add_argument("--samples", type=int, help="random vectors per sampled block")
    common.add_argument("--sw-samples", type=int, help="field samples for the SW reference")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--drop", type=float, help="discarded Hilbert-space fraction budget")
    common.add_argument(
        "--threads", type=int, default=None,
        help=f"worker threads (default: ${THREADS_ENV} or all cores)",
    )
    common.add_argument("--out", help="output file (default: stdout)")

    parser = argparse.ArgumentParser(prog="centralspin", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("reduce", parents=[common], help="moment-matched model reduction")
    p.add_argument("--save-couplings", help="write the full coupling list to this file")
    p.set_defaults(func=cmd_reduce)
    p = sub.add_parser("dynamics", parents=[common], help="correlation tensor as CSV")
    p.add_argument("--dry-run", action="store_true", help="report the workload and exit")
    p.set_defaults(func=cmd_dynamics)
    p = sub.add_parser("sw", parents=[common], help="Schulten-Wolynes reference as CSV")
    p.set_defaults(func=cmd_sw)
    p = sub.add_parser("compare", parents=[common], help="diagonal QM and SW curves side by side")
    p.add_argument("--dry-run", action="store_true", help="report the workload and exit")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ReductionFailed, OSError) as exc:
        print(f"centralspin {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
