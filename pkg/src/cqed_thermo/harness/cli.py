"""Command-line entry point: ``cqed-thermo <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .. import kernels
from ..analysis import (count_modes, detailed_ft_points, efficacy, efficacy_regression,
                        entropy_histogram, entropy_samples, fraction_near, tpm_reference)
from ..protocol import ProtocolParams
from .config import ConfigError, RunConfig, parse_config
from .ensemble import (TrajectoryFailure, derive_seed, ensemble_summary, provenance,
                       resolve_threads, simulate)
from .io import write_outputs

log = logging.getLogger("cqed_thermo")


def _threads(value: str):
    if value == "auto":
        return value
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {value!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return n


def _seed(value: str) -> int:
    n = int(value)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


def _float_list(value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat JSON run configuration")
    p.add_argument("--seed", type=_seed, help="master seed (overrides config)")
    p.add_argument("--trajectories", type=int, help="ensemble size (overrides config)")
    p.add_argument("--out-dir", help="output directory (overrides config)")
    p.add_argument("--threads", type=_threads, default=1, help="worker threads or 'auto'")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqed-thermo",
                                     description="Monitored-qubit quench thermodynamics")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("simulate", help="forward ensemble"))
    _common(sub.add_parser("ft-check", help="detailed fluctuation theorem points and fit"))
    h = sub.add_parser("histogram", help="entropy-production histogram at one time")
    _common(h)
    h.add_argument("--nbar", type=float, required=True)
    h.add_argument("--time", type=float, required=True, help="time in us")
    h.add_argument("--bins", type=int, default=40)
    e = sub.add_parser("efficacy-sweep", help="efficacy versus relaxation rate")
    _common(e)
    e.add_argument("--gamma1-over-kappa", type=_float_list, required=True,
                   help="comma-separated list, e.g. 0,0.02,0.04")
    _common(sub.add_parser("tpm", help="two-point-measurement reference"))
    return parser


def load_config(args, **overrides) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    return cfg.with_overrides(master_seed=args.seed, trajectories=args.trajectories,
                              output_dir=args.out_dir, **overrides)


def cmd_simulate(cfg, args):
    records = simulate(cfg, args.threads)
    return records, {"summary": ensemble_summary(records)}


def cmd_ft_check(cfg, args):
    if cfg.gamma1 != 0 or cfg.integrator != "povm":
        raise ConfigError("gamma1_over_kappa",
                          "ft-check needs gamma1 = 0 and the povm integrator")
    records = simulate(cfg, args.threads)
    delta_f = records[0].delta_f
    ft = detailed_ft_points(records, cfg.beta, delta_f)
    rows = [(pt.delta_u, pt.log_ratio, pt.n, pt.m) for pt in ft.points]
    summary = {
        "beta": cfg.beta, "delta_f": delta_f,
        "slope": ft.fit.slope, "intercept": ft.fit.intercept,
        "slope_stderr": ft.fit.slope_stderr,
        "slope_relative_error": abs(ft.fit.slope - cfg.beta) / cfg.beta,
        "max_residual": ft.max_residual,
        "binned_log_ratio": [[k, v] for k, v in sorted(ft.binned.items())],
    }
    tables = {"ft_points.csv": (("delta_u", "log_ratio", "n", "m"), rows)}
    return None, {"tables": tables, "summary": summary}


def cmd_histogram(cfg, args):
    records = simulate(cfg, args.threads)
    hist = entropy_histogram(records, args.time, bins=args.bins)
    values = entropy_samples(records, args.time)
    p = ProtocolParams.from_mhz(cfg.omega0_mhz, cfg.delta_omega_mhz, cfg.omega_rabi_mhz,
                                cfg.tau_us, cfg.quench_time_us)
    peaks = np.sort(tpm_reference(p, cfg.beta).sigma_values.ravel())
    rows = [(hist.edges[i], hist.edges[i + 1], hist.counts[i]) for i in range(len(hist.counts))]
    summary = {
        "time_us": args.time, "nbar": cfg.nbar, "samples": hist.total,
        "cluster_centers": hist.cluster_centers,
        "tpm_sigma_values": peaks,
        "fraction_near_tpm_values": fraction_near(values, peaks),
        "modes": count_modes(values),
        "fraction_positive": float(np.mean(values > 0)),
        "mean_sigma": float(values.mean()),
    }
    tables = {"histogram.csv": (("bin_lo", "bin_hi", "count"), rows)}
    return None, {"tables": tables, "summary": summary}


def cmd_efficacy_sweep(cfg, args):
    ratios = args.gamma1_over_kappa
    if len(ratios) < 3:
        raise ConfigError("gamma1_over_kappa", "sweep needs at least three values")
    sweep = []
    for j, r in enumerate(ratios):
        point = cfg.with_overrides(gamma1_over_kappa=r,
                                   master_seed=derive_seed(cfg.master_seed, j))
        log.info("sweep point %d: gamma1/kappa = %g", j, r)
        sweep.append((r, efficacy(simulate(point, args.threads))))
    reg = efficacy_regression(sweep)
    rows = [(r, e.mean, e.stderr) for r, e in sweep]
    summary = {"intercept": reg.intercept, "slope": reg.slope,
               "slope_stderr": reg.slope_stderr, "p_value": reg.p_value,
               "residual_std": reg.residual_std, "points": len(sweep)}
    tables = {"efficacy_sweep.csv": (("gamma1_over_kappa", "efficacy", "stderr"), rows)}
    return None, {"tables": tables, "summary": summary}


def cmd_tpm(cfg, args):
    p = ProtocolParams.from_mhz(cfg.omega0_mhz, cfg.delta_omega_mhz, cfg.omega_rabi_mhz,
                                cfg.tau_us, cfg.quench_time_us)
    t = tpm_reference(p, cfg.beta)
    res = t.crooks_residual
    rows = [(n, m, t.prob[m, n], t.work[m, n], res[m, n]) for n in range(2) for m in range(2)]
    summary = {"beta": cfg.beta, "delta_f": t.delta_f, "jarzynski_sum": t.jarzynski_sum,
               "max_crooks_residual": float(np.max(np.abs(res))),
               "sigma_values": t.sigma_values}
    tables = {"tpm.csv": (("n", "m", "prob", "work", "crooks_residual"), rows)}
    return None, {"tables": tables, "summary": summary}


COMMANDS = {"simulate": cmd_simulate, "ft-check": cmd_ft_check, "histogram": cmd_histogram,
            "efficacy-sweep": cmd_efficacy_sweep, "tpm": cmd_tpm}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        extra = {"nbar": args.nbar} if args.command == "histogram" else {}
        cfg = load_config(args, **extra)
        resolve_threads(args.threads)
        records, analyses = COMMANDS[args.command](cfg, args)
        bundle = write_outputs(records, analyses, cfg.output_dir,
                               {"command": args.command, **provenance(cfg, kernels.BACKEND)})
    except (ConfigError, FileNotFoundError, TrajectoryFailure, ValueError, OSError) as exc:
        print(f"cqed-thermo: error: {exc}", file=sys.stderr)
        return 2
    for path in bundle.files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
