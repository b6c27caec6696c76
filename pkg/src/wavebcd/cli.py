"""Command-line entry point: ``wavebcd {degrade,solve,bench,profile}``.

Exit codes: 0 success, 1 user error, 2 data error, 3 numerical error.
"""

import argparse
import json
import logging
from pathlib import Path
import sys

from . import bench
from .degradation import DegradationSpec, degrade, make_blur
from .errors import ConfigurationError, DataError, WaveBCDError
from .imageio import crop_square_pow2, read_image, write_pfm, write_pgm
from .metrics import psnr
from .problem import build_problem
from .records import write_summary, write_trace_csv
from .selection import POLICY_NAMES, policy_from_name
from .solver import SolverConfig, run
from .wavelet import parse_wavelet

logger = logging.getLogger("wavebcd")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _load_square(path):
    img = read_image(path)
    side = 1 << (min(img.shape).bit_length() - 1)
    if img.shape != (side, side):
        logger.warning("cropping %s from %s to %dx%d (top-left)", path, img.shape, side, side)
        img = crop_square_pow2(img, side)
    return img


def _sidecar(path):
    return Path(str(path) + ".json")


def cmd_degrade(args):
    truth = _load_square(args.input)
    spec = DegradationSpec(args.sigma_blur, args.sigma_noise, args.seed)
    y = degrade(truth, spec)
    out = Path(args.out)
    write_pfm(out, y)
    meta = {
        "source": str(args.input),
        "side": truth.shape[0],
        "sigma_blur": spec.sigma_blur,
        "sigma_noise": spec.sigma_noise,
        "seed": spec.seed,
        "noise_generator": "numpy PCG64",
        "format": "pfm",
    }
    _sidecar(out).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_solve(args):
    y = _load_square(args.observation)
    sigma_blur = args.sigma_blur
    if sigma_blur is None:
        side = _sidecar(args.observation)
        if not side.exists():
            raise ConfigurationError(f"no --sigma-blur given and no sidecar {side}")
        try:
            sigma_blur = float(json.loads(side.read_text())["sigma_blur"])
        except (KeyError, ValueError, json.JSONDecodeError):
            raise DataError(f"{side}: no usable sigma_blur entry") from None
    truth = _load_square(args.truth) if args.truth else None
    if truth is not None and truth.shape != y.shape:
        raise DataError(f"truth shape {truth.shape} differs from observation {y.shape}")
    bank = parse_wavelet(args.wavelet)
    policy = policy_from_name(args.method, **({"p": args.p} if args.method == "stoc" else {}))
    problem = build_problem(y, make_blur(sigma_blur, y.shape[0]), args.levels, bank, args.lam, args.step_factor, truth=truth)
    trace = run(problem, SolverConfig(policy, args.iters, seed=args.seed))
    x_hat = trace.reconstruction(bank)
    quality = psnr(truth, x_hat) if truth is not None else None
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(f"{prefix}.csv", trace)
    write_summary(
        f"{prefix}.json", trace, quality,
        {"lambda": args.lam, "sigma_blur": sigma_blur, "levels": args.levels, "wavelet": bank.name,
         "stepsize": problem.stepsize, "operator_norm_sq": problem.lipschitz},
    )
    write_pfm(f"{prefix}.pfm", x_hat)
    write_pgm(f"{prefix}.pgm", x_hat, bits=16)
    print(f"{policy.name}: objective {trace.final_objective:.6g}"
          + (f", PSNR {quality:.2f} dB" if quality is not None else ""))
    return 0


def cmd_bench(args):
    if not args.config:
        raise ConfigurationError("bench needs --config")
    config = bench.load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.validate()
    bench.run_bench(config, args.out)
    return 0


def cmd_profile(args):
    if args.budget_s is None and args.budget_iters is None:
        cfg = bench.read_bench_json(args.bench_dir)
        args.budget_s = cfg.get("budget_s")
        if args.budget_s is None:
            args.budget_iters = cfg.get("budget_iters") or cfg["iterations"]
    curves = bench.profile_bench(
        args.bench_dir, args.budget_iters, args.budget_s, args.scoring,
        out_path=args.out or Path(args.bench_dir) / "profile.csv",
    )
    for name, curve in curves.items():
        print(f"{name:>6}: rho(1) = {curve.rho_at(1.0):.2f}, rho(2) = {curve.rho_at(2.0):.2f}")
    return 0


def build_parser():
    parser = _Parser(prog="wavebcd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("degrade", help="blur and add noise to an image")
    p.add_argument("input")
    p.add_argument("--sigma-blur", type=float, required=True)
    p.add_argument("--sigma-noise", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output PFM path (metadata goes to OUT.json)")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("solve", help="deblur one observation")
    p.add_argument("observation")
    p.add_argument("--truth")
    p.add_argument("--method", default="magic", help="one of " + ", ".join(POLICY_NAMES))
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-blur", type=float, help="defaults to the observation's sidecar")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--wavelet", default="db8")
    p.add_argument("--step-factor", type=float, default=1.9)
    p.add_argument("--p", type=float, default=0.5, help="activation probability for stoc")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("profile", help="performance profile of a bench directory")
    p.add_argument("bench_dir")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--budget-iters", type=int)
    group.add_argument("--budget-s", type=float)
    p.add_argument("--scoring", choices=("gap", "raw"), default="gap")
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except WaveBCDError as exc:
        print(f"wavebcd: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
