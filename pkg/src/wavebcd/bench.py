"""Benchmark harness: instance suites, lambda search, multi-method runs, profiles.

Config files are flat ``key = value`` text, ``#`` starts a comment and
unknown keys are rejected.  Keys and defaults:

=================  ===============================  ==========================================
key                default                          meaning
=================  ===============================  ==========================================
instances          20                               number of test instances
images             synthetic                        ``synthetic`` or a directory of PGM/PPM/PNG
crop               128                              crop side (power of two)
levels             4                                wavelet levels J
wavelet            db8                              ``haar``, ``dbN``
blur_min/max       1 / 15                           blur std range (uniform)
noise_min/max      0.001 / 0.1                      noise std range (log-uniform)
methods            fb,stoc,mlfb,gs,magic            policies to run
iterations         200                              iterations per run
budget_iters       = iterations                     default profile budget (iterations)
budget_s           unset                            default profile budget (seconds)
lambda             grid                             a number, or ``grid``
lambda_grid        10 values, 1e-4..1e-1 log        candidate weights for the grid search
grid_iters         50                               FB iterations per grid point
reference_factor   10                               reference run length / iterations
stoc_p             0.5                              activation probability of ``stoc``
step_factor        1.9                              gamma * ||A||^2
seed               0                                master seed
workers            1                                parallel instance workers
=================  ===============================  ==========================================

Output layout::

    bench.json                 resolved config
    instances.csv              one record per instance
    grid.csv                   lambda search results (grid mode)
    traces/instNNNN_<m>.csv    per-run trace, with .json summary alongside
    heatmap_<m>.csv            activation frequencies averaged over instances
    profile.csv                performance profile at the default budget
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, fields
import json
import logging
import math
from pathlib import Path

import numpy as np

from .degradation import DegradationSpec, degrade, make_blur
from .errors import ConfigurationError, DataError
from .imageio import crop_square_pow2, read_image
from .metrics import GAP_FLOOR, activation_heatmap, performance_profile, psnr
from .problem import build_problem
from .records import (
    fmt,
    load_run,
    write_heatmap_csv,
    write_profile_csv,
    write_summary,
    write_trace_csv,
)
from .selection import POLICY_NAMES, policy_from_name
from .solver import SolverConfig, run
from .synthetic import piecewise_smooth
from .wavelet import BlockLayout, parse_wavelet

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".pgm", ".ppm", ".pnm", ".png", ".pfm")
DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-4, -1, 10))


@dataclass
class BenchConfig:
    instances: int = 20
    images: str = "synthetic"
    crop: int = 128
    levels: int = 4
    wavelet: str = "db8"
    blur_min: float = 1.0
    blur_max: float = 15.0
    noise_min: float = 1e-3
    noise_max: float = 1e-1
    methods: tuple = POLICY_NAMES
    iterations: int = 200
    budget_iters: int = None
    budget_s: float = None
    lam: object = "grid"
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    grid_iters: int = 50
    reference_factor: int = 10
    stoc_p: float = 0.5
    step_factor: float = 1.9
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.instances < 1:
            raise ConfigurationError("instances must be >= 1")
        BlockLayout(self.crop, self.levels)
        parse_wavelet(self.wavelet)
        if not 0 < self.blur_min <= self.blur_max:
            raise ConfigurationError("need 0 < blur_min <= blur_max")
        if not 0 < self.noise_min <= self.noise_max:
            raise ConfigurationError("need 0 < noise_min <= noise_max")
        if not self.methods:
            raise ConfigurationError("methods list is empty")
        for m in self.methods:
            policy_from_name(m)
        if len(set(self.methods)) != len(self.methods):
            raise ConfigurationError("methods list has duplicates")
        if self.iterations < 1 or self.grid_iters < 1 or self.reference_factor < 1:
            raise ConfigurationError("iteration counts must be >= 1")
        if self.lam != "grid" and not (isinstance(self.lam, (int, float)) and self.lam >= 0):
            raise ConfigurationError(f"lambda must be 'grid' or a nonnegative number, got {self.lam!r}")
        if not self.lambda_grid or any(v < 0 for v in self.lambda_grid):
            raise ConfigurationError("lambda_grid must hold nonnegative values")
        if not 0 <= self.stoc_p <= 1:
            raise ConfigurationError("stoc_p must lie in [0, 1]")
        if not 0 < self.step_factor < 2:
            raise ConfigurationError("step_factor must lie in (0, 2)")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if not 0 <= self.seed < 2**32:
            raise ConfigurationError("seed must lie in [0, 2**32)")

    @property
    def default_budget_iters(self):
        return self.iterations if self.budget_iters is None else self.budget_iters

    def to_json(self):
        d = asdict(self)
        d["methods"] = list(self.methods)
        d["lambda_grid"] = list(self.lambda_grid)
        return d


_KEY_ALIASES = {"lambda": "lam"}


def _convert(name, text):
    kind = {f.name: f.type for f in fields(BenchConfig)}[name]
    try:
        if name in ("methods",):
            return tuple(v.strip().lower() for v in text.split(",") if v.strip())
        if name == "lambda_grid":
            return tuple(float(v) for v in text.split(",") if v.strip())
        if name == "lam":
            return "grid" if text.strip().lower() == "grid" else float(text)
        if name == "images":
            return text.strip()
        if kind is int or name in ("budget_iters",):
            return int(text)
        if kind is float or name in ("budget_s",):
            return float(text)
        return text.strip()
    except ValueError:
        raise ConfigurationError(f"bad value for {name!r}: {text!r}") from None


def parse_config_text(text):
    values = {}
    known = {f.name for f in fields(BenchConfig)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        name = _KEY_ALIASES.get(key, key)
        if name not in known or key == "lam":
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if name in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        values[name] = _convert(name, value)
    return BenchConfig(**values)


def load_config(path):
    """Parse a config file; a relative ``images`` directory is taken relative to it."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    config = parse_config_text(text)
    if config.images != "synthetic" and not Path(config.images).is_absolute():
        config.images = str(path.parent / config.images)
    return config


def instance_seed(master_seed, instance_id):
    """Injective in ``instance_id`` for a fixed master seed."""
    if not 0 <= instance_id < 2**32:
        raise ConfigurationError(f"instance id out of range: {instance_id}")
    return (int(master_seed) << 32) | int(instance_id)


def list_images(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"image directory {directory} does not exist")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise DataError(f"no images ({', '.join(IMAGE_SUFFIXES)}) in {directory}")
    return files


@dataclass
class InstanceSpec:
    instance: int
    source: str
    sigma_blur: float
    sigma_noise: float
    seed: int


def draw_instance(config, instance_id, image_files=None):
    """Sample degradation levels and the ground-truth crop of one instance."""
    seed = instance_seed(config.seed, instance_id)
    params_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.Generator(np.random.PCG64(params_ss))
    sigma_blur = float(rng.uniform(config.blur_min, config.blur_max))
    sigma_noise = float(math.exp(rng.uniform(math.log(config.noise_min), math.log(config.noise_max))))
    if image_files is None:
        truth = piecewise_smooth(config.crop, rng)
        source = f"synthetic-{instance_id}"
    else:
        path = image_files[instance_id % len(image_files)]
        full = read_image(path)
        h, w = full.shape
        if min(h, w) < config.crop:
            raise DataError(f"{path} is smaller than the crop side {config.crop}")
        r = int(rng.integers(0, h - config.crop + 1))
        c = int(rng.integers(0, w - config.crop + 1))
        truth = crop_square_pow2(full, config.crop, (r, c))
        source = f"{path.name}@{r},{c}"
    spec = InstanceSpec(instance_id, source, sigma_blur, sigma_noise, seed)
    noise_rng = np.random.Generator(np.random.PCG64(noise_ss))
    y = degrade(truth, DegradationSpec(sigma_blur, sigma_noise, seed, check_ranges=False), rng=noise_rng)
    return spec, truth, y


def grid_search_lambda(problem, grid, iterations):
    """PSNR of an FB run per grid value; returns ``(best_lambda, [(lam, psnr), ...])``.

    Ties keep the first grid value.
    """
    bank = problem.bank
    results = []
    for lam in grid:
        trace = run(problem.with_lambda(lam), SolverConfig(policy_from_name("fb"), iterations))
        results.append((float(lam), psnr(problem.truth, trace.reconstruction(bank))))
    best = max(range(len(results)), key=lambda j: (results[j][1], -j))
    return results[best][0], results


def run_seed(seed, method_index):
    return [int(seed), method_index + 1]


def trace_name(instance_id, method):
    return f"inst{instance_id:04d}_{method}"


def solve_instance(config, instance_id, out_dir, image_files=None):
    """Everything for one instance; writes its traces and returns its record."""
    out_dir = Path(out_dir)
    spec, truth, y = draw_instance(config, instance_id, image_files)
    bank = parse_wavelet(config.wavelet)
    blur = make_blur(spec.sigma_blur, config.crop)
    base = build_problem(y, blur, config.levels, bank, 0.0, config.step_factor, truth=truth)
    grid_rows = []
    if config.lam == "grid":
        lam, grid_rows = grid_search_lambda(base, config.lambda_grid, config.grid_iters)
    else:
        lam = config.lam
    problem = base.with_lambda(lam)
    record = asdict(spec)
    record["lambda"] = lam
    best = math.inf
    for idx, method in enumerate(config.methods):
        params = {"p": config.stoc_p} if method == "stoc" else {}
        cfg = SolverConfig(policy_from_name(method, **params), config.iterations, seed=run_seed(spec.seed, idx))
        trace = run(problem, cfg)
        quality = psnr(truth, trace.reconstruction(bank))
        stem = out_dir / "traces" / trace_name(instance_id, method)
        write_trace_csv(stem.with_suffix(".csv"), trace)
        write_summary(stem.with_suffix(".json"), trace, quality, {"instance": instance_id, "lambda": lam})
        record[f"final_{method}"] = trace.final_objective
        record[f"psnr_{method}"] = quality
        best = min(best, trace.initial_objective, float(trace.objectives.min()))
    ref_cfg = SolverConfig(policy_from_name("fb"), config.iterations * config.reference_factor)
    ref = run(problem, ref_cfg)
    record["reference_objective"] = min(best, float(ref.objectives.min()))
    record["initial_objective"] = ref.initial_objective
    logger.info("instance %d done (lambda=%g)", instance_id, lam)
    return record, [(instance_id, lam_, q) for lam_, q in grid_rows]


def _solve_instance_star(args):
    return solve_instance(*args)


def instance_columns(methods):
    cols = ["instance", "source", "sigma_blur", "sigma_noise", "seed", "lambda", "initial_objective", "reference_objective"]
    for m in methods:
        cols += [f"final_{m}", f"psnr_{m}"]
    return cols


def write_instances_csv(path, records, methods):
    cols = instance_columns(methods)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for rec in records:
            writer.writerow([fmt(rec[c]) for c in cols])


def read_instances_csv(path):
    try:
        fh = open(path, newline="")
    except OSError:
        raise DataError(f"missing instance records {path}") from None
    with fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: no instance records")
    return rows


def run_bench(config, out_dir):
    """Run the whole suite and write all outputs; returns the instance records."""
    out_dir = Path(out_dir)
    image_files = None if config.images == "synthetic" else list_images(config.images)
    (out_dir / "traces").mkdir(parents=True, exist_ok=True)
    (out_dir / "bench.json").write_text(json.dumps(config.to_json(), indent=2, sort_keys=True) + "\n")
    jobs = [(config, i, out_dir, image_files) for i in range(config.instances)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_solve_instance_star, jobs))
    else:
        results = [solve_instance(*job) for job in jobs]
    results.sort(key=lambda r: r[0]["instance"])
    records = [r[0] for r in results]
    write_instances_csv(out_dir / "instances.csv", records, config.methods)
    if config.lam == "grid":
        with open(out_dir / "grid.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["instance", "lambda", "psnr"])
            for _, rows in results:
                for inst, lam, q in rows:
                    writer.writerow([inst, fmt(lam), fmt(q)])
    for method in config.methods:
        traces = [load_run(out_dir / "traces" / f"{trace_name(r['instance'], method)}.csv") for r in records]
        write_heatmap_csv(out_dir / f"heatmap_{method}.csv", activation_heatmap(traces))
    profile_bench(out_dir, budget_iters=config.default_budget_iters if config.budget_s is None else None,
                  budget_s=config.budget_s, out_path=out_dir / "profile.csv")
    return records


def read_bench_json(bench_dir):
    path = Path(bench_dir) / "bench.json"
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        raise DataError(f"{path} missing or unreadable") from None


def bench_scores(bench_dir, budget_iters=None, budget_s=None, scoring="gap"):
    """Per-method per-instance scores read back from a bench directory.

    ``gap`` scoring: ``phi_m(T) - phi_ref + 1e-12``; ``raw``: ``phi_m(T)``.
    ``T`` is an iteration count or a solver-time budget in seconds
    (objective-evaluation time excluded).
    """
    bench_dir = Path(bench_dir)
    if scoring not in ("gap", "raw"):
        raise ConfigurationError(f"scoring must be 'gap' or 'raw', got {scoring!r}")
    if (budget_iters is None) == (budget_s is None):
        raise ConfigurationError("give exactly one of budget_iters and budget_s")
    cfg = read_bench_json(bench_dir)
    records = read_instances_csv(bench_dir / "instances.csv")
    methods = cfg["methods"]
    missing = [
        str(bench_dir / "traces" / f"{trace_name(int(r['instance']), m)}{ext}")
        for r in records for m in methods for ext in (".csv", ".json")
        if not (bench_dir / "traces" / f"{trace_name(int(r['instance']), m)}{ext}").exists()
    ]
    if missing:
        raise DataError("incomplete bench data, missing: " + ", ".join(missing))
    scores = {m: [] for m in methods}
    for r in records:
        ref = float(r["reference_objective"])
        for m in methods:
            trace = load_run(bench_dir / "traces" / f"{trace_name(int(r['instance']), m)}.csv")
            value = trace.objective_at(budget_iters) if budget_s is None else trace.objective_at_time(budget_s)
            scores[m].append(value - ref + GAP_FLOOR if scoring == "gap" else value)
    return {m: np.array(v) for m, v in scores.items()}


def profile_bench(bench_dir, budget_iters=None, budget_s=None, scoring="gap", out_path=None, betas=None):
    scores = bench_scores(bench_dir, budget_iters, budget_s, scoring)
    curves = performance_profile(scores, betas)
    write_profile_csv(Path(out_path) if out_path else Path(bench_dir) / "profile.csv", curves)
    return curves
