"""Monte-Carlo recovery experiments over a grid of piecewise sparsities.

A run is fully determined by its JSON config.  Per-trial randomness comes
from :func:`derive_seed` keyed on ``(master seed, stream, grid index, trial
index)``, so the output does not depend on evaluation order.

Config schema (version 1)::

    {
      "schema_version": 1,
      "seed": 2024,
      "trials": 20,
      "dictionary": {"generator": "union_general", "m": 16, "N": 2,
                     "mixing": 0.3, "per_trial": true},
      "grid": {"ranges": [[0, 3], [1, 3]]},      # or {"patterns": [[1, 2], ...]}
      "solvers": ["omp", "bp"],
      "amplitude": {"lo": 0.5, "hi": 1.5},       # or {"fixed": 1.0}
      "tolerances": {"omp_residual": 1e-8, ...}
    }

``dictionary`` may instead be ``{"file": "A.csv", "widths": [8, 8]}`` or use
the ``union_orthogonal`` / ``identity_hadamard`` generators.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .coherence import coherence_profile
from .conditions import (
    ORTHO_TOL,
    SparsityPattern,
    cond4_orthogonal_erc,
    cond5_piecewise_uniqueness,
    cond6_piecewise_erc,
    bound_satisfied,
    erc_exact,
)
from .dictionary import BlockPartition, Dictionary, load_dictionary
from .errors import InputError, NumericalError
from .generators import (
    SignalSpec,
    derive_seed,
    identity_hadamard,
    piecewise_sparse_signal,
    union_general,
    union_orthogonal,
)
from .solvers import RecoveryProblem, basis_pursuit, l0_bruteforce, omp

SCHEMA_VERSION = 1
SOLVERS = ("omp", "bp", "l0")
DEFAULT_TOLERANCES = {
    "omp_residual": 1e-8,
    "bp_feasibility": 1e-8,
    "bp_optimality": 1e-7,
    "support_threshold": 1e-6,
    "fit": 1e-8,
    "success_rel_error": 1e-6,
}

_DICT_STREAM, _SIGNAL_STREAM = 0, 1


@dataclass
class ExperimentConfig:
    dictionary: dict
    trials: int
    patterns: list[tuple[int, ...]]
    solvers: list[str]
    seed: int
    amplitude: dict = field(default_factory=lambda: {"lo": 0.5, "hi": 1.5})
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    raw: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, cfg: dict, base_dir: str | Path | None = None) -> "ExperimentConfig":
        if not isinstance(cfg, dict):
            raise InputError("config must be a JSON object")
        version = cfg.get("schema_version")
        if version != SCHEMA_VERSION:
            raise InputError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
        trials = cfg.get("trials")
        if not isinstance(trials, int) or trials < 1:
            raise InputError(f"trials must be a positive integer, got {trials!r}")
        seed = cfg.get("seed")
        if not isinstance(seed, int) or seed < 0:
            raise InputError(f"seed must be a non-negative integer, got {seed!r}")
        dictionary = cfg.get("dictionary")
        if not isinstance(dictionary, dict):
            raise InputError("config needs a 'dictionary' object")
        grid = cfg.get("grid")
        if not isinstance(grid, dict):
            raise InputError("config needs a 'grid' object")
        if "patterns" in grid:
            patterns = [tuple(int(v) for v in p) for p in grid["patterns"]]
        elif "ranges" in grid:
            try:
                axes = [range(int(lo), int(hi) + 1) for lo, hi in grid["ranges"]]
            except (TypeError, ValueError):
                raise InputError("grid ranges must be [lo, hi] pairs") from None
            patterns = [tuple(p) for p in itertools.product(*axes)]
        else:
            raise InputError("grid needs 'patterns' or 'ranges'")
        if not patterns:
            raise InputError("sparsity grid is empty")
        solvers = list(cfg.get("solvers", ["omp", "bp"]))
        bad = [s for s in solvers if s not in SOLVERS]
        if bad or not solvers:
            raise InputError(f"solvers must be a non-empty subset of {SOLVERS}, got {solvers}")
        amplitude = dict(cfg.get("amplitude", {"lo": 0.5, "hi": 1.5}))
        tolerances = dict(DEFAULT_TOLERANCES)
        for key, val in cfg.get("tolerances", {}).items():
            if key not in DEFAULT_TOLERANCES:
                raise InputError(f"unknown tolerance {key!r}")
            if not isinstance(val, (int, float)) or val <= 0:
                raise InputError(f"tolerance {key} must be positive, got {val!r}")
            tolerances[key] = float(val)
        out = cls(
            dictionary=dictionary,
            trials=trials,
            patterns=patterns,
            solvers=solvers,
            seed=seed,
            amplitude=amplitude,
            tolerances=tolerances,
            raw=cfg,
            base_dir=Path(base_dir) if base_dir is not None else Path.cwd(),
        )
        out._validate_shapes()
        return out

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(cfg, Path(path).parent)

    def partition(self) -> BlockPartition:
        spec = self.dictionary
        if "file" in spec:
            return BlockPartition(tuple(spec["widths"]))
        gen = spec.get("generator")
        if gen == "identity_hadamard":
            return BlockPartition((int(spec["m"]),) * 2)
        if gen in ("union_orthogonal", "union_general"):
            widths = spec.get("widths") or [int(spec["m"])] * int(spec["N"])
            return BlockPartition(tuple(widths))
        raise InputError(f"unknown dictionary generator {gen!r}")

    def _validate_shapes(self) -> None:
        try:
            part = self.partition()
        except KeyError as exc:
            raise InputError(f"dictionary spec is missing {exc}") from None
        for p in self.patterns:
            SparsityPattern(p).check_against(part)
        amp = self.amplitude
        if "fixed" in amp:
            if amp["fixed"] <= 0:
                raise InputError("fixed amplitude must be positive")
        elif not 0 < amp.get("lo", 0) <= amp.get("hi", 0):
            raise InputError(f"amplitude needs 0 < lo <= hi, got {amp}")

    def build_dictionary(self, seed: int) -> Dictionary:
        spec = self.dictionary
        if "file" in spec:
            path = Path(spec["file"])
            if not path.is_absolute():
                path = self.base_dir / path
            return load_dictionary(path, self.partition(), bool(spec.get("normalize", False)))
        gen = spec["generator"]
        if gen == "identity_hadamard":
            return identity_hadamard(int(spec["m"]))
        if gen == "union_orthogonal":
            return union_orthogonal(int(spec["m"]), int(spec["N"]), seed)
        return union_general(int(spec["m"]), int(spec["N"]), float(spec.get("mixing", 0.5)), seed, spec.get("widths"))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_experiment(config: ExperimentConfig) -> tuple[list[str], list[list]]:
    """Run every grid point and return ``(header, rows)``."""
    tol = config.tolerances
    per_trial = bool(config.dictionary.get("per_trial", False))
    fixed = None if per_trial else config.build_dictionary(derive_seed(config.seed, _DICT_STREAM))
    n_blocks = config.partition().n_blocks
    header = [f"s{i + 1}" for i in range(n_blocks)] + ["trials"]
    header += [f"{s}_success" for s in config.solvers]
    header += ["mu_mean", "alpha_max_mean", "erc_rate", "cond4_rate", "cond5_rate", "cond6_rate"]
    rows = []
    for g, pattern in enumerate(config.patterns):
        successes = {s: 0 for s in config.solvers}
        counts = {"erc": 0, "cond4": 0, "cond5": 0, "cond6": 0}
        mu_sum = alpha_sum = 0.0
        for t in range(config.trials):
            d = fixed if fixed is not None else config.build_dictionary(derive_seed(config.seed, _DICT_STREAM, g, t))
            prof = coherence_profile(d)
            mu_sum += prof.mu
            alpha_sum += prof.alpha_max
            spec = SignalSpec(
                d.partition,
                SparsityPattern(pattern),
                lo=float(config.amplitude.get("lo", 0.5)),
                hi=float(config.amplitude.get("hi", 1.5)),
                fixed=config.amplitude.get("fixed"),
                seed=derive_seed(config.seed, _SIGNAL_STREAM, g, t),
            )
            x, support = piecewise_sparse_signal(spec)
            total = sum(pattern)
            if n_blocks >= 2:
                orthogonal = max(prof.block_mu) <= ORTHO_TOL
                counts["cond4"] += int(orthogonal and cond4_orthogonal_erc(prof.mu, pattern).satisfied)
                bound5 = cond5_piecewise_uniqueness(prof.mu, prof.alpha_max, n_blocks)
                counts["cond5"] += int(bound_satisfied("cond5", total, bound5, prof.mu, prof.alpha_max, n_blocks))
                counts["cond6"] += int(cond6_piecewise_erc(prof.mu, prof.alpha, pattern).satisfied)
            try:
                counts["erc"] += int(erc_exact(d, support).holds)
            except NumericalError:
                pass
            problem = RecoveryProblem(d, d.matrix @ x)
            for name in config.solvers:
                successes[name] += int(_solve_ok(name, problem, x, support, tol))
        row = list(pattern) + [config.trials]
        row += [successes[s] / config.trials for s in config.solvers]
        row += [mu_sum / config.trials, alpha_sum / config.trials]
        row += [counts[k] / config.trials for k in ("erc", "cond4", "cond5", "cond6")]
        rows.append(row)
    return header, rows


def _solve_ok(name, problem, x, support, tol) -> bool:
    try:
        if name == "omp":
            res = omp(problem, residual_tol=tol["omp_residual"])
        elif name == "bp":
            res = basis_pursuit(
                problem,
                feasibility=tol["bp_feasibility"],
                optimality=tol["bp_optimality"],
                support_threshold=tol["support_threshold"],
            )
        else:
            res = l0_bruteforce(problem, len(support.support), tol["fit"])
            if res is None:
                return False
    except NumericalError:
        return False
    err = float(np.linalg.norm(res.x - x))
    return res.support.support == support.support and err <= tol["success_rel_error"] * float(np.linalg.norm(x))


def format_csv(header, rows) -> str:
    lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def provenance(config: ExperimentConfig) -> dict:
    return {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "kernel_backend": kernels.BACKEND,
        "config": config.raw,
        "resolved": {
            "patterns": [list(p) for p in config.patterns],
            "tolerances": config.tolerances,
            "solvers": config.solvers,
        },
    }


def write_experiment(config: ExperimentConfig, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header, rows = run_experiment(config)
    csv_path = out / "experiment.csv"
    csv_path.write_text(format_csv(header, rows), encoding="utf-8")
    prov_path = out / "provenance.json"
    prov_path.write_text(json.dumps(provenance(config), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, prov_path
