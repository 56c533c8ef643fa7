"""Experiment protocols: cut strengths, random objectives, MIMO detection and
angular synchronization.

Every trial draws from its own generator ``default_rng([seed, ...ids])`` so
results do not depend on the order in which trials run.  Per-trial rows are
deterministic given the seed and go to CSV; timings only enter the JSON
summary.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .conic import Settings
from .cuts import h_matrix, strength, triangle_facets_cut33
from .lifting import lifted_max, nested_cp_bases
from .linalg import INF, hermitian, is_infinite, psd_factor
from .relax import FeasibleSet, Kind, solve_relaxation

RANK_TOL = 1e-5
ROUNDING_TRIALS = 100

EXPERIMENTS = ("strength-table", "random-obj", "mimo", "angsync")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    n: int | None = None
    m: list = field(default_factory=list)
    sigma: list = field(default_factory=list)
    p: list = field(default_factory=list)
    trials: int = 1
    rank_tol: float = RANK_TOL
    rounding_trials: int = ROUNDING_TRIALS
    channel_rows: int | None = None
    feas_tol: float = 1e-8
    output: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        self.m = [self.m] if isinstance(self.m, (int, float)) else list(self.m)
        self.sigma = [self.sigma] if isinstance(self.sigma, (int, float)) else list(self.sigma)
        self.p = [self.p] if isinstance(self.p, (int, float)) else list(self.p)
        defaults = {
            "strength-table": dict(m=list(range(2, 10))),
            "random-obj": dict(n=20, m=[3, 4], trials=25),
            "mimo": dict(n=30, m=[3, 4], sigma=[1.0]),
            # sigma is given in units of sqrt(n) for angular synchronization.
            "angsync": dict(n=10, sigma=[2 / 3, 1.0, 4 / 3], p=[0.0, 0.25, 0.5, 0.75, 1.0]),
        }[self.experiment]
        for key, val in defaults.items():
            if key == "trials":
                continue
            if getattr(self, key) in (None, []):
                setattr(self, key, val)
        if self.experiment == "mimo" and self.channel_rows is None:
            self.channel_rows = self.n + 10

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls(**json.loads(Path(path).read_text()))

    def settings(self) -> Settings:
        return Settings(feas_tol=self.feas_tol, gap_tol=self.feas_tol)


@dataclass
class RunReport:
    rows: list
    summary: dict

    def write(self, stem) -> tuple[Path, Path]:
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        csv_path = stem.with_suffix(".csv")
        json_path = stem.with_suffix(".json")
        write_csv(csv_path, self.rows)
        json_path.write_text(json.dumps(self.summary, indent=2, default=float))
        return csv_path, json_path


def write_csv(path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian: real and imaginary parts with variance 1/2."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def second_eigenvalue(x) -> float:
    w = np.linalg.eigvalsh(hermitian(x, tol=1e-7))
    return float(w[-2]) if w.size > 1 else 0.0


def is_rank_one(x, tol: float = RANK_TOL) -> bool:
    return second_eigenvalue(x) < tol


def snap(z: np.ndarray, m) -> np.ndarray:
    """Project each entry onto the nearest m-th root of unity (unit circle for m = inf)."""
    z = np.asarray(z, dtype=complex)
    if is_infinite(m):
        mag = np.abs(z)
        return np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0)
    k = np.round(np.angle(z) * m / (2 * math.pi)).astype(np.int64) % m
    return np.exp(2j * math.pi * k / m)


def round_to_rank1(x, c, m, trials: int = ROUNDING_TRIALS,
                   rng: np.random.Generator | None = None) -> tuple[np.ndarray, float]:
    """Randomized rounding of a relaxation solution to a phase vector.

    Candidates are the snapped top eigenvector and ``trials`` snapped Gaussian
    projections ``V* g`` of a factor ``X = V* V``.  Returns the best candidate
    and its value ``x* C x``.
    """
    x = hermitian(x, tol=1e-7)
    c = hermitian(c)
    w, u = np.linalg.eigh(x)
    cands = [snap(u[:, -1], m)]
    if trials:
        rng = rng or np.random.default_rng(0)
        v = psd_factor(0.5 * (x + x.conj().T) - min(0.0, float(w[0])) * np.eye(x.shape[0]), tol=1e-10)
        g = complex_gaussian(rng, (trials, v.shape[0]))
        # Row k of g @ conj(V) is (V* g_k)^T.
        cands.extend(snap(g @ v.conj(), m))
    cands = np.array(cands)
    vals = np.einsum("ki,ij,kj->k", cands.conj(), c, cands).real
    best = int(np.argmax(vals))
    return cands[best], float(vals[best])


# ---------------------------------------------------------------------------
# Strength table


def strength_cuts() -> dict[str, tuple[np.ndarray, int]]:
    return {
        "clique-3": (np.eye(3) - np.ones((3, 3)), 3),
        "clique-4": (np.eye(4) - np.ones((4, 4)), 4),
        "facet-3": (triangle_facets_cut33()[0].Q, 3),
        "h-4": (h_matrix(), 4),
    }


def run_strength_table(cfg: ExperimentConfig) -> RunReport:
    rows = []
    start = time.perf_counter()
    settings = cfg.settings()
    for name, (q, n) in strength_cuts().items():
        for m in cfg.m:
            s = strength(q, int(m), settings)
            rows.append({"cut": name, "n": n, "m": int(m), "numerator": s.numerator,
                         "denominator": s.denominator, "strength": s.value})
    summary = {"experiment": cfg.experiment, "entries": len(rows),
               "seconds": time.perf_counter() - start,
               "table": {f"{r['cut']}@{r['m']}": round(r["strength"], 6) for r in rows}}
    return RunReport(rows, summary)


# ---------------------------------------------------------------------------
# Random objectives


def random_integer_objective(n: int, rng: np.random.Generator, bound: int = 10) -> np.ndarray:
    """Zero-diagonal Hermitian matrix with integer real and imaginary parts in [-bound, bound]."""
    q = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    q[iu] = rng.integers(-bound, bound + 1, iu[0].size) + 1j * rng.integers(-bound, bound + 1, iu[0].size)
    return q + q.conj().T


def run_random_objectives(cfg: ExperimentConfig) -> RunReport:
    rows, times = [], {"E": [], "T": []}
    settings = cfg.settings()
    for m in cfg.m:
        for trial in range(cfg.trials):
            rng = np.random.default_rng([cfg.seed, int(m), trial])
            q = random_integer_objective(cfg.n, rng)
            t0 = time.perf_counter()
            res_e = solve_relaxation(q, FeasibleSet(Kind.ELLIPTOPE, cfg.n, m), settings)
            t1 = time.perf_counter()
            res_t = solve_relaxation(q, FeasibleSet(Kind.TRIANGLE, cfg.n, m), settings)
            t2 = time.perf_counter()
            times["E"].append(t1 - t0)
            times["T"].append(t2 - t1)
            _, lb_t = round_to_rank1(res_t.X, q, m, cfg.rounding_trials, rng)
            _, lb_e = round_to_rank1(res_e.X, q, m, cfg.rounding_trials, rng)
            rows.append({"m": int(m), "trial": trial, "opt_E": res_e.value, "opt_T": res_t.value,
                         "lb": max(lb_t, lb_e), "rank1_E": is_rank_one(res_e.X, cfg.rank_tol),
                         "rank1_T": is_rank_one(res_t.X, cfg.rank_tol)})
    summary = {"experiment": cfg.experiment, "n": cfg.n, "trials": cfg.trials, "by_m": {}}
    for m in cfg.m:
        sel = [r for r in rows if r["m"] == int(m)]
        summary["by_m"][str(int(m))] = {
            "mean_opt_E": float(np.mean([r["opt_E"] for r in sel])),
            "mean_opt_T": float(np.mean([r["opt_T"] for r in sel])),
            "mean_lb": float(np.mean([r["lb"] for r in sel])),
        }
    summary["mean_seconds"] = {k: float(np.mean(v)) if v else 0.0 for k, v in times.items()}
    return RunReport(rows, summary)


# ---------------------------------------------------------------------------
# MIMO detection


@dataclass(frozen=True, eq=False)
class MimoInstance:
    D: np.ndarray
    c: np.ndarray
    r: np.ndarray
    objective: np.ndarray   # maximize <objective, X> over order n + 1


def mimo_instance(n: int, rows: int, m: int, sigma: float, rng: np.random.Generator) -> MimoInstance:
    d = complex_gaussian(rng, (rows, n))
    c = np.exp(2j * math.pi * rng.integers(0, m, n) / m)
    r = d @ c + sigma * complex_gaussian(rng, rows)
    rd = r.conj() @ d
    block = np.zeros((n + 1, n + 1), dtype=complex)
    block[0, 0] = np.vdot(r, r)
    block[0, 1:] = -rd
    block[1:, 0] = -rd.conj()
    block[1:, 1:] = d.conj().T @ d
    # x* block x = ||D x - r||^2 for x = (1, x); maximize its negative.
    return MimoInstance(D=d, c=c, r=r, objective=-hermitian(block, tol=1e-9))


def recover_signal(x: np.ndarray, m: int) -> np.ndarray:
    """De-rotate a homogenized solution so its first coordinate is 1 and snap."""
    w, u = np.linalg.eigh(hermitian(x, tol=1e-7))
    top = u[:, -1]
    return snap(top[1:] * np.conj(top[0]) / abs(top[0]), m)


def run_mimo(cfg: ExperimentConfig) -> RunReport:
    rows, times = [], {"E": [], "T": []}
    settings = cfg.settings()
    n, k = cfg.n, cfg.channel_rows
    for m in cfg.m:
        for si, sigma in enumerate(cfg.sigma):
            for trial in range(cfg.trials):
                rng = np.random.default_rng([cfg.seed, int(m), si, trial])
                inst = mimo_instance(n, k, int(m), float(sigma), rng)
                row = {"m": int(m), "sigma": float(sigma), "trial": trial}
                for label, kind in (("E", Kind.ELLIPTOPE), ("T", Kind.TRIANGLE)):
                    t0 = time.perf_counter()
                    res = solve_relaxation(inst.objective, FeasibleSet(kind, n + 1, m), settings)
                    times[label].append(time.perf_counter() - t0)
                    rank1 = is_rank_one(res.X, cfg.rank_tol)
                    xr, lb = round_to_rank1(res.X, inst.objective, m, cfg.rounding_trials, rng)
                    exact = bool(rank1 and np.allclose(recover_signal(res.X, m), inst.c, atol=1e-6))
                    row.update({f"ub_{label}": res.value, f"lb_{label}": lb,
                                f"rank1_{label}": rank1, f"recovered_{label}": exact})
                rows.append(row)
    summary = {"experiment": cfg.experiment, "n": n, "channel_rows": k, "trials": cfg.trials,
               "rates": {}}
    for m in cfg.m:
        for sigma in cfg.sigma:
            sel = [r for r in rows if r["m"] == int(m) and r["sigma"] == float(sigma)]
            summary["rates"][f"m={int(m)},sigma={float(sigma):g}"] = {
                "rank1_E": float(np.mean([r["rank1_E"] for r in sel])),
                "rank1_T": float(np.mean([r["rank1_T"] for r in sel])),
                "recovered_T": float(np.mean([r["recovered_T"] for r in sel])),
            }
    summary["mean_seconds"] = {k_: float(np.mean(v)) if v else 0.0 for k_, v in times.items()}
    return RunReport(rows, summary)


# ---------------------------------------------------------------------------
# Angular synchronization


def angsync_objective(n: int, sigma: float, rng: np.random.Generator, signal=None) -> np.ndarray:
    c = np.ones(n, dtype=complex) if signal is None else np.asarray(signal, dtype=complex)
    w = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    w[iu] = complex_gaussian(rng, iu[0].size)
    w = w + w.conj().T
    return hermitian(np.outer(c, c.conj()) + sigma * w, tol=1e-9)


def run_angsync(cfg: ExperimentConfig) -> RunReport:
    n = cfg.n
    if n < 6:
        raise ValueError("angular synchronization needs n >= 6")
    rows, times = [], {}
    settings = cfg.settings()
    fracs = sorted(float(p) for p in cfg.p)
    for trial in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, trial])
        bases = nested_cp_bases(n, fracs, rng)
        for si, scale in enumerate(cfg.sigma):
            sigma = float(scale) * math.sqrt(n)
            c = angsync_objective(n, sigma, np.random.default_rng([cfg.seed, trial, si]))
            for frac, basis in zip(fracs, bases):
                t0 = time.perf_counter()
                res = lifted_max(c, basis, settings)
                times.setdefault(f"{frac:g}", []).append(time.perf_counter() - t0)
                rows.append({"trial": trial, "sigma_over_sqrt_n": float(scale), "p": frac,
                             "basis_size": len(basis), "value": res.value,
                             "lambda2": second_eigenvalue(res.X),
                             "rank1": is_rank_one(res.X, cfg.rank_tol)})
    summary = {"experiment": cfg.experiment, "n": n, "trials": cfg.trials, "rates": {}}
    for scale in cfg.sigma:
        for frac in fracs:
            sel = [r for r in rows if r["sigma_over_sqrt_n"] == float(scale) and r["p"] == frac]
            summary["rates"][f"sigma={float(scale):g}sqrt(n),p={frac:g}"] = float(
                np.mean([r["rank1"] for r in sel]))
    summary["mean_seconds"] = {k: float(np.mean(v)) for k, v in times.items()}
    return RunReport(rows, summary)


RUNNERS = {
    "strength-table": run_strength_table,
    "random-obj": run_random_objectives,
    "mimo": run_mimo,
    "angsync": run_angsync,
}


def run(cfg: ExperimentConfig) -> RunReport:
    return RUNNERS[cfg.experiment](cfg)


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
