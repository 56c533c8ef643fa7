"""Command line interface: ``complexcut <group> <command>``."""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from .conic import Settings
from .linalg import INF, load_matrix, numeric_rank, save_matrix


class OrderParam(click.ParamType):
    """Root order ``m``: an integer >= 2 or ``inf``."""

    name = "m"

    def convert(self, value, param, ctx):
        if isinstance(value, (int, float)):
            return value
        if str(value).lower() in ("inf", "infinity", "oo"):
            return INF
        try:
            m = int(value)
        except ValueError:
            self.fail(f"{value!r} is not an integer or 'inf'", param, ctx)
        if m < 2:
            self.fail("m must be at least 2", param, ctx)
        return m


ORDER = OrderParam()


def _emit(obj) -> None:
    click.echo(json.dumps(obj, indent=2, default=float))


def _settings(tol: float | None, debug: str | None = None) -> Settings:
    if tol is None:
        return Settings(debug_path=debug)
    return Settings(feas_tol=tol, gap_tol=tol, debug_path=debug)


@click.group()
def main():
    """Semidefinite relaxations of the complex cut polytope."""


@main.command()
@click.option("--objective", required=True, type=click.Path(exists=True), help="Matrix JSON file.")
@click.option("--set", "kind", required=True,
              type=click.Choice(["elliptope", "triangle", "real-elliptope", "real-triangle",
                                 "elliptope-inf"]))
@click.option("--m", "m", type=ORDER, default="inf", show_default=True)
@click.option("--tol", type=float, default=None, help="Solver feasibility and gap tolerance.")
@click.option("--out", type=click.Path(), default=None, help="Where to write the optimal X.")
@click.option("--debug", type=click.Path(), default=None, help="Dump problem and solution JSON.")
def solve(objective, kind, m, tol, out, debug):
    """Maximize <C, X> over a relaxation."""
    from .relax import FeasibleSet, Kind, solve_relaxation

    c = load_matrix(objective)
    res = solve_relaxation(c, FeasibleSet(Kind(kind), c.shape[0], m), _settings(tol, debug))
    out = out or str(Path(objective).with_suffix("")) + ".X.json"
    save_matrix(out, res.X)
    _emit({"value": res.value, "status": res.status.value, "rank": numeric_rank(res.X),
           "X-file": out})


# ---------------------------------------------------------------------------


@main.group()
def cuts():
    """Cut catalogs and strengths."""


@cuts.command("list")
@click.option("--family", required=True,
              type=click.Choice(["triangle-facet", "polygon", "real-facet", "clique", "h"]))
@click.option("--n", "n", type=int, default=3, show_default=True)
@click.option("--m", "m", type=ORDER, default="3", show_default=True)
def cuts_list(family, n, m):
    """Print a cut family as CSV rows (name, rhs, Q upper triangle)."""
    from . import cuts as C

    if family == "clique":
        items = [C.clique_cut(n, m)]
        if not math.isinf(m):
            items = C.roc_orbit(items[0], int(m))
    elif family == "h":
        items = C.roc_orbit(C.h_cut(), int(m)) if not math.isinf(m) else [C.h_cut()]
    else:
        items = {"triangle-facet": C.triangle_facets_cut33, "polygon": C.polygon_facets_cut33,
                 "real-facet": C.real_facets_cut33}[family]()
    writer = csv.writer(sys.stdout)
    writer.writerow(["name", "n", "rhs", "q_upper"])
    for cut in items:
        iu = np.triu_indices(cut.n, 1)
        q = ";".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in cut.Q[iu])
        writer.writerow([cut.name, cut.n, repr(cut.rhs), q])


@cuts.command("strength")
@click.option("--objective", required=True, type=click.Path(exists=True))
@click.option("--m", "m", type=ORDER, required=True)
@click.option("--name", default=None, help="Row label (defaults to the file stem).")
def cuts_strength(objective, m, name):
    """Strength of an objective Q as CSV (name, numerator, denominator, strength)."""
    from .cuts import strength

    s = strength(load_matrix(objective), m)
    writer = csv.writer(sys.stdout)
    writer.writerow(["name", "numerator", "denominator", "strength"])
    writer.writerow([name or Path(objective).stem, repr(s.numerator), repr(s.denominator),
                     repr(s.value)])


# ---------------------------------------------------------------------------


@main.group()
def oracle():
    """Exact enumeration and audits."""


@oracle.command("brute-max")
@click.option("--objective", required=True, type=click.Path(exists=True))
@click.option("--m", "m", type=int, required=True)
def oracle_brute_max(objective, m):
    from .oracle import brute_max

    val, x = brute_max(load_matrix(objective), m)
    _emit({"value": val, "argmax_re": x.real.tolist(), "argmax_im": x.imag.tolist()})


@oracle.command("verify-facets")
@click.option("--n", "n", type=int, default=3, show_default=True)
@click.option("--m", "m", type=int, default=3, show_default=True)
def oracle_verify_facets(n, m):
    """Audit the facet catalog; exits nonzero on any failure."""
    from .cuts import facet_catalog_cut33
    from .oracle import verify_facet

    if (n, m) != (3, 3):
        raise click.UsageError("the facet catalog is available for n = 3, m = 3")
    failed = 0
    for cut in facet_catalog_cut33():
        a = verify_facet(cut, n, m)
        ok = a.facet_defining and a.tight_vertex_count >= 6
        failed += not ok
        click.echo(f"{'ok  ' if ok else 'FAIL'} {a.name:10s} tight={a.tight_vertex_count:2d} "
                   f"rank={a.affine_rank} max_violation={a.max_violation:.2e}")
    if failed:
        click.echo(f"{failed} facet(s) failed", err=True)
        sys.exit(1)


# ---------------------------------------------------------------------------


@main.group()
def lift():
    """Moment liftings."""


@lift.command("solve")
@click.option("--objective", required=True, type=click.Path(exists=True))
@click.option("--basis", "basis_name", required=True,
              help="b1..b6, atilde, a or cp:<frac>.")
@click.option("--seed", type=int, default=None, help="Needed for random cp bases.")
@click.option("--dump-basis", type=click.Path(), default=None)
@click.option("--tol", type=float, default=None)
def lift_solve(objective, basis_name, seed, dump_basis, tol):
    from .lifting import lifted_max, resolve_basis, save_basis

    c = load_matrix(objective)
    rng = np.random.default_rng(seed) if seed is not None else None
    basis = resolve_basis(basis_name, c.shape[0], rng)
    if dump_basis:
        save_basis(dump_basis, basis)
    res = lifted_max(c, basis, _settings(tol))
    _emit({"value": res.value, "status": res.solution.status.value, "basis": basis.name,
           "basis_size": len(basis), "rank": numeric_rank(res.X)})


# ---------------------------------------------------------------------------


@main.group()
def extremal():
    """Rank-2 extreme points of complex elliptopes."""


@extremal.command("e3m")
@click.option("--m", "m", type=int, required=True)
def extremal_e3m(m):
    from .extremal import e3m_rank2_extreme, in_elliptope, is_extreme_rank2_e3m
    from .oracle import cut_membership

    n_mat = e3m_rank2_extreme(m)
    rep = is_extreme_rank2_e3m(n_mat, m)
    _emit({"N_re": n_mat.real.tolist(), "N_im": n_mat.imag.tolist(),
           "in_elliptope": in_elliptope(n_mat, m), "rank": numeric_rank(n_mat, 1e-8),
           "in_cut": cut_membership(n_mat, m).inside, "extreme": rep.extreme,
           "reason": rep.reason})


@extremal.command("sample-p")
@click.option("--count", type=int, default=10, show_default=True)
@click.option("--seed", type=int, required=True)
def extremal_sample_p(count, seed):
    """Projection distances of random extremal Gram products to the first lifting."""
    from .extremal import random_rank2_extreme_E4inf
    from .lifting import projection_distance

    writer = csv.writer(sys.stdout)
    writer.writerow(["draw", "distance"])
    for k in range(count):
        a = random_rank2_extreme_E4inf(np.random.default_rng([seed, k]))
        writer.writerow([k, repr(projection_distance(a))])


# ---------------------------------------------------------------------------


def _experiment_command(name: str):
    @click.option("--seed", type=int, required=True)
    @click.option("--config", type=click.Path(exists=True), default=None,
                  help="JSON config; flags override its fields.")
    @click.option("--n", "n", type=int, default=None)
    @click.option("--m", "m", type=int, multiple=True)
    @click.option("--sigma", type=float, multiple=True)
    @click.option("--p", "p", type=float, multiple=True)
    @click.option("--trials", type=int, default=None)
    @click.option("--rank-tol", type=float, default=None)
    @click.option("--rounding-trials", type=int, default=None)
    @click.option("--output", type=click.Path(), default=None,
                  help="Output stem; writes <stem>.csv and <stem>.json.")
    def command(seed, config, n, m, sigma, p, trials, rank_tol, rounding_trials, output):
        from .experiments import ExperimentConfig, run

        fields = json.loads(Path(config).read_text()) if config else {}
        fields.update({"experiment": name, "seed": seed})
        overrides = {"n": n, "m": list(m), "sigma": list(sigma), "p": list(p), "trials": trials,
                     "rank_tol": rank_tol, "rounding_trials": rounding_trials, "output": output}
        fields.update({k: v for k, v in overrides.items() if v not in (None, [])})
        cfg = ExperimentConfig(**fields)
        report = run(cfg)
        stem = cfg.output or f"{name}-seed{seed}"
        csv_path, json_path = report.write(stem)
        summary = dict(report.summary, config=asdict(cfg), csv=str(csv_path))
        json_path.write_text(json.dumps(summary, indent=2, default=float))
        _emit(report.summary)

    command.__doc__ = f"Run the {name} experiment."
    return command


@main.group()
def exp():
    """Experiment protocols with CSV and JSON output."""


for _name in ("strength-table", "random-obj", "mimo", "angsync"):
    exp.command(_name)(_experiment_command(_name))


@main.group()
def verify():
    """Self-audits."""


@verify.command("all")
def verify_all():
    """Facet audit, lifting equivalence, exclusion and closed-form checks."""
    from .checks import run_all

    results = run_all()
    for r in results:
        click.echo(r.line())
    if not all(r.passed for r in results):
        sys.exit(1)


if __name__ == "__main__":
    main()
