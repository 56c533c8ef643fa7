"""Self-audits run by ``complexcut verify all``.

Each check returns a :class:`CheckResult`; none of them raise on a failed
comparison so a single run reports every failure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cuts import clique_rhs, facet_catalog_cut33
from .extremal import e3m_rank2_extreme, is_extreme_rank2_e3m, random_rank2_extreme_E4inf
from .lifting import lifted_max, projection_distance, standard_bases
from .oracle import brute_max, cut_membership, verify_facet


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_closed_forms(ms=range(2, 13)) -> CheckResult:
    worst = 0.0
    for n, m in itertools.product((3, 4), ms):
        val, _ = brute_max(np.eye(n) - np.ones((n, n)), m)
        worst = max(worst, abs(val - clique_rhs(n, m)))
    return CheckResult("closed-forms", worst <= 1e-9, f"max |formula - brute| = {worst:.2e}")


def check_facets() -> CheckResult:
    bad = []
    for cut in facet_catalog_cut33():
        audit = verify_facet(cut, 3, 3)
        if not (audit.facet_defining and audit.tight_vertex_count >= 6):
            bad.append(cut.name)
    return CheckResult("facet-audit", not bad, "all 27 facets verified" if not bad else f"failed: {bad}")


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


def check_lifting_equivalence(count: int = 3, seed: int = 0) -> CheckResult:
    bases = standard_bases()
    names = ["b1", "b2", "b4", "b5", "b6"]
    rng = np.random.default_rng(seed)
    spread = 0.0
    for _ in range(count):
        c = random_hermitian(4, rng)
        vals = [lifted_max(c, bases[k]).value for k in names]
        spread = max(spread, max(vals) - min(vals))
    return CheckResult("lifting-equivalence", spread <= 1e-5, f"max spread {spread:.2e} over {count} objectives")


def check_p_exclusion(count: int = 5, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    dists = [projection_distance(random_rank2_extreme_E4inf(rng)) for _ in range(count)]
    low = min(dists)
    return CheckResult("p-exclusion", low > 1e-5, f"min distance {low:.3e} over {count} draws")


def check_e3m_family(ms=range(3, 10)) -> CheckResult:
    bad = []
    for m in ms:
        n_mat = e3m_rank2_extreme(m)
        ok = is_extreme_rank2_e3m(n_mat, m).extreme and not cut_membership(n_mat, m).inside
        if not ok:
            bad.append(m)
    return CheckResult("e3m-extreme", not bad, "m = 3..9 extreme and outside CUT" if not bad
                       else f"failed for m in {bad}")


ALL_CHECKS = (check_closed_forms, check_facets, check_lifting_equivalence, check_p_exclusion,
              check_e3m_family)


def run_all() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
