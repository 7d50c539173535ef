"""Batch driver for the verification suites.

Exit status: 0 all checks passed, 1 a check failed, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import boolfock, car, freeprod, haagerup, qfock
from .errors import RejectedInputError
from .exchange import MAX_ENUM, CesaroReport, InfeasiblePlacementWarning, reports_to_csv

SUITES = ("freeprod", "qfock", "car", "boolean", "haagerup")
FORMATS = ("json", "csv", "text")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


@dataclass
class SuiteConfig:
    suite: str = "all"
    q: list[float] = field(default_factory=lambda: [0.5])
    lam: list[float] = field(default_factory=lambda: [1.0])
    sites: int = 3
    degree: int = 3
    modes: int = 3
    perm_max: int = 7
    seed: int = 0
    tol: float = 1e-10
    format: str = "json"
    out: str = "-"
    fuzz_cases: int = 200

    def validate(self) -> None:
        if self.suite not in SUITES + ("all",):
            raise RejectedInputError(f"unknown suite {self.suite!r}")
        if any(not -1 < q < 1 for q in self.q):
            raise RejectedInputError("q must lie in (-1,1)")
        if any(not lam > 0 for lam in self.lam):
            raise RejectedInputError("lambda must be positive or inf")
        if not 2 <= self.perm_max <= MAX_ENUM:
            raise RejectedInputError(f"perm-max must lie in 2..{MAX_ENUM}")
        if not self.tol > 0:
            raise RejectedInputError("tol must be positive")
        if self.sites < 1 or self.degree < 0 or self.modes < 1 or self.fuzz_cases < 1:
            raise RejectedInputError("sites, modes and fuzz cases must be positive, degree nonnegative")
        if self.format not in FORMATS:
            raise RejectedInputError(f"format must be one of {FORMATS}")

    def suites(self) -> tuple[str, ...]:
        return SUITES if self.suite == "all" else (self.suite,)


@dataclass
class SuiteResult:
    suite: str
    failures: list[str] = field(default_factory=list)
    reports: list[dict] = field(default_factory=list)
    tables: list[tuple[str, list[CesaroReport]]] = field(default_factory=list)
    checks: int = 0

    def check(self, ok: bool, label: str) -> None:
        self.checks += 1
        if not ok:
            self.failures.append(label)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": self.checks,
            "failures": self.failures,
            "reports": self.reports,
        }


def make_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator; each suite draws from its own key so runs are order-independent."""
    return np.random.Generator(np.random.Philox(key=[seed, stream]))


def _freeprod(cfg: SuiteConfig, rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("freeprod")
    fz = freeprod.fuzz(rng, cases=cfg.fuzz_cases)
    res.reports.append(fz.as_dict())
    res.check(fz.associativity_failures == 0, "associativity")
    res.check(fz.adjoint_failures == 0, "adjoint antihomomorphism")
    res.check(fz.quotient_failures == 0, "quotient homomorphism")
    res.check(fz.equivariance_failures == 0, "permutation equivariance")
    res.check(fz.eval_residual <= cfg.tol, "evaluation multiplicativity")
    alg = freeprod.SiteAlgebra.pauli()
    x = freeprod.random_element(alg, freeprod.UNITAL, rng)
    res.check(freeprod.from_json(alg, freeprod.to_json(x)) == x, "json round trip")
    return res


def _qfock(cfg: SuiteConfig, rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("qfock")
    for q in cfg.q:
        rep = qfock.report(qfock.QSpace(cfg.sites, cfg.degree, q), rng)
        res.reports.append(rep.as_dict())
        res.check(min(rep.gram_min_eig) > 0, f"q={q}: gram positivity")
        res.check(rep.commutation_residual <= cfg.tol, f"q={q}: commutation relation")
        res.check(rep.adjointness_residual <= cfg.tol, f"q={q}: adjointness")
    return res


EVEN_SITE = np.diag([0.7, 0.3])
NON_EVEN_SITE = np.array([[0.6, 0.3], [0.3, 0.4]])


def _car(cfg: SuiteConfig, rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("car")
    sys_ = car.jw_generators(cfg.modes)
    rep: dict = {
        "n": cfg.modes,
        "car_residual": car.car_residual(sys_),
        "parity_residual": car.parity_residual(sys_),
        "evenness_tests": [],
        "definetti_mixture_gap": None,
    }
    res.check(rep["car_residual"] <= cfg.tol, "anticommutation relations")
    res.check(rep["parity_residual"] <= cfg.tol, "parity")
    if cfg.modes >= 2:
        for label, rho in (("even", EVEN_SITE), ("non-even", NON_EVEN_SITE)):
            site = car.SiteState(rho)
            gap = car.evenness_gap(car.product_state(site, cfg.modes), sys_)
            rep["evenness_tests"].append({"site_state": label, "even": site.even, "max_gap": gap})
            if site.even:
                res.check(gap <= cfg.tol, f"{label} product state is symmetric")
            else:
                res.check(gap >= 1e-3, f"{label} product state is detected as non-symmetric")
        weights = rng.dirichlet(np.ones(2))
        sites = [car.SiteState(np.diag([p, 1 - p])) for p in rng.uniform(size=2)]
        gap = car.definetti_mixture_gap(sys_, sites, weights)
        rep["definetti_mixture_gap"] = gap
        res.check(gap <= cfg.tol, "mixture of even products factorizes")
    res.reports.append(rep)
    return res


def _boolean(cfg: SuiteConfig, rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("boolean")
    rep = boolfock.report(cfg.sites, rng)
    res.reports.append(rep)
    for name, dev in rep["relation_residuals"].items():
        res.check(dev == 0, f"relation {name}")
    res.check(rep["span_rank"] == (cfg.sites + 1) ** 2, "ladder products span the full matrix algebra")
    for k, case in enumerate(rep["obstruction_cases"]):
        res.check(case["gap"] <= 1e-12, f"obstruction case {k}")
    return res


def _haagerup(cfg: SuiteConfig, rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("haagerup")
    v, w = haagerup.FreeWord.gen(1), haagerup.FreeWord.gen(2, -1)
    for lam in cfg.lam:
        st = haagerup.HaagerupState(lam)
        rows = [haagerup.cesaro_cluster(st, v, w, n) for n in range(2, cfg.perm_max + 1)]
        res.tables.append((f"lambda={lam}", rows))
        for r in rows:
            res.check(abs(r.mean - haagerup.clustering_closed_form(lam, r.n)) <= cfg.tol, f"lambda={lam} n={r.n}: mean")
            res.check(r.gap <= r.bound, f"lambda={lam} n={r.n}: counting bound")
        summary = haagerup.gram_summary(lam, 2, 3)
        res.reports.append(summary)
        res.check(summary["min_eig"] >= -cfg.tol, f"lambda={lam}: gram positivity")
        if not math.isinf(lam):
            lhs, rhs = haagerup.block_singleton_witness(st)
            res.check(lhs != rhs, f"lambda={lam}: block-singleton witness")
    return res


RUNNERS: dict[str, Callable[[SuiteConfig, np.random.Generator], SuiteResult]] = {
    "freeprod": _freeprod,
    "qfock": _qfock,
    "car": _car,
    "boolean": _boolean,
    "haagerup": _haagerup,
}


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("QEXCH_THREADS", "1")))
    except ValueError:
        return 1


def run_suite(cfg: SuiteConfig) -> tuple[int, list[SuiteResult]]:
    cfg.validate()
    names = cfg.suites()

    def run(name: str) -> SuiteResult:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InfeasiblePlacementWarning)
            return RUNNERS[name](cfg, make_rng(cfg.seed, SUITES.index(name)))

    with ThreadPoolExecutor(max_workers=min(max_workers(), len(names))) as pool:
        results = list(pool.map(run, names))
    status = EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
    return status, results


def _jsonable(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def render(results: list[SuiteResult], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([_jsonable(r.as_dict()) for r in results], indent=2) + "\n"
    if fmt == "csv":
        return reports_to_csv(row for r in results for _, table in r.tables for row in table)
    lines = []
    for r in results:
        lines.append(f"{r.suite}: {'PASS' if r.passed else 'FAIL'} ({r.checks} checks)")
        lines.extend(f"  failed: {f}" for f in r.failures)
    return "\n".join(lines) + ("\n" if lines else "")


def emit_report(results: list[SuiteResult], fmt: str, out: str) -> None:
    """Write the rendered report to ``out`` (``-`` is stdout); raises ``OSError`` on write failure."""
    text = render(results, fmt)
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _lambda(token: str) -> float:
    if token.lower() == "inf":
        return math.inf
    try:
        return float(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid lambda {token!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qexch", description="Run the verification suites.")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--q", type=float, nargs="+", default=[0.5])
    p.add_argument("--lambda", dest="lam", type=_lambda, nargs="+", default=[1.0], help="positive reals or 'inf'")
    p.add_argument("--sites", type=int, default=3, help="one-particle dimension / number of Boolean sites")
    p.add_argument("--degree", type=int, default=3, help="q-Fock truncation degree")
    p.add_argument("--modes", type=int, default=3, help="number of CAR modes")
    p.add_argument("--perm-max", type=int, default=7, help=f"largest index set enumerated (<= {MAX_ENUM})")
    p.add_argument("--fuzz-cases", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--out", default="-")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = SuiteConfig(
        suite=args.suite,
        q=args.q,
        lam=args.lam,
        sites=args.sites,
        degree=args.degree,
        modes=args.modes,
        perm_max=args.perm_max,
        seed=args.seed,
        tol=args.tol,
        format=args.format,
        out=args.out,
        fuzz_cases=args.fuzz_cases,
    )
    try:
        status, results = run_suite(cfg)
    except RejectedInputError as exc:
        print(f"qexch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        emit_report(results, cfg.format, cfg.out)
    except OSError as exc:
        print(f"qexch: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    if status != EXIT_OK:
        for r in results:
            for f in r.failures:
                print(f"FAILED {r.suite}: {f}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
