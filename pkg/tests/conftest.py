"""Shared fixtures: the reference experiment is expensive at 128 digits, so
one session-scoped run feeds the acceptance suite and the model-problem
tests; a cheaper 64-digit variant covers the exact-arithmetic-mode checks."""

import math
import time

import pytest

from radaucg import (
    PrecisionContext,
    build_model_problem,
    JacobiOperator,
    run_cg,
    estimate_bounds,
    TraceDiagnostics,
    eig_tridiagonal,
)

PAPER_PARAMS = dict(m=12, lam1="1e-6", lamm="1", rho="0.8", delta="1e-10", p=4)


class ExperimentRun:
    """Model problem + CG trace + per-mu bound series + diagnostics."""

    def __init__(self, digits):
        self.ctx = PrecisionContext(digits)
        t0 = time.perf_counter()
        self.problem = build_model_problem(ctx=self.ctx, **PAPER_PARAMS)
        self.ev = self.problem.eval_ctx
        self.operator = JacobiOperator(self.problem.A)
        self.trace, self.final_state = run_cg(
            self.operator, self.problem.b, self.ctx, self.problem.n,
            exact_solution=self.problem.exact_solution, eval_ctx=self.ev)
        self.mus = self._paper_mus()
        self.series = {}
        for label, mu in self.mus.items():
            self.series[label] = estimate_bounds(
                self.trace, mu, self.ctx, label=label,
                tau=self.ctx.scalar("0.25"), cross_check=True)
        self.core_seconds = time.perf_counter() - t0
        self.diag = TraceDiagnostics(self.trace, self.ctx,
                                     lambda1=self.problem.lambda_min,
                                     eval_ctx=self.ev)
        self._spectrum_A = None

    def _paper_mus(self):
        ctx, ev = self.ctx, self.ev
        lam1 = self.problem.lambda_min
        d = float(lam1)
        if d > lam1:
            d = math.nextafter(d, 0.0)
        return {
            "mu3": ctx.scalar((ev.one - ev.scalar("1e-3")) * lam1),
            "mu8": ctx.scalar((ev.one - ev.scalar("1e-8")) * lam1),
            "mu16": ctx.scalar(d),
            "mu50": ctx.scalar((ev.one - ev.scalar("1e-50")) * lam1),
        }

    @property
    def n(self):
        """Grade of b with respect to A (full dimension on this problem)."""
        return self.problem.n

    @property
    def spectrum_A(self):
        if self._spectrum_A is None:
            self._spectrum_A = eig_tridiagonal(
                self.problem.A.convert(self.ev), self.ev)
        return self._spectrum_A

    def err2(self, k):
        return self.ev.scalar(self.trace.true_err2(k))


@pytest.fixture(scope="session")
def paper_run():
    return ExperimentRun(128)


@pytest.fixture(scope="session")
def run64():
    return ExperimentRun(64)


@pytest.fixture(scope="session")
def ctx32():
    return PrecisionContext(32)


@pytest.fixture(scope="session")
def native_ctx():
    return PrecisionContext(0)
