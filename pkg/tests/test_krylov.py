import math
import random

import pytest

from radaucg import (
    PrecisionContext,
    native,
    elevated,
    JacobiMatrix,
    JacobiOperator,
    DiagonalOperator,
    DenseOperator,
    SparseSymmetricOperator,
    lanczos_start,
    lanczos_step,
    run_lanczos,
    cg_start,
    cg_step,
    run_cg,
    CGRecord,
    CGTrace,
    cg_to_lanczos,
    true_error2,
    ldl_tridiagonal,
    inverse_first_entry,
    read_matrix_market,
    write_matrix_market,
    write_trace_csv,
    read_trace_csv,
    MatrixMarketError,
    NotPositiveDefiniteError,
    BreakdownError,
)
from radaucg.krylov import dot


# -- operators -----------------------------------------------------------------

def test_operator_matvecs_agree():
    T = JacobiMatrix((2.0, 3.0, 4.0), (1.0, 0.5))
    dense = DenseOperator([[2.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 4.0]])
    sparse = SparseSymmetricOperator(3, [(0, 0, 2.0), (1, 0, 1.0),
                                         (1, 1, 3.0), (2, 1, 0.5),
                                         (2, 2, 4.0)])
    v = [1.0, -2.0, 0.5]
    expected = JacobiOperator(T).matvec(v)
    assert dense.matvec(v) == expected
    assert sparse.matvec(v) == expected
    assert JacobiOperator(T).infnorm_estimate() == 4.5
    assert dense.infnorm_estimate() == 4.5
    assert sparse.infnorm_estimate() == 4.5


# -- Lanczos --------------------------------------------------------------------

def test_lanczos_two_by_two_diagonal():
    state = run_lanczos(DiagonalOperator((1.0, 2.0)), [1.0, 1.0], 2, native())
    assert state.alphas[0] == pytest.approx(1.5, abs=1e-14)
    assert state.betas[0] == pytest.approx(0.5, abs=1e-14)
    assert state.alphas[1] == pytest.approx(1.5, abs=1e-13)
    assert state.finished  # grade 2 reached


def test_lanczos_identity_grade_one():
    state = run_lanczos(DiagonalOperator((1.0, 1.0, 1.0)), [3.0, 2.0, 1.0],
                        5, native())
    assert state.k == 1
    assert state.alphas == [pytest.approx(1.0)]
    assert state.finished
    with pytest.raises(BreakdownError):
        lanczos_step(state, DiagonalOperator((1.0, 1.0, 1.0)), native())


def test_lanczos_grade_equals_dimension():
    rng = random.Random(2)
    entries = tuple(sorted(rng.uniform(0.5, 3.0) for _ in range(5)))
    A = DiagonalOperator(entries)
    state = run_lanczos(A, [1.0] * 5, 10, native())
    assert state.k == 5 and state.finished


def test_lanczos_three_term_relation():
    ctx = PrecisionContext(32)
    rng = random.Random(3)
    rows = [[ctx.scalar(rng.uniform(-1, 1)) for _ in range(6)]
            for _ in range(6)]
    for i in range(6):
        for j in range(i):
            rows[i][j] = rows[j][i]
    A = DenseOperator(rows)
    v = [ctx.scalar(rng.uniform(-1, 1)) for _ in range(6)]
    state = lanczos_start(A, v, ctx, retain_basis=True)
    for _ in range(4):
        lanczos_step(state, A, ctx)
    k = state.k
    V = state.basis
    tol = ctx.tolerance * A.infnorm_estimate()
    for j in range(k):
        av = A.matvec(V[j])
        recon = [state.alphas[j] * V[j][i] for i in range(6)]
        if j > 0:
            recon = [recon[i] + state.betas[j - 1] * V[j - 1][i]
                     for i in range(6)]
        if j < k:
            recon = [recon[i] + state.betas[j] * V[j + 1][i]
                     for i in range(6)]
        assert max(abs(av[i] - recon[i]) for i in range(6)) <= tol
    for j in range(len(V)):
        assert abs(dot(V[j], V[j], ctx) - 1) <= ctx.tolerance


def test_lanczos_reorthogonalization_flag():
    ctx = native()
    rng = random.Random(5)
    entries = tuple(sorted(rng.uniform(0.1, 10.0) for _ in range(12)))
    A = DiagonalOperator(entries)
    v = [rng.uniform(0.5, 1.0) for _ in range(12)]
    plain = run_lanczos(A, v, 12, ctx)
    reo = run_lanczos(A, v, 12, ctx, reorthogonalize=True)
    V = reo.basis
    worst = max(abs(dot(V[i], V[j], ctx)) for i in range(len(V))
                for j in range(i))
    assert worst < 1e-16 * len(V)
    assert plain.k >= 1  # both ran


# -- CG ------------------------------------------------------------------------------

def test_cg_identity_converges_immediately():
    trace, final = run_cg(DiagonalOperator((1.0, 1.0)), [3.0, 4.0],
                          native(), 5)
    assert trace.steps == 1
    assert final.x == [3.0, 4.0]
    assert final.rnorm2 == 0.0


def test_cg_first_step_length():
    trace, _ = run_cg(DiagonalOperator((1.0, 2.0)), [1.0, 1.0], native(), 3)
    assert trace.gamma(0) == pytest.approx(2 / 3, rel=1e-15)


def test_cg_rejects_indefinite():
    A = DenseOperator([[1.0, 2.0], [2.0, 1.0]])
    state = cg_start(A, [1.0, 1.0], native())
    with pytest.raises(NotPositiveDefiniteError):
        # p^T A p = 6 > 0 at first, so push to a direction with negative
        # curvature via a crafted start
        bad = cg_start(A, [1.0, -1.0], native())
        cg_step(bad, A, native())
    assert state.rnorm2 == 2.0


def test_cg_state_invariant_rnorm():
    ctx = PrecisionContext(32)
    A = DiagonalOperator(tuple(ctx.scalar(v) for v in (1.0, 2.0, 5.0)))
    state = cg_start(A, [ctx.one, ctx.one, ctx.one], ctx)
    state = cg_step(state, A, ctx)
    assert abs(state.rnorm2 - dot(state.r, state.r, ctx)) <= ctx.tolerance


def test_cg_zero_residual_guard():
    trace, final = run_cg(DiagonalOperator((2.0,)), [1.0], native(), 4)
    with pytest.raises(BreakdownError):
        cg_step(final, DiagonalOperator((2.0,)), native())


# -- trace bookkeeping -----------------------------------------------------------------

def test_trace_gauss_sums():
    trace = CGTrace()
    trace.records.append(CGRecord(k=0, gamma=0.5, rnorm2=1.0))
    trace.records.append(CGRecord(k=1, gamma=2 / 3, delta=0.25, rnorm2=0.25))
    trace.records.append(CGRecord(k=2, rnorm2=0.01))
    assert trace.steps == 2
    assert trace.gauss_term(0) == 0.5
    assert trace.gauss_sum(0, 1) == pytest.approx(0.5 + 0.25 * 2 / 3)
    assert trace.gauss_sum(1, 0) == 0


def test_cg_to_lanczos_example():
    trace = CGTrace()
    trace.records.append(CGRecord(k=0, gamma=0.5, rnorm2=1.0))
    trace.records.append(CGRecord(k=1, gamma=2 / 3, delta=0.25, rnorm2=0.25))
    trace.records.append(CGRecord(k=2, rnorm2=0.01))
    T = cg_to_lanczos(trace)
    assert T.alphas == (2.0, 2.0)
    assert T.betas == (1.0,)
    T1 = cg_to_lanczos(trace, upto=1)
    assert T1.alphas == (2.0,)


def test_cg_to_lanczos_rejects_bad_coefficients():
    trace = CGTrace()
    trace.records.append(CGRecord(k=0, gamma=-0.5, rnorm2=1.0))
    trace.records.append(CGRecord(k=1, rnorm2=0.25))
    with pytest.raises(ValueError):
        cg_to_lanczos(trace)


# -- model problem (64-digit run) ---------------------------------------------------------

def test_cg_errors_strictly_decreasing(run64):
    errs = [run64.ev.scalar(r.true_err2) for r in run64.trace.records
            if r.true_err2 is not None]
    assert len(errs) == run64.n + 1
    for i in range(len(errs) - 1):
        assert errs[i] > errs[i + 1]


def test_error0_equals_inverse_entry(run64):
    ev = run64.ev
    direct = inverse_first_entry(run64.problem.A.convert(ev), ev)
    assert abs(run64.err2(0) - direct) <= ev.scalar(run64.ctx.tolerance) * direct


def test_true_error_of_exact_solution_is_zero(run64):
    ev = run64.ev
    val = true_error2(run64.problem.exact_solution, run64.problem.exact_solution,
                      JacobiOperator(run64.problem.A.convert(ev)), ev)
    assert abs(val) <= ev.scalar("1e-200")


def test_hestenes_stiefel_telescoping(run64):
    # err_ell = Delta_{ell:k-1} + err_k, relative to err_ell
    ev = run64.ev
    tol = ev.scalar(run64.ctx.tolerance)
    for ell, k in [(0, 5), (3, 11), (10, 20), (0, 29), (17, 29)]:
        lhs = run64.err2(ell)
        rhs = ev.scalar(run64.trace.gauss_sum(ell, k - 1)) + run64.err2(k)
        assert abs(lhs - rhs) <= tol * lhs


def test_cg_lanczos_coefficient_bridge(run64):
    """Trace-derived Jacobi coefficients match a direct Lanczos run."""
    ctx = run64.ctx
    T_cg = cg_to_lanczos(run64.trace)
    state = run_lanczos(run64.operator, list(run64.problem.b), run64.n, ctx)
    tol = ctx.scalar("1e-%d" % (64 - 10))
    assert state.k == run64.n
    for i in range(run64.n):
        assert abs(T_cg.alphas[i] - state.alphas[i]) <= tol * abs(state.alphas[i])
    for i in range(run64.n - 1):
        assert abs(T_cg.betas[i] - state.betas[i]) <= tol * state.betas[i]


def test_ldl_correspondence(run64):
    """Pivots of the trace Jacobi matrix are 1/gamma_j and the subdiagonal
    factors are sqrt(delta_j)."""
    ctx = run64.ctx
    T = cg_to_lanczos(run64.trace)
    factors, pivots = ldl_tridiagonal(T, ctx)
    tol = ctx.tolerance
    for j in range(run64.n):
        assert abs(pivots[j] * run64.trace.gamma(j) - 1) <= tol
    for j in range(1, run64.n):
        root = ctx.sqrt(ctx.scalar(run64.trace.delta(j)))
        assert abs(factors[j - 1] - root) <= tol * root


def test_residual_lanczos_correspondence(run64):
    """v_{j+1} is (-1)^j r_j / ||r_j||, compared at the residual's scale."""
    ctx = run64.ctx
    A = run64.operator
    lstate = lanczos_start(A, list(run64.problem.b), ctx, retain_basis=True)
    cstate = cg_start(A, run64.problem.b, ctx)
    # accumulated rounding over n steps; compared at the residual's scale
    # (||r_0|| = 1) since normalizing amplifies late-iteration roundoff
    tol = ctx.tolerance * run64.n
    for j in range(run64.n - 1):
        lanczos_step(lstate, A, ctx)
        v = lstate.basis[j]
        rn = ctx.sqrt(cstate.rnorm2)
        sign = 1 if j % 2 == 0 else -1
        worst = max(abs(v[i] * rn - sign * cstate.r[i])
                    for i in range(run64.n))
        assert worst <= tol
        cstate = cg_step(cstate, A, ctx)


def test_gauss_quadrature_residual_identity(run64):
    """integral(1/lambda) - (T_k^{-1})_{1,1} equals err_k / ||r_0||^2."""
    ev = run64.ev
    spec = run64.spectrum_A
    integral = ev.zero
    for theta, w in zip(spec.thetas, spec.first_components):
        integral = integral + w * w / theta
    T = cg_to_lanczos(run64.trace).convert(ev)
    tol = ev.scalar(run64.ctx.tolerance)
    for k in range(1, run64.n):
        gauss_value = inverse_first_entry(T.leading(k), ev)
        lhs = integral - gauss_value
        rhs = run64.err2(k)  # ||r_0|| = 1
        # held at the integral's own scale; once eps_k falls many orders
        # below eps_0 the fixed absolute mismatch dominates any ratio
        assert abs(lhs - rhs) <= tol * integral
        if rhs > integral * ev.scalar("1e-4"):
            assert abs(lhs - rhs) <= tol * rhs


def test_final_step_identity(run64):
    n = run64.n
    eps = run64.err2(n - 1)
    gauss = run64.ev.scalar(run64.trace.gauss_term(n - 1))
    assert abs(eps - gauss) <= run64.ev.scalar("1e-%d" % (64 - 12)) * eps


def test_lanczos_orthogonality_decay_threshold(run64):
    """On the reference problem at D >= 64 the basis stays orthonormal far
    below the 1e-(D/2) budget (it is the coordinate basis up to rounding)."""
    ctx = run64.ctx
    state = run_lanczos(run64.operator, list(run64.problem.b), run64.n, ctx,
                        reorthogonalize=False)
    state2 = lanczos_start(run64.operator, list(run64.problem.b), ctx,
                           retain_basis=True)
    for _ in range(run64.n):
        lanczos_step(state2, run64.operator, ctx)
        if state2.finished:
            break
    V = state2.basis
    bound = ctx.scalar("1e-32")
    worst = ctx.zero
    for i in range(len(V)):
        for j in range(i + 1):
            target = ctx.one if i == j else ctx.zero
            worst = max(worst, abs(dot(V[i], V[j], ctx) - target))
    assert worst <= bound
    assert state.k == run64.n


# -- Matrix Market ----------------------------------------------------------------------

MM_OK = """%%MatrixMarket matrix coordinate real symmetric
% comment line
2 2 3
1 1 2.0
2 1 1.0
2 2 2.0
"""


def test_matrix_market_parse(tmp_path):
    path = tmp_path / "ok.mtx"
    path.write_text(MM_OK)
    op = read_matrix_market(str(path), native())
    assert op.n == 2
    assert op.matvec([1.0, 0.0]) == [2.0, 1.0]


def test_matrix_market_rejects_general(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2.0\n")
    with pytest.raises(MatrixMarketError):
        read_matrix_market(str(path), native())


def test_matrix_market_rejects_pattern(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix coordinate pattern symmetric\n"
                    "2 2 1\n1 1\n")
    with pytest.raises(MatrixMarketError):
        read_matrix_market(str(path), native())


def test_matrix_market_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                    "2 2 2\n1 1 2.0\n2 oops 1.0\n")
    with pytest.raises(MatrixMarketError) as info:
        read_matrix_market(str(path), native())
    assert ":4:" in str(info.value)


def test_matrix_market_nnz_mismatch(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                    "2 2 3\n1 1 2.0\n")
    with pytest.raises(MatrixMarketError):
        read_matrix_market(str(path), native())


def test_matrix_market_roundtrip(tmp_path):
    T = JacobiMatrix((0.1, 0.2, 0.7), (0.05, 0.3))
    path = tmp_path / "T.mtx"
    write_matrix_market(JacobiOperator(T), str(path))
    op = read_matrix_market(str(path), native())
    assert op.matvec([1.0, 2.0, 3.0]) == JacobiOperator(T).matvec([1.0, 2.0, 3.0])
    # high-precision parse of the double entries is exact
    ctx = PrecisionContext(32)
    op32 = read_matrix_market(str(path), ctx)
    for (i, j, v), (_, _, w) in zip(sorted(op.entries), sorted(op32.entries)):
        assert float(w) == v


# -- trace CSV ------------------------------------------------------------------------------

def test_trace_csv_roundtrip(tmp_path, run64):
    ctx = run64.ctx
    path = tmp_path / "trace.csv"
    write_trace_csv(run64.trace, str(path), ctx, err_ctx=run64.ev)
    back = read_trace_csv(str(path), ctx)
    assert len(back) == len(run64.trace)
    assert back.records[0].delta is None
    assert back.records[-1].gamma is None
    for k in range(run64.trace.steps):
        a = ctx.scalar(back.gamma(k))
        b = ctx.scalar(run64.trace.gamma(k))
        assert abs(a - b) <= ctx.scalar("1e-62") * abs(b)
    header = path.read_text().splitlines()[0]
    assert header == "k,gamma,delta,rnorm2,true_err2"


def test_trace_csv_without_errors(tmp_path):
    ctx = native()
    trace, _ = run_cg(DiagonalOperator((1.0, 2.0)), [1.0, 1.0], ctx, 3)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, str(path), ctx)
    text = path.read_text().splitlines()
    assert text[1].endswith(",")  # empty true_err2 column
    back = read_trace_csv(str(path), ctx)
    assert back.true_err2(0) is None
