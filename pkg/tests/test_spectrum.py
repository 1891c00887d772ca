import random
from fractions import Fraction

import pytest

from radaucg import (
    PrecisionContext,
    native,
    elevated,
    DistributionFunction,
    strakos_nodes,
    cluster_sizes,
    blur,
    rkpw,
    jacobi_via_lanczos,
    jacobi_moment,
    gauss_rule,
    build_model_problem,
    write_jacobi,
    read_jacobi,
    write_distribution,
    read_distribution,
    inverse_first_entry,
    JacobiMatrix,
)


def random_distribution(rng, n, ctx, lo=0.05, hi=5.0):
    nodes = sorted(rng.uniform(lo, hi) for _ in range(n))
    while any(nodes[i + 1] - nodes[i] < 1e-3 for i in range(n - 1)):
        nodes = sorted(rng.uniform(lo, hi) for _ in range(n))
    raw = [ctx.scalar(rng.uniform(0.1, 1.0)) for _ in range(n)]
    total = sum(raw, ctx.zero)
    return DistributionFunction(
        tuple(ctx.scalar(x) for x in nodes),
        tuple(w / total for w in raw))


# -- distribution type ------------------------------------------------------------

def test_distribution_validation():
    with pytest.raises(ValueError):
        DistributionFunction((1.0, 1.0), (0.5, 0.5))
    with pytest.raises(ValueError):
        DistributionFunction((2.0, 1.0), (0.5, 0.5))
    with pytest.raises(ValueError):
        DistributionFunction((1.0, 2.0), (0.5, 0.0))
    d = DistributionFunction((1.0, 2.0), (0.5, 0.5))
    d.check_normalized(native())
    with pytest.raises(ValueError):
        DistributionFunction((1.0, 2.0), (0.5, 0.6)).check_normalized(native())


# -- graded nodes ---------------------------------------------------------------

def test_strakos_uniform_when_rho_is_one():
    assert strakos_nodes(3, 0, 1, 1, native()) == [0.0, 0.5, 1.0]


def test_strakos_last_node_exact():
    ctx = PrecisionContext(128)
    nodes = strakos_nodes(12, "1e-6", "1", "0.8", ctx)
    assert nodes[11] == 1


def test_strakos_second_node_value():
    # frozen from direct evaluation of the node formula: the decimal
    # 1e-6 + (1/11)(1 - 1e-6) 0.8^10 terminates
    ctx = PrecisionContext(64)
    nodes = strakos_nodes(12, "1e-6", "1", "0.8", ctx)
    expected = ctx.scalar("0.0097622795478016")
    assert abs(nodes[1] - expected) <= ctx.scalar("1e-60")


def test_strakos_validation():
    with pytest.raises(ValueError):
        strakos_nodes(1, 0, 1, 1, native())
    with pytest.raises(ValueError):
        strakos_nodes(5, 1, 1, 0.5, native())
    with pytest.raises(ValueError):
        strakos_nodes(5, 0, 1, 1.5, native())


# -- blurring ----------------------------------------------------------------------

def test_cluster_sizes_paper_case():
    sizes = cluster_sizes(12, 4)
    assert sizes[0] == 1
    assert sizes[-1] == 4
    assert sum(sizes) == 30
    assert sizes == sorted(sizes)


def test_cluster_sizes_rounding_half_away():
    # m=3, p=2: exact values 1, 1.5, 2 -> middle rounds away from zero
    assert cluster_sizes(3, 2) == [1, 2, 2]


def test_blur_identity_when_p_is_one():
    ctx = native()
    base = DistributionFunction((0.1, 1.0, 2.0),
                                (1 / 3, 1 / 3, 1 / 3))
    out = blur(base, 1e-12, 1, ctx)
    assert out.nodes == base.nodes
    assert out.weights == base.weights


def test_blur_weight_conservation():
    ctx = PrecisionContext(32)
    m = 6
    base = DistributionFunction(
        tuple(ctx.scalar(i + 1) for i in range(m)),
        tuple(ctx.scalar(Fraction(1, m)) for _ in range(m)))
    out = blur(base, ctx.scalar("1e-4"), 3, ctx)
    sizes = cluster_sizes(m, 3)
    assert out.size == sum(sizes)
    pos = 0
    for i, c in enumerate(sizes):
        chunk = out.weights[pos:pos + c]
        acc = sum(chunk, ctx.zero)
        assert abs(acc - base.weights[i]) <= ctx.tolerance
        # nodes sit symmetrically inside the radius (up to roundoff)
        radius = ctx.scalar("1e-4") * (1 + ctx.tolerance)
        for x in out.nodes[pos:pos + c]:
            assert abs(x - base.nodes[i]) <= radius
        pos += c
    assert abs(out.total_weight() - 1) <= ctx.tolerance


def test_blur_endpoints_inclusive():
    ctx = native()
    base = DistributionFunction((1.0, 2.0), (0.5, 0.5))
    out = blur(base, 0.25, 2, ctx)  # sizes [1, 2]
    assert out.nodes[0] == 1.0
    assert out.nodes[1] == pytest.approx(1.75)
    assert out.nodes[2] == pytest.approx(2.25)


def test_blur_rejects_overlap():
    ctx = native()
    base = DistributionFunction((1.0, 1.5), (0.5, 0.5))
    with pytest.raises(ValueError):
        blur(base, 0.3, 2, ctx)
    with pytest.raises(ValueError):
        blur(base, 0.0, 2, ctx)


# -- reconstruction -----------------------------------------------------------------

def test_rkpw_single_point():
    T = rkpw(DistributionFunction((5.0,), (1.0,)), native())
    assert T.alphas == (5.0,)
    assert T.betas == ()


def test_rkpw_symmetric_two_point():
    # orthonormal polynomials of the symmetric two-point measure by hand:
    # alpha_1 = integral of lambda = 0, beta_1^2 = integral of lambda^2 = 1
    ctx = PrecisionContext(32)
    T = rkpw(DistributionFunction((-1.0, 1.0), (0.5, 0.5)), ctx)
    assert abs(T.alphas[0]) < ctx.scalar("1e-30")
    assert abs(T.alphas[1]) < ctx.scalar("1e-30")
    assert abs(T.betas[0] - 1) < ctx.scalar("1e-30")


def test_rkpw_matches_lanczos_oracle():
    ctx = PrecisionContext(32)
    rng = random.Random(7)
    for _ in range(5):
        dist = random_distribution(rng, rng.randint(2, 10), ctx)
        T = rkpw(dist, ctx)
        oracle = jacobi_via_lanczos(dist, elevated(ctx))
        for a, b in zip(T.alphas, oracle.alphas):
            assert abs(a - b) <= ctx.scalar("1e-28")
        for a, b in zip(T.betas, oracle.betas):
            assert abs(a - b) <= ctx.scalar("1e-28")


def test_rkpw_roundtrip_recovers_measure():
    ctx = PrecisionContext(48)
    rng = random.Random(13)
    dist = random_distribution(rng, 8, ctx)
    T = rkpw(dist, ctx)
    ev = elevated(ctx)
    nodes, weights = gauss_rule(T.convert(ev), ev)
    tol_nodes = ev.scalar("1e-%d" % (48 - 10))
    tol_weights = ev.scalar("1e-%d" % (48 - 12))
    for i in range(8):
        assert abs(nodes[i] - ev.scalar(dist.nodes[i])) \
            <= tol_nodes * abs(ev.scalar(dist.nodes[i]))
        assert abs(weights[i] - ev.scalar(dist.weights[i])) <= tol_weights


def test_moment_matching():
    """e1^T T^j e1 reproduces the raw moments for j = 0..2N-1."""
    ctx = PrecisionContext(32)
    rng = random.Random(19)
    dist = random_distribution(rng, 6, ctx, lo=0.1, hi=2.0)
    T = rkpw(dist, ctx)
    ev = elevated(ctx)
    tol = ev.scalar("1e-%d" % (32 - 12))
    for j in range(12):
        m_direct = dist.moment(j, ev)
        m_jacobi = jacobi_moment(T, j, ev)
        assert abs(m_direct - m_jacobi) <= tol * abs(m_direct)


def test_gauss_rule_exact_for_inverse_moment():
    """At full order the quadrature is exact: sum w_i/x_i = (T^{-1})_{1,1}."""
    ctx = PrecisionContext(32)
    rng = random.Random(29)
    dist = random_distribution(rng, 7, ctx, lo=0.2, hi=3.0)
    T = rkpw(dist, ctx)
    direct = sum((ctx.scalar(w) / ctx.scalar(x)
                  for x, w in zip(dist.nodes, dist.weights)), ctx.zero)
    via_T = inverse_first_entry(T, ctx)
    assert abs(direct - via_T) <= ctx.tolerance * direct


# -- model problem ---------------------------------------------------------------------

def test_model_problem_paper_dimensions(paper_run):
    problem = paper_run.problem
    assert problem.n == 30
    assert problem.distribution.size == 30
    lo = problem.eval_ctx.scalar("1e-6") - problem.eval_ctx.scalar("1e-10")
    hi = problem.eval_ctx.scalar("1e-6") + problem.eval_ctx.scalar("1e-10")
    assert lo <= problem.lambda_min <= hi


def test_model_problem_native_rounding(paper_run):
    problem = paper_run.problem
    for a, ra in zip(problem.A.alphas, problem.reference_T.alphas):
        assert a == float(ra)
    for b, rb in zip(problem.A.betas, problem.reference_T.betas):
        assert b == float(rb)
    assert problem.b[0] == 1.0 and all(v == 0.0 for v in problem.b[1:])


def test_model_problem_degenerate_blur():
    ctx = PrecisionContext(32)
    problem = build_model_problem(5, "1e-3", "1", "0.9", "1e-12", 1, ctx)
    assert problem.n == 5


def test_model_problem_rejects_zero_lam1():
    with pytest.raises(ValueError):
        build_model_problem(5, "0", "1", "0.9", "1e-12", 1,
                            PrecisionContext(32))


def test_blur_radius_insensitivity():
    """Halving the blur radius preserves the size and the cluster weights
    (the lambda_min shift is O(delta))."""
    ctx = PrecisionContext(48)
    p1 = build_model_problem(8, "1e-5", "1", "0.8", "1e-10", 3, ctx)
    p2 = build_model_problem(8, "1e-5", "1", "0.8", "5e-11", 3, ctx)
    assert p1.n == p2.n
    for w1, w2 in zip(p1.distribution.weights, p2.distribution.weights):
        assert w1 == w2
    diff = abs(p1.eval_ctx.scalar(p1.lambda_min)
               - p1.eval_ctx.scalar(p2.lambda_min))
    assert diff <= p1.eval_ctx.scalar("3e-10")


# -- text formats ----------------------------------------------------------------------

def test_jacobi_file_roundtrip(tmp_path):
    ctx = PrecisionContext(48)
    T = JacobiMatrix((ctx.scalar("1") / 3, ctx.scalar("2") / 3),
                     (ctx.scalar("1") / 7,))
    path = tmp_path / "T.jacobi"
    write_jacobi(T, str(path), ctx)
    back = read_jacobi(str(path), ctx)
    assert back.order == 2
    for a, b in zip(T.alphas + T.betas, back.alphas + back.betas):
        assert abs(a - b) <= ctx.scalar("1e-46") * abs(a)
    header = path.read_text().splitlines()[0]
    assert header == "jacobi 2 48"


def test_jacobi_file_native_exact(tmp_path):
    ctx = native()
    T = JacobiMatrix((0.1, 0.2), (0.3,))
    path = tmp_path / "T.jacobi"
    write_jacobi(T, str(path), ctx)
    back = read_jacobi(str(path), ctx)
    assert back.alphas == T.alphas and back.betas == T.betas


def test_jacobi_file_errors(tmp_path):
    path = tmp_path / "bad.jacobi"
    path.write_text("nonsense\n")
    with pytest.raises(ValueError):
        read_jacobi(str(path), native())
    path.write_text("jacobi 3 0\n1.0\n2.0\n")
    with pytest.raises(ValueError):
        read_jacobi(str(path), native())


def test_distribution_file_roundtrip(tmp_path):
    ctx = PrecisionContext(32)
    dist = DistributionFunction(
        (ctx.scalar("0.5"), ctx.scalar("1.25")),
        (ctx.scalar("0.25"), ctx.scalar("0.75")))
    path = tmp_path / "dist.txt"
    write_distribution(dist, str(path), ctx)
    back = read_distribution(str(path), ctx)
    assert back.nodes == dist.nodes
    assert back.weights == dist.weights
