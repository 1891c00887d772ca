"""Discrete spectral distributions and the model problem built from them.

A distribution function here is a finite positive measure given by strictly
ascending nodes and weights summing to one.  The module constructs the
geometrically graded node family, blurs each node into a small cluster,
reconstructs the Jacobi matrix of the blurred measure, and packages the
native-precision image of that matrix as a test problem with a known
high-precision solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .precision import PrecisionContext, elevated
from .tridiag import JacobiMatrix, eig_tridiagonal, solve_posdef


class ReconstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class DistributionFunction:
    """Stepwise-constant distribution: ascending ``nodes`` with positive
    ``weights``.  Weights are expected to sum to one (checked against a
    context tolerance where a context is available)."""

    nodes: tuple
    weights: tuple

    def __post_init__(self):
        nodes = tuple(self.nodes)
        weights = tuple(self.weights)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if len(nodes) == 0 or len(nodes) != len(weights):
            raise ValueError("nodes and weights must be nonempty and equal length")
        for i in range(len(nodes) - 1):
            if not nodes[i] < nodes[i + 1]:
                raise ValueError("nodes must be strictly increasing at index %d" % i)
        for i, w in enumerate(weights):
            if not w > 0:
                raise ValueError("weight %d = %s is not positive" % (i, w))

    @property
    def size(self):
        return len(self.nodes)

    def total_weight(self):
        acc = self.weights[0]
        for w in self.weights[1:]:
            acc = acc + w
        return acc

    def check_normalized(self, ctx):
        if abs(self.total_weight() - ctx.one) > ctx.tolerance:
            raise ValueError("weights do not sum to 1 within context tolerance")

    def moment(self, j, ctx):
        """j-th raw moment, sum of w_i * node_i^j."""
        acc = ctx.zero
        for x, w in zip(self.nodes, self.weights):
            acc = acc + ctx.scalar(w) * ctx.scalar(x) ** j
        return acc


def strakos_nodes(m, lam1, lamm, rho, ctx):
    """Geometrically graded nodes on [lam1, lamm].

    node_1 = lam1 and node_i = lam1 + ((i-1)/(m-1)) (lamm-lam1) rho^(m-i)
    for i = 2..m; rho in (0, 1] controls how strongly the nodes accumulate
    at the lower end (rho = 1 gives uniform spacing).
    """
    m = int(m)
    if m < 2:
        raise ValueError("m must be at least 2")
    lam1 = ctx.scalar(lam1)
    lamm = ctx.scalar(lamm)
    rho = ctx.scalar(rho)
    if not (lam1 >= 0 and lamm > lam1):
        raise ValueError("need 0 <= lam1 < lamm")
    if not (0 < rho <= 1):
        raise ValueError("need 0 < rho <= 1")
    span = lamm - lam1
    nodes = [lam1]
    for i in range(2, m + 1):
        frac = ctx.scalar(Fraction(i - 1, m - 1))
        nodes.append(lam1 + frac * span * rho ** (m - i))
    for i in range(m - 1):
        if not nodes[i] < nodes[i + 1]:
            raise ValueError("generated nodes are not increasing at index %d" % i)
    return nodes


def cluster_sizes(m, p):
    """Cluster cardinalities growing linearly from 1 to p over m nodes,
    rounded half away from zero (exact rational arithmetic)."""
    m = int(m)
    p = int(p)
    if m < 2:
        raise ValueError("m must be at least 2")
    if p < 1:
        raise ValueError("p must be at least 1")
    sizes = []
    for i in range(1, m + 1):
        num = (p - 1) * i + (m - p)
        den = m - 1
        sizes.append((2 * num + den) // (2 * den))
    return sizes


def blur(base, delta, p, ctx):
    """Replace each node by a symmetric cluster of equal-weight nodes.

    Cluster i holds c_i nodes uniformly spaced (endpoints included) on
    [node_i - delta, node_i + delta], each carrying weight_i / c_i; c_i
    grows linearly from 1 to p across the nodes.  Clusters must not
    overlap.
    """
    delta = ctx.scalar(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    m = base.size
    sizes = cluster_sizes(m, p)
    two = ctx.one + ctx.one
    for i in range(m - 1):
        if not two * delta < base.nodes[i + 1] - base.nodes[i]:
            raise ValueError(
                "overlapping clusters: delta too large for gap at index %d" % i
            )
    nodes = []
    weights = []
    for i in range(m):
        c = sizes[i]
        center = ctx.scalar(base.nodes[i])
        w = ctx.scalar(base.weights[i]) / c
        if c == 1:
            nodes.append(center)
            weights.append(w)
            continue
        lo = center - delta
        step = (two * delta) / (c - 1)
        for j in range(c):
            nodes.append(lo + step * j)
            weights.append(w)
    return DistributionFunction(tuple(nodes), tuple(weights))


def _tridiagonalize_fixing_e1(M, ctx):
    """Reduce a dense symmetric matrix to tridiagonal form by Householder
    similarity transformations that leave the first basis vector fixed.
    M is a list of row lists and is destroyed."""
    n = len(M)
    zero = ctx.zero
    two = ctx.one + ctx.one
    for j in range(n - 2):
        col = [M[i][j] for i in range(j + 1, n)]
        off = zero
        for v in col[1:]:
            off = off + v * v
        if off == 0:
            continue
        sigma = ctx.sqrt(col[0] * col[0] + off)
        alpha = -sigma if col[0] >= 0 else sigma
        u = list(col)
        u[0] = u[0] - alpha
        unorm2 = zero
        for v in u:
            unorm2 = unorm2 + v * v
        if unorm2 == 0:
            continue
        unorm = ctx.sqrt(unorm2)
        u = [v / unorm for v in u]
        # q = M u restricted to the full index range, then the symmetric
        # rank-two update M <- M - 2 u w^T - 2 w u^T with w = q - (u^T q) u
        q = []
        for r in range(n):
            acc = zero
            row = M[r]
            for s in range(j + 1, n):
                acc = acc + row[s] * u[s - j - 1]
            q.append(acc)
        kappa = zero
        for s in range(j + 1, n):
            kappa = kappa + u[s - j - 1] * q[s]
        w = list(q)
        for s in range(j + 1, n):
            w[s] = w[s] - kappa * u[s - j - 1]
        for r in range(n):
            ur = u[r - j - 1] if r > j else zero
            wr = w[r]
            if ur == 0 and wr == 0:
                continue
            row = M[r]
            for s in range(n):
                us = u[s - j - 1] if s > j else zero
                row[s] = row[s] - two * (ur * w[s] + wr * us)
    alphas = [M[i][i] for i in range(n)]
    betas = [M[i + 1][i] for i in range(n - 1)]
    return alphas, betas


def rkpw(dist, ctx):
    """Jacobi matrix of a discrete measure from its nodes and weights.

    Builds the orthogonal reduction of diag(nodes) whose first basis vector
    is sqrt(weights): the reduced tridiagonal matrix has the nodes as
    eigenvalues and the weights as squared first eigenvector components.
    All transformations are orthogonal, and the reduction runs at doubled
    guard precision before rounding the coefficients to ctx, so each output
    coefficient carries a single rounding.
    """
    n = dist.size
    if n == 1:
        return JacobiMatrix((ctx.scalar(dist.nodes[0]),), ())
    work = elevated(ctx)
    x = [work.scalar(v) for v in dist.nodes]
    w = [work.scalar(v) for v in dist.weights]
    total = w[0]
    for v in w[1:]:
        total = total + v
    u = [work.sqrt(v / total) for v in w]
    zero = work.zero
    # Householder H with H e1 = u:  H = I - v v^T / kappa, v = u - e1,
    # kappa = 1 - u[0] = v^T v / 2.  M = H diag(x) H.
    kappa = work.one - u[0]
    if kappa == 0:
        M = [[x[i] if i == j else zero for j in range(n)] for i in range(n)]
    else:
        v = list(u)
        v[0] = v[0] - work.one
        dv = [x[i] * v[i] for i in range(n)]
        vdv = zero
        for i in range(n):
            vdv = vdv + v[i] * dv[i]
        M = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = -(v[i] * dv[j] + dv[i] * v[j]) / kappa \
                    + (vdv / kappa / kappa) * v[i] * v[j]
                if i == j:
                    acc = acc + x[i]
                row.append(acc)
            M.append(row)
    alphas, betas = _tridiagonalize_fixing_e1(M, work)
    # sign-flip similarity (first basis vector untouched) makes every
    # off-diagonal entry its absolute value; alphas are unchanged
    betas = [abs(b) for b in betas]
    out_alphas = tuple(ctx.scalar(a) for a in alphas)
    out_betas = []
    for j, b in enumerate(betas):
        rb = ctx.scalar(b)
        if not rb > 0:
            raise ReconstructionError(
                "nonpositive off-diagonal at index %d; the measure is "
                "numerically degenerate at this precision, retry with more "
                "digits" % j
            )
        out_betas.append(rb)
    return JacobiMatrix(out_alphas, tuple(out_betas))


def jacobi_via_lanczos(dist, ctx):
    """Cross-check reconstruction: explicit fully reorthogonalized Lanczos
    on diag(nodes) started from sqrt(weights).  Independent of rkpw; used
    as a verification oracle, not as the production path."""
    n = dist.size
    x = [ctx.scalar(v) for v in dist.nodes]
    w = [ctx.scalar(v) for v in dist.weights]
    total = w[0]
    for v in w[1:]:
        total = total + v
    v1 = [ctx.sqrt(wi / total) for wi in w]
    basis = [v1]
    alphas = []
    betas = []
    vk = v1
    vprev = None
    beta_prev = ctx.zero
    for k in range(n):
        wvec = [x[i] * vk[i] for i in range(n)]
        if vprev is not None:
            wvec = [wvec[i] - beta_prev * vprev[i] for i in range(n)]
        alpha = ctx.zero
        for i in range(n):
            alpha = alpha + vk[i] * wvec[i]
        alphas.append(alpha)
        if k == n - 1:
            break
        wvec = [wvec[i] - alpha * vk[i] for i in range(n)]
        for _ in range(2):
            for b in basis:
                coef = ctx.zero
                for i in range(n):
                    coef = coef + b[i] * wvec[i]
                wvec = [wvec[i] - coef * b[i] for i in range(n)]
        norm2 = ctx.zero
        for val in wvec:
            norm2 = norm2 + val * val
        beta = ctx.sqrt(norm2)
        if not beta > 0:
            raise ReconstructionError("breakdown at step %d" % (k + 1))
        betas.append(beta)
        vnext = [val / beta for val in wvec]
        basis.append(vnext)
        vprev, vk, beta_prev = vk, vnext, beta
    return JacobiMatrix(tuple(alphas), tuple(betas))


def jacobi_moment(T, j, ctx):
    """e1^T T^j e1 computed by repeated tridiagonal products."""
    Tc = T.convert(ctx)
    v = [ctx.zero] * T.order
    v[0] = ctx.one
    for _ in range(j):
        v = Tc.matvec(v)
    return v[0]


def gauss_rule(T, ctx):
    """Gauss quadrature of the measure attached to T: (eigenvalues,
    squared first eigenvector components)."""
    dec = eig_tridiagonal(T, ctx)
    return list(dec.thetas), [c * c for c in dec.first_components]


@dataclass(frozen=True)
class ModelProblem:
    """Native-precision test problem with high-precision reference data.

    ``A`` is the entrywise binary64 rounding of ``reference_T``; ``b`` is
    the first coordinate vector.  ``lambda_min`` and ``exact_solution``
    are computed from A itself under ``eval_ctx`` (doubled digits), so
    true errors of iterates can be evaluated well below the tolerances
    being tested.
    """

    A: JacobiMatrix
    b: tuple
    reference_T: JacobiMatrix
    distribution: DistributionFunction
    lambda_min: object
    exact_solution: tuple
    ctx: PrecisionContext
    eval_ctx: PrecisionContext
    params: dict

    @property
    def n(self):
        return self.A.order


def build_model_problem(m, lam1, lamm, rho, delta, p, ctx, eval_ctx=None):
    """Assemble the clustered-spectrum model problem.

    Pipeline: graded nodes -> uniform weights 1/m -> blurred clusters ->
    Jacobi matrix at ctx precision -> entrywise double rounding.  The
    smallest eigenvalue and the exact solution of the rounded matrix are
    computed under eval_ctx (default: doubled digits).
    """
    lam1s = ctx.scalar(lam1)
    if not lam1s > 0:
        raise ValueError("lam1 must be positive")
    nodes = strakos_nodes(m, lam1, lamm, rho, ctx)
    uniform = ctx.scalar(Fraction(1, int(m)))
    base = DistributionFunction(tuple(nodes), (uniform,) * int(m))
    blurred = blur(base, delta, p, ctx)
    blurred.check_normalized(ctx)
    reference_T = rkpw(blurred, ctx)
    A = JacobiMatrix(
        tuple(float(a) for a in reference_T.alphas),
        tuple(float(b) for b in reference_T.betas),
    )
    if eval_ctx is None:
        eval_ctx = elevated(ctx)
    A_eval = A.convert(eval_ctx)
    lambda_min = eig_tridiagonal(A_eval, eval_ctx).thetas[0]
    if not lambda_min > 0:
        raise ValueError("rounded matrix lost positive definiteness")
    e1 = [eval_ctx.zero] * A.order
    e1[0] = eval_ctx.one
    exact = solve_posdef(A_eval, e1, eval_ctx)
    b = tuple(1.0 if i == 0 else 0.0 for i in range(A.order))
    params = {
        "m": int(m), "lam1": str(lam1), "lamm": str(lamm), "rho": str(rho),
        "delta": str(delta), "p": int(p),
        "digits": ctx.decimal_digits,
    }
    return ModelProblem(
        A=A, b=b, reference_T=reference_T, distribution=blurred,
        lambda_min=lambda_min, exact_solution=tuple(exact),
        ctx=ctx, eval_ctx=eval_ctx, params=params,
    )


# -- text formats ----------------------------------------------------------

def write_jacobi(T, path, ctx):
    """Persist a Jacobi matrix: header ``jacobi <N> <digits>``, then the N
    diagonal entries and N-1 off-diagonal entries, one decimal per line."""
    lines = ["jacobi %d %d" % (T.order, ctx.decimal_digits)]
    lines.extend(ctx.format(a) for a in T.alphas)
    lines.extend(ctx.format(b) for b in T.betas)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_jacobi(path, ctx):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("jacobi"):
        raise ValueError("%s: missing jacobi header" % path)
    parts = lines[0].split()
    if len(parts) != 3:
        raise ValueError("%s: malformed header %r" % (path, lines[0]))
    n = int(parts[1])
    if len(lines) != 1 + n + (n - 1):
        raise ValueError("%s: expected %d entries, found %d"
                         % (path, 2 * n - 1, len(lines) - 1))
    alphas = tuple(ctx.parse(s) for s in lines[1:1 + n])
    betas = tuple(ctx.parse(s) for s in lines[1 + n:])
    return JacobiMatrix(alphas, betas)


def write_distribution(dist, path, ctx):
    """Persist a distribution as ``node weight`` lines in ascending order."""
    with open(path, "w") as fh:
        for x, w in zip(dist.nodes, dist.weights):
            fh.write("%s %s\n" % (ctx.format(x), ctx.format(w)))


def read_distribution(path, ctx):
    nodes = []
    weights = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError("%s: malformed line %r" % (path, ln))
            nodes.append(ctx.parse(parts[0]))
            weights.append(ctx.parse(parts[1]))
    return DistributionFunction(tuple(nodes), tuple(weights))
