"""Lanczos and conjugate gradient iterations at configurable precision.

Operators are anything with ``n``, ``matvec(v)`` and ``infnorm_estimate()``;
tridiagonal model problems and Matrix Market sparse matrices both qualify.
The solver primitives never stop on their own: drivers decide when to stop
(max iterations, residual threshold, breakdown), and a completed run is a
CGTrace of per-iteration coefficients that every bound estimator and
diagnostic consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .tridiag import JacobiMatrix, NotPositiveDefiniteError


class BreakdownError(RuntimeError):
    pass


# -- operators ---------------------------------------------------------------

class JacobiOperator:
    """Matrix-vector products with a symmetric tridiagonal matrix."""

    def __init__(self, T):
        self.T = T
        self.n = T.order

    def matvec(self, v):
        return self.T.matvec(v)

    def infnorm_estimate(self):
        return float(self.T.infnorm())


class DiagonalOperator:
    def __init__(self, entries):
        self.entries = tuple(entries)
        self.n = len(self.entries)

    def matvec(self, v):
        return [d * x for d, x in zip(self.entries, v)]

    def infnorm_estimate(self):
        return max(abs(float(d)) for d in self.entries)


class DenseOperator:
    def __init__(self, rows):
        self.rows = [tuple(r) for r in rows]
        self.n = len(self.rows)
        for r in self.rows:
            if len(r) != self.n:
                raise ValueError("matrix must be square")

    def matvec(self, v):
        out = []
        for row in self.rows:
            acc = row[0] * v[0]
            for j in range(1, self.n):
                acc = acc + row[j] * v[j]
            out.append(acc)
        return out

    def infnorm_estimate(self):
        return max(sum(abs(float(x)) for x in row) for row in self.rows)


class SparseSymmetricOperator:
    """Symmetric sparse operator from lower-triangle coordinate entries."""

    def __init__(self, n, entries):
        self.n = n
        self.entries = tuple((i, j, v) for i, j, v in entries)
        for i, j, _ in self.entries:
            if not (0 <= j <= i < n):
                raise ValueError("entries must be lower-triangle, 0-based")

    def matvec(self, v):
        out = [0 * v[0]] * self.n
        for i, j, a in self.entries:
            out[i] = out[i] + a * v[j]
            if i != j:
                out[j] = out[j] + a * v[i]
        return out

    def infnorm_estimate(self):
        rowsum = [0.0] * self.n
        for i, j, a in self.entries:
            rowsum[i] += abs(float(a))
            if i != j:
                rowsum[j] += abs(float(a))
        return max(rowsum)


# -- vector helpers ----------------------------------------------------------

def dot(u, v, ctx):
    acc = ctx.zero
    for a, b in zip(u, v):
        acc = acc + a * b
    return acc


def norm(u, ctx):
    return ctx.sqrt(dot(u, u, ctx))


# -- Lanczos -----------------------------------------------------------------

@dataclass
class LanczosState:
    """State after k completed Lanczos steps: coefficients so far, the two
    active basis vectors, and optionally the full retained basis."""

    k: int
    alphas: list
    betas: list
    v_prev: list
    v_cur: list
    anorm: float
    finished: bool = False
    basis: list = None

    def jacobi(self):
        if self.k == 0:
            raise ValueError("no steps taken yet")
        return JacobiMatrix(tuple(self.alphas), tuple(self.betas))


def lanczos_start(A, v, ctx, retain_basis=False):
    v = [ctx.scalar(x) for x in v]
    nv = norm(v, ctx)
    if not nv > 0:
        raise ValueError("starting vector is zero")
    v1 = [x / nv for x in v]
    return LanczosState(
        k=0, alphas=[], betas=[], v_prev=[ctx.zero] * len(v1), v_cur=v1,
        anorm=A.infnorm_estimate(), basis=[list(v1)] if retain_basis else None,
    )


def _breakdown_threshold(ctx, anorm):
    digits = ctx.decimal_digits if not ctx.is_native else 16
    return ctx.scalar(10) ** (-(digits - 4)) * ctx.scalar(anorm)


def lanczos_step(state, A, ctx, reorthogonalize=False):
    """One three-term recurrence step.  When the new off-diagonal falls
    under the breakdown threshold the Krylov space is (numerically)
    invariant: the state is marked finished instead of raising."""
    if state.finished:
        raise BreakdownError("iteration already reached an invariant subspace")
    k = state.k
    w = A.matvec(state.v_cur)
    if k > 0:
        b = state.betas[k - 1]
        w = [w[i] - b * state.v_prev[i] for i in range(len(w))]
    alpha = dot(state.v_cur, w, ctx)
    w = [w[i] - alpha * state.v_cur[i] for i in range(len(w))]
    if reorthogonalize and state.basis is not None:
        for bvec in state.basis:
            c = dot(bvec, w, ctx)
            w = [w[i] - c * bvec[i] for i in range(len(w))]
    beta = norm(w, ctx)
    state.alphas.append(alpha)
    state.k = k + 1
    if beta <= _breakdown_threshold(ctx, state.anorm):
        state.finished = True
        return state
    state.betas.append(beta)
    v_next = [x / beta for x in w]
    state.v_prev = state.v_cur
    state.v_cur = v_next
    if state.basis is not None:
        state.basis.append(list(v_next))
    return state


def run_lanczos(A, v, steps, ctx, reorthogonalize=False):
    state = lanczos_start(A, v, ctx, retain_basis=reorthogonalize)
    for _ in range(steps):
        lanczos_step(state, A, ctx, reorthogonalize=reorthogonalize)
        if state.finished:
            break
    return state


# -- conjugate gradients -------------------------------------------------------

@dataclass
class CGState:
    """Iterate k of the two-term CG recurrence.

    gamma_prev is the step length that produced x_k; delta is the residual
    ratio computed at step k (undefined at k = 0)."""

    k: int
    x: list
    r: list
    p: list
    gamma_prev: object
    delta: object
    rnorm2: object


def cg_start(A, b, ctx, x0=None):
    b = [ctx.scalar(v) for v in b]
    if x0 is None:
        x = [ctx.zero] * len(b)
        r = list(b)
    else:
        x = [ctx.scalar(v) for v in x0]
        ax = A.matvec(x)
        r = [b[i] - ax[i] for i in range(len(b))]
    return CGState(k=0, x=x, r=r, p=list(r), gamma_prev=None, delta=None,
                   rnorm2=dot(r, r, ctx))


def cg_step(state, A, ctx):
    """One CG update x_{k+1} = x_k + gamma_k p_k with the standard
    residual and direction recurrences."""
    if not state.rnorm2 > 0:
        raise BreakdownError("residual is zero; system already solved")
    Ap = A.matvec(state.p)
    pap = dot(state.p, Ap, ctx)
    if not pap > 0:
        raise NotPositiveDefiniteError("matrix not SPD: p^T A p = %s" % pap)
    gamma = state.rnorm2 / pap
    x = [state.x[i] + gamma * state.p[i] for i in range(len(state.x))]
    r = [state.r[i] - gamma * Ap[i] for i in range(len(state.r))]
    rnorm2 = dot(r, r, ctx)
    delta = rnorm2 / state.rnorm2
    p = [r[i] + delta * state.p[i] for i in range(len(r))]
    return CGState(k=state.k + 1, x=x, r=r, p=p, gamma_prev=gamma,
                   delta=delta, rnorm2=rnorm2)


# -- trace ---------------------------------------------------------------------

@dataclass
class CGRecord:
    k: int
    gamma: object = None      # gamma_k; None on the final record
    delta: object = None      # delta_k; None at k = 0
    rnorm2: object = None     # ||r_k||^2
    true_err2: object = None  # ||x - x_k||_A^2 when the solution is known
    theta1: object = None     # smallest Ritz value of T_k (filled offline)


@dataclass
class CGTrace:
    """Append-only per-iteration record of a CG run."""

    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def steps(self):
        """Number of completed CG steps (defined gamma entries)."""
        return sum(1 for r in self.records if r.gamma is not None)

    def gamma(self, k):
        return self.records[k].gamma

    def delta(self, k):
        return self.records[k].delta

    def rnorm2(self, k):
        return self.records[k].rnorm2

    def true_err2(self, k):
        return self.records[k].true_err2

    def gauss_term(self, k):
        """Delta_k = gamma_k ||r_k||^2, one telescoping error increment."""
        return self.records[k].gamma * self.records[k].rnorm2

    def gauss_sum(self, ell, k):
        """Delta_{ell:k}; empty ranges (k < ell) give zero."""
        if k < ell:
            return 0 * self.records[0].rnorm2
        acc = self.gauss_term(ell)
        for j in range(ell + 1, k + 1):
            acc = acc + self.gauss_term(j)
        return acc


def true_error2(x_k, exact_solution, A, ctx):
    """Squared A-norm of the error of an iterate against a known solution.

    Evaluate under a context at least as precise as the one that produced
    exact_solution; the subtraction cancels roughly half the digits of the
    current error level.
    """
    d = [ctx.scalar(e) - ctx.scalar(x) for e, x in zip(exact_solution, x_k)]
    return dot(d, A.matvec(d), ctx)


def run_cg(A, b, ctx, max_iters, x0=None, exact_solution=None, eval_ctx=None,
           rnorm_stop=None, callback=None):
    """Drive CG for up to max_iters steps, recording a CGTrace.

    Stops early when ||r_k|| <= rnorm_stop (if given) or on exact breakdown
    (zero residual).  ``callback(k, state_k, state_k+1)`` runs after each
    step, before the next one; estimators hook in there.  True errors are
    evaluated under eval_ctx when an exact solution is supplied.
    """
    trace = CGTrace()
    state = cg_start(A, b, ctx, x0=x0)
    if eval_ctx is None:
        eval_ctx = ctx
    A_eval = A
    if exact_solution is not None and eval_ctx is not ctx:
        if isinstance(A, JacobiOperator):
            A_eval = JacobiOperator(A.T.convert(eval_ctx))

    def _err(st):
        if exact_solution is None:
            return None
        return true_error2(st.x, exact_solution, A_eval, eval_ctx)

    trace.records.append(CGRecord(k=0, rnorm2=state.rnorm2, true_err2=_err(state)))
    for _ in range(max_iters):
        if not state.rnorm2 > 0:
            break
        if rnorm_stop is not None and ctx.sqrt(state.rnorm2) <= rnorm_stop:
            break
        new = cg_step(state, A, ctx)
        trace.records[-1].gamma = new.gamma_prev
        trace.records.append(CGRecord(k=new.k, delta=new.delta,
                                      rnorm2=new.rnorm2, true_err2=_err(new)))
        if callback is not None:
            callback(state.k, state, new)
        state = new
    return trace, state


def cg_to_lanczos(trace, upto=None):
    """Jacobi matrix implicitly generated by a CG run.

    alpha_1 = 1/gamma_0, beta_j = sqrt(delta_j)/gamma_{j-1},
    alpha_{j+1} = 1/gamma_j + delta_j/gamma_{j-1}.
    """
    ks = trace.steps if upto is None else upto
    if ks < 1:
        raise ValueError("trace holds no completed steps")
    gammas = [trace.gamma(j) for j in range(ks)]
    deltas = [trace.delta(j) for j in range(1, ks)]
    for j, g in enumerate(gammas):
        if g is None or not g > 0:
            raise ValueError("gamma_%d = %s is not positive" % (j, g))
    for j, d in enumerate(deltas):
        if d is None or not d > 0:
            raise ValueError("delta_%d = %s is not positive" % (j + 1, d))
    alphas = [1 / gammas[0]]
    betas = []
    for j in range(1, ks):
        betas.append(deltas[j - 1] ** 0.5 / gammas[j - 1])
        alphas.append(1 / gammas[j] + deltas[j - 1] / gammas[j - 1])
    return JacobiMatrix(tuple(alphas), tuple(betas))


# -- Matrix Market -------------------------------------------------------------

class MatrixMarketError(ValueError):
    pass


def read_matrix_market(path, ctx):
    """Parse a ``matrix coordinate real symmetric`` file into a
    SparseSymmetricOperator with entries at context precision."""
    with open(path) as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError("%s: empty file" % path)
    header = lines[0].strip().split()
    expected = ["%%MatrixMarket", "matrix", "coordinate", "real", "symmetric"]
    if [t.lower() for t in header] != [t.lower() for t in expected]:
        raise MatrixMarketError(
            "%s:1: header must be %r, got %r" % (path, " ".join(expected),
                                                 lines[0].strip())
        )
    idx = 1
    while idx < len(lines) and lines[idx].lstrip().startswith("%"):
        idx += 1
    if idx >= len(lines):
        raise MatrixMarketError("%s: missing size line" % path)
    parts = lines[idx].split()
    if len(parts) != 3:
        raise MatrixMarketError("%s:%d: malformed size line" % (path, idx + 1))
    try:
        nrows, ncols, nnz = (int(p) for p in parts)
    except ValueError:
        raise MatrixMarketError("%s:%d: malformed size line" % (path, idx + 1))
    if nrows != ncols:
        raise MatrixMarketError("%s:%d: matrix must be square" % (path, idx + 1))
    entries = []
    lineno = idx + 1
    for raw in lines[idx + 1:]:
        lineno += 1
        raw = raw.strip()
        if not raw or raw.startswith("%"):
            continue
        parts = raw.split()
        if len(parts) != 3:
            raise MatrixMarketError(
                "%s:%d: expected 'i j value', got %r" % (path, lineno, raw))
        try:
            i = int(parts[0])
            j = int(parts[1])
        except ValueError:
            raise MatrixMarketError("%s:%d: bad indices %r" % (path, lineno, raw))
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError("%s:%d: index out of range" % (path, lineno))
        try:
            v = ctx.scalar(parts[2])
        except Exception:
            raise MatrixMarketError("%s:%d: bad value %r" % (path, lineno, parts[2]))
        if j > i:
            i, j = j, i
        entries.append((i - 1, j - 1, v))
    if len(entries) != nnz:
        raise MatrixMarketError(
            "%s: size line promises %d entries, found %d" % (path, nnz, len(entries)))
    return SparseSymmetricOperator(nrows, entries)


def write_matrix_market(op, path):
    """Export an operator's lower triangle in coordinate format.

    Jacobi operators export their (native double) entries with shortest
    round-trip decimals, so re-ingesting reproduces the matrix exactly.
    """
    if isinstance(op, JacobiOperator):
        T = op.T
        n = T.order
        entries = [(i, i, T.alphas[i]) for i in range(n)]
        entries += [(i + 1, i, T.betas[i]) for i in range(n - 1)]
        entries.sort()
    elif isinstance(op, SparseSymmetricOperator):
        n = op.n
        entries = sorted(op.entries)
    else:
        raise TypeError("unsupported operator type %r" % type(op).__name__)
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write("%d %d %d\n" % (n, n, len(entries)))
        for i, j, v in entries:
            fh.write("%d %d %s\n" % (i + 1, j + 1, repr(float(v))))


# -- trace CSV -------------------------------------------------------------------

TRACE_HEADER = "k,gamma,delta,rnorm2,true_err2"


def write_trace_csv(trace, path, ctx, err_ctx=None):
    if err_ctx is None:
        err_ctx = ctx
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")
        for rec in trace.records:
            fh.write("%d,%s,%s,%s,%s\n" % (
                rec.k,
                ctx.format(rec.gamma),
                ctx.format(rec.delta),
                ctx.format(rec.rnorm2),
                err_ctx.format(rec.true_err2, digits=ctx.decimal_digits or None),
            ))


def read_trace_csv(path, ctx):
    trace = CGTrace()
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise ValueError("%s: unexpected header %r" % (path, header))
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            parts = raw.split(",")
            if len(parts) != 5:
                raise ValueError("%s: malformed row %r" % (path, raw))
            trace.records.append(CGRecord(
                k=int(parts[0]),
                gamma=ctx.parse(parts[1]),
                delta=ctx.parse(parts[2]),
                rnorm2=ctx.parse(parts[3]),
                true_err2=ctx.parse(parts[4]),
            ))
    return trace
