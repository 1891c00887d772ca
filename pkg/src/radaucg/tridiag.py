"""Symmetric tridiagonal (Jacobi) matrices: eigensolves, shifted solves, LDL^T.

A Jacobi matrix has strictly positive off-diagonal entries, which guarantees
simple eigenvalues and nonzero first/last eigenvector components; everything
downstream (quadrature weights, Ritz residuals) relies on that.
"""

from __future__ import annotations

from dataclasses import dataclass


class EigenConvergenceError(RuntimeError):
    """QL iteration failed to isolate an eigenvalue within the iteration cap."""

    def __init__(self, index, cap):
        self.index = index
        self.cap = cap
        super().__init__(
            "eigenvalue %d did not converge within %d QL iterations" % (index, cap)
        )


class ShiftNotBelowSpectrumError(ValueError):
    pass


class NotPositiveDefiniteError(ValueError):
    pass


@dataclass(frozen=True)
class JacobiMatrix:
    """Symmetric tridiagonal matrix with diagonal ``alphas`` and positive
    off-diagonal ``betas`` (len(betas) == len(alphas) - 1)."""

    alphas: tuple
    betas: tuple

    def __post_init__(self):
        alphas = tuple(self.alphas)
        betas = tuple(self.betas)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "betas", betas)
        if len(alphas) == 0:
            raise ValueError("empty Jacobi matrix")
        if len(betas) != len(alphas) - 1:
            raise ValueError(
                "need %d off-diagonal entries, got %d" % (len(alphas) - 1, len(betas))
            )
        for j, b in enumerate(betas):
            if not b > 0:
                raise ValueError("beta[%d] = %s is not strictly positive" % (j, b))

    @property
    def order(self):
        return len(self.alphas)

    def leading(self, k):
        """Leading principal k-by-k submatrix."""
        if not 1 <= k <= self.order:
            raise ValueError("k must be in [1, %d]" % self.order)
        return JacobiMatrix(self.alphas[:k], self.betas[: k - 1])

    def infnorm(self):
        n = self.order
        best = abs(self.alphas[0])
        for i in range(n):
            row = abs(self.alphas[i])
            if i > 0:
                row = row + self.betas[i - 1]
            if i < n - 1:
                row = row + self.betas[i]
            if row > best:
                best = row
        return best

    def matvec(self, v):
        n = self.order
        if len(v) != n:
            raise ValueError("dimension mismatch")
        out = []
        for i in range(n):
            acc = self.alphas[i] * v[i]
            if i > 0:
                acc = acc + self.betas[i - 1] * v[i - 1]
            if i < n - 1:
                acc = acc + self.betas[i] * v[i + 1]
            out.append(acc)
        return out

    def convert(self, ctx):
        """Same matrix with entries converted into ctx scalars."""
        return JacobiMatrix(
            tuple(ctx.scalar(a) for a in self.alphas),
            tuple(ctx.scalar(b) for b in self.betas),
        )


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral decomposition of a Jacobi matrix.

    ``thetas`` ascend strictly; ``vectors[i]`` is the normalized eigenvector
    for thetas[i] with its first component made nonnegative.  The squared
    first components are the Gauss quadrature weights of the matrix.
    """

    thetas: tuple
    first_components: tuple
    last_components: tuple
    vectors: tuple

    @property
    def order(self):
        return len(self.thetas)


def _sign_like(magnitude, template):
    return magnitude if template >= 0 else -magnitude


def eig_tridiagonal(T, ctx):
    """Full eigendecomposition of a Jacobi matrix by implicit-shift QL.

    Wilkinson shifts; iteration cap scales with the order and the digit
    count.  Raises EigenConvergenceError naming the offending eigenvalue
    index if the cap is hit.
    """
    k = T.order
    d = [ctx.scalar(a) for a in T.alphas]
    e = [ctx.scalar(b) for b in T.betas]
    e.append(ctx.zero)
    one = ctx.one
    zero = ctx.zero
    two = one + one
    # z holds the accumulated rotations, stored by rows; eigenvector i is
    # the i-th column.
    z = [[one if r == c else zero for c in range(k)] for r in range(k)]
    eps = ctx.eps
    digits = ctx.decimal_digits if not ctx.is_native else 16
    cap = 50 * k * max(1, digits // 16)

    for l in range(k):
        iters = 0
        while True:
            m = l
            while m < k - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            iters += 1
            if iters > cap:
                raise EigenConvergenceError(l, cap)
            g = (d[l + 1] - d[l]) / (two * e[l])
            r = ctx.hypot(g, one)
            g = d[m] - d[l] + e[l] / (g + _sign_like(r, g))
            s = one
            c = one
            p = zero
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = ctx.hypot(f, g)
                e[i + 1] = r
                if r == 0:
                    # deflate a vanished rotation and restart the sweep
                    d[i + 1] = d[i + 1] - p
                    e[m] = zero
                    underflow = i >= l
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + two * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for row in z:
                    f2 = row[i + 1]
                    row[i + 1] = s * row[i] + c * f2
                    row[i] = c * row[i] - s * f2
            if underflow:
                continue
            d[l] = d[l] - p
            e[l] = g
            e[m] = zero

    order = sorted(range(k), key=lambda i: d[i])
    thetas = []
    vectors = []
    for idx in order:
        col = [z[r][idx] for r in range(k)]
        if col[0] < 0 or (col[0] == 0 and col[-1] < 0):
            col = [-x for x in col]
        thetas.append(d[idx])
        vectors.append(tuple(col))
    return EigenDecomposition(
        thetas=tuple(thetas),
        first_components=tuple(v[0] for v in vectors),
        last_components=tuple(v[-1] for v in vectors),
        vectors=tuple(vectors),
    )


def _ldl_shifted(T, mu, ctx, error_cls, message):
    """LDL^T pivots and unit-lower-bidiagonal factors of T - mu*I."""
    alphas = [ctx.scalar(a) for a in T.alphas]
    betas = [ctx.scalar(b) for b in T.betas]
    mu = ctx.scalar(mu)
    pivots = []
    factors = []
    piv = alphas[0] - mu
    if not piv > 0:
        raise error_cls("%s (pivot 1 = %s)" % (message, piv))
    pivots.append(piv)
    for i in range(1, len(alphas)):
        li = betas[i - 1] / pivots[i - 1]
        factors.append(li)
        piv = alphas[i] - mu - li * betas[i - 1]
        if not piv > 0:
            raise error_cls("%s (pivot %d = %s)" % (message, i + 1, piv))
        pivots.append(piv)
    return factors, pivots


def ldl_tridiagonal(T, ctx):
    """LDL^T factorization of a positive definite Jacobi matrix.

    Returns (factors, pivots): the subdiagonal of the unit lower bidiagonal
    factor and the positive diagonal pivots.
    """
    return _ldl_shifted(T, ctx.zero, ctx, NotPositiveDefiniteError,
                        "matrix not positive definite")


def _substitute(factors, pivots, rhs):
    n = len(pivots)
    y = list(rhs)
    for i in range(1, n):
        y[i] = y[i] - factors[i - 1] * y[i - 1]
    for i in range(n):
        y[i] = y[i] / pivots[i]
    for i in range(n - 2, -1, -1):
        y[i] = y[i] - factors[i] * y[i + 1]
    return y


def solve_shifted(T, mu, rhs, ctx):
    """Solve (T - mu*I) y = rhs for mu strictly below the spectrum of T."""
    if len(rhs) != T.order:
        raise ValueError("dimension mismatch")
    factors, pivots = _ldl_shifted(T, mu, ctx, ShiftNotBelowSpectrumError,
                                   "shift not below spectrum")
    return _substitute(factors, pivots, [ctx.scalar(x) for x in rhs])


def solve_posdef(T, rhs, ctx):
    """Solve T y = rhs for a positive definite Jacobi matrix."""
    if len(rhs) != T.order:
        raise ValueError("dimension mismatch")
    factors, pivots = ldl_tridiagonal(T, ctx)
    return _substitute(factors, pivots, [ctx.scalar(x) for x in rhs])


def inverse_first_entry(T, ctx):
    """(T^{-1})_{1,1}, the Gauss quadrature value attached to T."""
    e1 = [ctx.zero] * T.order
    e1[0] = ctx.one
    return solve_posdef(T, e1, ctx)[0]
