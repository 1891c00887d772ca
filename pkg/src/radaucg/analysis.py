"""Offline spectral diagnostics explaining bound behaviour.

Everything here consumes a completed CG trace.  The Jacobi matrix implicit
in the trace is rebuilt, its leading sections are eigendecomposed lazily
(cached per iteration), and the per-mu quantities (eta terms, modified
coefficients, relative distances, phase markers) are derived from that
spectral data.  Quantities that require the smallest eigenvalue of A or the
exact solution are "oracle mode" and are kept separate from what a practical
run can observe.
"""

from __future__ import annotations

from dataclasses import dataclass

from .precision import elevated
from .tridiag import JacobiMatrix, eig_tridiagonal, solve_shifted
from .bounds import update_gamma_mu, update_phi


@dataclass(frozen=True)
class EtaBreakdown:
    """Spectral split of the modified diagonal coefficient at iteration k:
    eta_i = (beta_k s_{k,i})^2 / (theta_i - mu), zeta = sum eta_i, and
    mu + zeta is the modified coefficient alpha_{k+1}^(mu).  zeta_resolvent
    is the same number computed through the shifted solve
    beta_k^2 e_k^T (T_k - mu I)^{-1} e_k, an independent evaluation route."""

    k: int
    mu: object
    etas: tuple
    zeta: object
    zeta_resolvent: object

    @property
    def alpha_mu(self):
        return self.mu + self.zeta

    @property
    def eta1(self):
        return self.etas[0]

    def eta_max(self):
        """(1-based index, value) of the largest eta term."""
        best = 0
        for i in range(1, len(self.etas)):
            if self.etas[i] > self.etas[best]:
                best = i
        return best + 1, self.etas[best]


def eta_breakdown(T_k, beta_k, mu, ctx, decomposition=None):
    """Eta terms of the modified coefficient for prescribed node mu.

    Requires mu strictly below the smallest Ritz value of T_k.  The zeta sum
    is also evaluated through the shifted linear solve so callers can verify
    the two routes against each other.
    """
    if decomposition is None:
        decomposition = eig_tridiagonal(T_k, ctx)
    mu = ctx.scalar(mu)
    beta_k = ctx.scalar(beta_k)
    if not mu < decomposition.thetas[0]:
        raise ValueError(
            "mu = %s is not below the smallest Ritz value %s"
            % (mu, decomposition.thetas[0]))
    beta2 = beta_k * beta_k
    etas = []
    zeta = ctx.zero
    for theta, s_last in zip(decomposition.thetas, decomposition.last_components):
        eta = beta2 * s_last * s_last / (theta - mu)
        etas.append(eta)
        zeta = zeta + eta
    k = T_k.order
    rhs = [ctx.zero] * k
    rhs[k - 1] = beta2
    zeta_resolvent = solve_shifted(T_k, mu, rhs, ctx)[k - 1]
    return EtaBreakdown(k=k, mu=mu, etas=tuple(etas), zeta=zeta,
                        zeta_resolvent=zeta_resolvent)


@dataclass(frozen=True)
class CoefficientDifference:
    """Lemma-style comparison of modified coefficients for two nodes
    mu < lam below the smallest Ritz value."""

    per_term_growth: tuple        # (eta^(lam) - eta^(mu)) / eta^(mu)
    sensitivity_reference: tuple  # (lam - mu) / (theta_i - lam)
    alpha_diff: object            # via the first-term + E split
    alpha_diff_direct: object     # alpha^(lam) - alpha^(mu) from the etas
    E: object                     # 1 + sum_{i>=2} eta_i^(lam) / (theta_i - mu)
    E_swapped: object             # 1 + sum_{i>=2} eta_i^(mu) / (theta_i - lam)


def lemma2_diff(T_k, beta_k, mu, lam, ctx, decomposition=None):
    """Per-term growth and coefficient difference between nodes mu <= lam.

    The growth of each eta term is (lam-mu)/(theta_i-lam); the coefficient
    difference splits into ((lam-mu)/(theta_1-mu)) eta_1^(lam) plus
    (lam-mu) E with E symmetric in (mu, lam).
    """
    if decomposition is None:
        decomposition = eig_tridiagonal(T_k, ctx)
    mu = ctx.scalar(mu)
    lam = ctx.scalar(lam)
    if not mu <= lam:
        raise ValueError("need mu <= lam")
    if not lam < decomposition.thetas[0]:
        raise ValueError("lam must be below the smallest Ritz value")
    bm = eta_breakdown(T_k, beta_k, mu, ctx, decomposition=decomposition)
    bl = eta_breakdown(T_k, beta_k, lam, ctx, decomposition=decomposition)
    growth = tuple((el - em) / em for em, el in zip(bm.etas, bl.etas))
    reference = tuple((lam - mu) / (theta - lam) for theta in decomposition.thetas)
    E = ctx.one
    E_swapped = ctx.one
    for i in range(1, len(bl.etas)):
        E = E + bl.etas[i] / (decomposition.thetas[i] - mu)
        E_swapped = E_swapped + bm.etas[i] / (decomposition.thetas[i] - lam)
    alpha_diff = ((lam - mu) / (decomposition.thetas[0] - mu)) * bl.etas[0] \
        + (lam - mu) * E
    return CoefficientDifference(
        per_term_growth=growth, sensitivity_reference=reference,
        alpha_diff=alpha_diff,
        alpha_diff_direct=bl.alpha_mu - bm.alpha_mu,
        E=E, E_swapped=E_swapped)


def omega_identity_check(T_k, beta_k, mu, phi_k, gamma_mu, ctx,
                         decomposition=None):
    """Relative discrepancy of the coefficient identity
    1/gamma_k^(mu) = mu/phi_k + sum_i (mu/theta_i)^2 eta_i.

    Exact mathematics for consistent inputs, so the returned value measures
    only evaluation error.
    """
    breakdown = eta_breakdown(T_k, beta_k, mu, ctx, decomposition=decomposition)
    if decomposition is None:
        decomposition = eig_tridiagonal(T_k, ctx)
    mu = ctx.scalar(mu)
    lhs = 1 / ctx.scalar(gamma_mu)
    rhs = mu / ctx.scalar(phi_k)
    for theta, eta in zip(decomposition.thetas, breakdown.etas):
        rhs = rhs + (mu / theta) ** 2 * eta
    return abs(lhs - rhs) / lhs


def neumann_identity_check(T_k, mu, gamma_prev, phi_prev, ctx,
                           decomposition=None):
    """Relative discrepancy of the resolvent corner identity
    e_k^T (T_k - mu I)^{-1} e_k = gamma_{k-1} + mu gamma_{k-1}^2 / phi_{k-1}
                                  + sum_i (mu/theta_i)^2 s_{k,i}^2 / (theta_i - mu)."""
    if decomposition is None:
        decomposition = eig_tridiagonal(T_k, ctx)
    mu = ctx.scalar(mu)
    gamma_prev = ctx.scalar(gamma_prev)
    phi_prev = ctx.scalar(phi_prev)
    k = T_k.order
    rhs_vec = [ctx.zero] * k
    rhs_vec[k - 1] = ctx.one
    lhs = solve_shifted(T_k, mu, rhs_vec, ctx)[k - 1]
    rhs = gamma_prev + mu * gamma_prev * gamma_prev / phi_prev
    for theta, s_last in zip(decomposition.thetas, decomposition.last_components):
        rhs = rhs + (mu / theta) ** 2 * s_last * s_last / (theta - mu)
    return abs(lhs - rhs) / abs(lhs)


def relative_distance(phi_k, mu, gamma_mu):
    """Relative distance between the simple and Gauss-Radau coefficients:
    (phi_k/mu - gamma_k^(mu)) / gamma_k^(mu).  Small values (below 0.5 by
    convention) mean the two upper bounds carry the same information."""
    return (phi_k / mu - gamma_mu) / gamma_mu


def crit1_identity_check(T_k, beta_k, mu, phi_k, gamma_mu, ctx,
                         decomposition=None):
    """Relative discrepancy between the relative distance and its spectral
    form phi_k [ (mu/theta_1)^2 eta_1/mu + sum_{i>=2} (beta_k s_i/theta_i)^2
    mu/(theta_i - mu) ]."""
    if decomposition is None:
        decomposition = eig_tridiagonal(T_k, ctx)
    breakdown = eta_breakdown(T_k, beta_k, mu, ctx, decomposition=decomposition)
    mu = ctx.scalar(mu)
    phi_k = ctx.scalar(phi_k)
    direct = relative_distance(phi_k, mu, ctx.scalar(gamma_mu))
    bracket = (mu / decomposition.thetas[0]) ** 2 * breakdown.etas[0] / mu
    beta_k = ctx.scalar(beta_k)
    for i in range(1, T_k.order):
        theta = decomposition.thetas[i]
        s_last = decomposition.last_components[i]
        bracket = bracket + (beta_k * s_last / theta) ** 2 * mu / (theta - mu)
    spectral = phi_k * bracket
    scale = abs(direct) if abs(direct) > 0 else ctx.one
    return abs(direct - spectral) / scale


def bracket_upper2(T_k, beta_k, mu, lambda1, ctx, decomposition=None):
    """The mu -> lambda_1 substituted upper form of the crit1 bracket:
    (lambda_1/theta_1)^2 eta_1^(mu)/mu + sum_{i>=2} (beta_k s_i/theta_i)^2
    lambda_1/(theta_i - lambda_1)."""
    if decomposition is None:
        decomposition = eig_tridiagonal(T_k, ctx)
    breakdown = eta_breakdown(T_k, beta_k, mu, ctx, decomposition=decomposition)
    mu = ctx.scalar(mu)
    lambda1 = ctx.scalar(lambda1)
    beta_k = ctx.scalar(beta_k)
    acc = (lambda1 / decomposition.thetas[0]) ** 2 * breakdown.etas[0] / mu
    for i in range(1, T_k.order):
        theta = decomposition.thetas[i]
        s_last = decomposition.last_components[i]
        acc = acc + (beta_k * s_last / theta) ** 2 * lambda1 / (theta - lambda1)
    return acc


def crit1_bracket(T_k, beta_k, mu, ctx, decomposition=None):
    """The bracketed spectral sum of the relative-distance identity."""
    if decomposition is None:
        decomposition = eig_tridiagonal(T_k, ctx)
    breakdown = eta_breakdown(T_k, beta_k, mu, ctx, decomposition=decomposition)
    mu = ctx.scalar(mu)
    beta_k = ctx.scalar(beta_k)
    acc = (mu / decomposition.thetas[0]) ** 2 * breakdown.etas[0] / mu
    for i in range(1, T_k.order):
        theta = decomposition.thetas[i]
        s_last = decomposition.last_components[i]
        acc = acc + (beta_k * s_last / theta) ** 2 * mu / (theta - mu)
    return acc


def phase2_onset_oracle(theta1_series, lambda1, mu):
    """First iteration k whose smallest Ritz value approximates lambda_1
    better than mu does: theta_1^(k) - lambda_1 < lambda_1 - mu.  Returns
    None when that never happens within the series (always phase 1)."""
    gap = lambda1 - mu
    for k, theta in enumerate(theta1_series):
        if theta is None:
            continue
        if theta - lambda1 < gap:
            return k
    return None


def phase2_markers_practical(reldist_series, threshold=0.5):
    """Marker iterations from the relative-distance series alone.

    ell1 ends the initial run of iterations with reldist below the
    threshold; ell2 is the first later iteration where reldist drops below
    the threshold again (None if it never does).
    """
    n = len(reldist_series)
    k = 0
    while k < n and reldist_series[k] < threshold:
        k += 1
    ell1 = k - 1 if k > 0 else None
    ell2 = None
    start = (ell1 + 1) if ell1 is not None else 0
    for j in range(start, n):
        if reldist_series[j] < threshold:
            ell2 = j
            break
    return ell1, ell2


def ritz_accuracy(T_k, beta_k, ctx, eigs_of_A=None, decomposition=None):
    """Per-Ritz-value approximation measures at iteration k.

    Always: the residual bound beta_k |s_{k,i}| and the squared relative
    residual (beta_k s_{k,i} / theta_i)^2.  With the spectrum of A supplied
    (oracle mode): the gap-refined bound on the eigenvalue distance and,
    for i >= 2, the weight lambda_1/(theta_i - lambda_1).
    """
    if decomposition is None:
        decomposition = eig_tridiagonal(T_k, ctx)
    beta_k = ctx.scalar(beta_k)
    eigs = [ctx.scalar(v) for v in eigs_of_A] if eigs_of_A is not None else None
    out = []
    for i, (theta, s_last) in enumerate(
            zip(decomposition.thetas, decomposition.last_components)):
        residual = beta_k * abs(s_last)
        relacc = (beta_k * s_last / theta) ** 2
        gap_bound = None
        weight = None
        if eigs is not None:
            closest = min(range(len(eigs)), key=lambda j: abs(eigs[j] - theta))
            gap = None
            for j in range(len(eigs)):
                if j == closest:
                    continue
                dist = abs(eigs[j] - theta)
                if gap is None or dist < gap:
                    gap = dist
            if gap is not None and gap > 0:
                gap_bound = residual * residual / gap
            if i >= 1:
                den = theta - eigs[0]
                weight = eigs[0] / den if den != 0 else None
        out.append({
            "theta": theta,
            "residual": residual,
            "relacc": relacc,
            "gap_bound": gap_bound,
            "weight": weight,
        })
    return out


def convergence_ratios(theta1_series, lambda1, mu=None):
    """Ritz convergence ratios rho_k = (theta_1^(k+1) - lambda_1) /
    (theta_1^(k) - lambda_1), the prediction multipliers rho/(1-rho), and
    (with mu) the widening ratios h_k = (lambda_1 - mu)/(theta_1^(k) -
    lambda_1).  Degenerate denominators yield None sentinels."""
    n = len(theta1_series)
    rho = [None] * n
    multiplier = [None] * n
    h = [None] * n if mu is not None else None
    for k in range(n):
        theta = theta1_series[k]
        if theta is None:
            continue
        dk = theta - lambda1
        if mu is not None:
            h[k] = (lambda1 - mu) / dk if dk != 0 else None
        if k + 1 < n and theta1_series[k + 1] is not None and dk != 0:
            r = (theta1_series[k + 1] - lambda1) / dk
            rho[k] = r
            if r != 1:
                multiplier[k] = r / (1 - r)
    result = {"rho": rho, "multiplier": multiplier}
    if mu is not None:
        result["h"] = h
    return result


class TraceDiagnostics:
    """Cached spectral diagnostics over a completed CG trace.

    All spectral evaluations run under an elevated context (default: doubled
    digits) on the trace's own coefficients, so identity checks measure
    mathematics rather than evaluation noise.  lambda1 enables oracle-mode
    quantities and may be omitted for practical-mode reports.
    """

    def __init__(self, trace, ctx, lambda1=None, eval_ctx=None):
        self.trace = trace
        self.ctx = ctx
        self.eval_ctx = eval_ctx if eval_ctx is not None else elevated(ctx)
        ev = self.eval_ctx
        self.lambda1 = ev.scalar(lambda1) if lambda1 is not None else None
        self.steps = trace.steps
        self._eig_cache = {}
        self._eta_cache = {}
        self._gammas = [ev.scalar(trace.gamma(k)) for k in range(self.steps)]
        self._deltas = [None] + [ev.scalar(trace.delta(k))
                                 for k in range(1, len(trace.records))]
        # assemble the implicit Jacobi matrix in evaluation arithmetic so
        # that identity checks see an exact function of the trace data
        # (building it at trace precision would round sqrt(delta)/gamma)
        alphas = [1 / self._gammas[0]]
        betas = []
        for j in range(1, self.steps):
            betas.append(ev.sqrt(self._deltas[j]) / self._gammas[j - 1])
            alphas.append(1 / self._gammas[j]
                          + self._deltas[j] / self._gammas[j - 1])
        self._T_eval = JacobiMatrix(tuple(alphas), tuple(betas))
        phis = [ev.one]
        for k in range(1, self.steps + 1):
            if k < len(self._deltas):
                phis.append(update_phi(phis[-1], self._deltas[k]))
        self._phis = phis

    # -- cached spectral data ------------------------------------------------

    def jacobi(self, k=None):
        if k is None:
            return self._T_eval
        return self._T_eval.leading(k)

    def eig(self, k):
        dec = self._eig_cache.get(k)
        if dec is None:
            dec = eig_tridiagonal(self._T_eval.leading(k), self.eval_ctx)
            self._eig_cache[k] = dec
        return dec

    def beta(self, k):
        """Off-diagonal coupling beta_k below T_k (defined for k < steps)."""
        return self._T_eval.betas[k - 1]

    def theta1_series(self, upto=None):
        """Smallest Ritz value per iteration; index k, entry None at k=0."""
        last = self.steps if upto is None else upto
        return [None] + [self.eig(k).thetas[0] for k in range(1, last + 1)]

    # -- per-mu series ---------------------------------------------------------

    def phi(self, k):
        return self._phis[k]

    def gamma_mu_series(self, mu):
        """gamma_k^(mu) for k = 0..steps-1, recomputed under the evaluation
        context from the trace coefficients."""
        ev = self.eval_ctx
        mu = ev.scalar(mu)
        out = [1 / mu]
        for k in range(self.steps - 1):
            out.append(update_gamma_mu(out[-1], self._gammas[k],
                                       self._deltas[k + 1], mu))
        return out

    def alpha_series(self):
        """alpha_1..alpha_K of the trace's Jacobi matrix."""
        return list(self._T_eval.alphas)

    def alpha_mu_series(self, mu):
        """alpha_k^(mu) for k = 1..K, seeded with mu."""
        ev = self.eval_ctx
        mu = ev.scalar(mu)
        alphas = self.alpha_series()
        out = [mu]
        for j in range(1, self.steps):
            beta = self._T_eval.betas[j - 1]
            out.append(mu + beta * beta / (alphas[j - 1] - out[-1]))
        return out

    def eta(self, k, mu):
        key = (k, str(mu))
        item = self._eta_cache.get(key)
        if item is None:
            item = eta_breakdown(self._T_eval.leading(k), self.beta(k),
                                 self.eval_ctx.scalar(mu), self.eval_ctx,
                                 decomposition=self.eig(k))
            self._eta_cache[key] = item
        return item

    def reldist_series(self, mu):
        ev = self.eval_ctx
        mu = ev.scalar(mu)
        gm = self.gamma_mu_series(mu)
        return [relative_distance(self._phis[k], mu, gm[k])
                for k in range(self.steps)]

    # -- markers and reports -----------------------------------------------------

    def onset(self, mu):
        """Oracle phase-2 onset iteration for this mu (None if never)."""
        if self.lambda1 is None:
            raise ValueError("onset detection needs lambda1 (oracle mode)")
        series = self.theta1_series(upto=self.steps - 1)
        return phase2_onset_oracle(series, self.lambda1,
                                   self.eval_ctx.scalar(mu))

    def markers(self, mu, threshold=0.5):
        return phase2_markers_practical(self.reldist_series(mu), threshold)

    def phase_report(self, mu, oracle=None, threshold=0.5):
        """Per-iteration diagnostic rows for one mu.

        Row k (1 <= k <= steps-1) carries the smallest Ritz value, the eta
        extremes and their sum, the Ritz widening/convergence ratios, the
        relative distance, and the phase flag.  Oracle-only columns are None
        in practical mode.
        """
        ev = self.eval_ctx
        mu = ev.scalar(mu)
        if oracle is None:
            oracle = self.lambda1 is not None
        if oracle and self.lambda1 is None:
            raise ValueError("oracle report needs lambda1")
        reldist = self.reldist_series(mu)
        theta1 = self.theta1_series(upto=self.steps - 1)
        ratios = convergence_ratios(theta1, self.lambda1, mu=mu) \
            if oracle else None
        rows = []
        for k in range(1, self.steps):
            breakdown = self.eta(k, mu)
            max_index, max_eta = breakdown.eta_max()
            row = {
                "k": k,
                "theta1": theta1[k],
                "theta1_minus_lambda1": None,
                "eta1": breakdown.eta1,
                "eta_max_index": max_index,
                "eta_max": max_eta,
                "zeta": breakdown.zeta,
                "h_k": None,
                "rho_k": None,
                "reldist": reldist[k],
                "phase": None,
            }
            if oracle:
                row["theta1_minus_lambda1"] = theta1[k] - self.lambda1
                row["h_k"] = ratios["h"][k]
                row["rho_k"] = ratios["rho"][k]
                row["phase"] = 2 if theta1[k] - self.lambda1 < self.lambda1 - mu else 1
            rows.append(row)
        return rows


ANALYSIS_HEADER = ("k,theta1,theta1_minus_lambda1,eta1,eta_max_index,eta_max,"
                   "zeta,h_k,rho_k,reldist,phase")


def write_analysis_csv(rows, path, ctx):
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, int):
            return str(v)
        return ctx.format(v)

    with open(path, "w") as fh:
        fh.write(ANALYSIS_HEADER + "\n")
        for row in rows:
            fh.write(",".join([
                str(row["k"]), fmt(row["theta1"]),
                fmt(row["theta1_minus_lambda1"]), fmt(row["eta1"]),
                str(row["eta_max_index"]), fmt(row["eta_max"]),
                fmt(row["zeta"]), fmt(row["h_k"]), fmt(row["rho_k"]),
                fmt(row["reldist"]), fmt(row["phase"]),
            ]) + "\n")
