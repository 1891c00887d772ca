"""Quadrature-based bounds on the squared A-norm of the CG error.

Per iteration k the three basic quantities are

    gauss_lower  = gamma_k ||r_k||^2            (lower bound)
    radau_upper  = gamma_k^(mu) ||r_k||^2       (upper bound, prescribed mu)
    simple_upper = (phi_k / mu) ||r_k||^2       (upper bound, phi_k = ||r_k||^2/||p_k||^2)

where gamma_k^(mu) satisfies the rank-one-modified factorization recurrence
seeded with 1/mu, and mu is a positive underestimate of the smallest
eigenvalue.  Looking back from iteration k to an earlier iteration ell
tightens the upper bound to Omega_{ell:k} = Delta_{ell:k-1} + radau_k, and
the adaptive acceptance loop advances ell only when that improved bound is
certified to tau relative accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def update_phi(phi, delta_next):
    """phi_{j+1} from phi_j and delta_{j+1}: 1/phi_{j+1} = 1 + delta_{j+1}/phi_j."""
    return 1 / (1 + delta_next / phi)


def update_gamma_mu(gamma_mu, gamma, delta_next, mu):
    """Advance the modified coefficient:
    gamma_{j+1}^(mu) = (gamma_j^(mu) - gamma_j) / (mu (gamma_j^(mu) - gamma_j) + delta_{j+1}),
    seeded with gamma_0^(mu) = 1/mu.

    Requires gamma_mu > gamma; a violation means mu is not below the current
    smallest Ritz value (or the difference underflowed) and the caller must
    stop trusting the estimator.
    """
    diff = gamma_mu - gamma
    if not diff > 0:
        raise EstimatorInvalidError(
            "prescribed mu not below current Ritz value: "
            "gamma^(mu) - gamma = %s" % diff
        )
    return diff / (mu * diff + delta_next)


def update_alpha_mu(alpha_mu, alpha, beta2, mu):
    """Mirror recurrence on the modified diagonal coefficient:
    alpha_{j+1}^(mu) = mu + beta_j^2 / (alpha_j - alpha_j^(mu)), seeded with
    alpha_1^(mu) = mu."""
    diff = alpha - alpha_mu
    if not diff > 0:
        raise EstimatorInvalidError(
            "prescribed mu not below current Ritz value: "
            "alpha - alpha^(mu) = %s" % diff
        )
    return mu + beta2 / diff


def gamma_from_alpha(alpha_mu_next, delta, gamma_prev):
    """gamma_k^(mu) = 1 / (alpha_{k+1}^(mu) - delta_k / gamma_{k-1})."""
    den = alpha_mu_next - delta / gamma_prev
    if not den > 0:
        raise EstimatorInvalidError(
            "modified pivot is not positive: %s" % den)
    return 1 / den


def bounds_at(k, rnorm2, gamma, gamma_mu, phi, mu):
    """The three basic bounds at iteration k from consistent inputs."""
    return {
        "gauss_lower": gamma * rnorm2,
        "radau_upper": gamma_mu * rnorm2,
        "simple_upper": (phi / mu) * rnorm2,
    }


class EstimatorInvalidError(ArithmeticError):
    pass


@dataclass
class BoundRecord:
    k: int
    gauss_lower: object
    radau_upper: object
    simple_upper: object
    trusted: bool = True


@dataclass
class AcceptedBound:
    ell: int
    k: int
    omega: object
    delta_lk: object
    criterion_value: object


@dataclass
class BoundSeries:
    """Per-mu output of a bound sweep over a CG trace."""

    mu: object
    label: str
    rows: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    status: str = "ok"
    invalidated_at: object = None

    def row(self, k):
        return self.rows[k]

    def gauss(self, k):
        return self.rows[k].gauss_lower

    def radau(self, k):
        return self.rows[k].radau_upper

    def simple(self, k):
        return self.rows[k].simple_upper


class PhiTracker:
    """Running ratio ||r_k||^2 / ||p_k||^2, updated from the delta series."""

    def __init__(self, ctx):
        self.phi = ctx.one

    def update(self, delta_next):
        self.phi = update_phi(self.phi, delta_next)
        return self.phi


class MuEstimator:
    """State of the modified-coefficient recurrences for one prescribed mu.

    Advances gamma^(mu) alongside a trace; optionally maintains the mirror
    alpha^(mu) route and records the worst relative disagreement between the
    two (a cheap numerical tripwire, off by default).  Once the recurrence
    precondition fails the estimator keeps emitting values but marks itself
    and all later rows untrusted.
    """

    def __init__(self, mu, ctx, label=None, cross_check=False):
        if not mu > 0:
            raise ValueError("mu must be positive")
        self.mu = ctx.scalar(mu)
        self.ctx = ctx
        self.label = label if label is not None else "mu"
        self.k = 0
        self.gamma_mu = 1 / self.mu
        self.valid = True
        self.invalidated_at = None
        self.cross_check = cross_check
        self.cross_check_worst = ctx.zero
        # alpha-route state: alpha_k of the trace and alpha_k^(mu), 1-based k
        self._alpha = None
        self._alpha_mu = self.mu

    def advance(self, gamma_k, delta_next, gamma_prev=None, delta_k=None):
        """Move from iteration k to k+1 given gamma_k and delta_{k+1}.

        gamma_prev/delta_k (gamma_{k-1}, delta_k) feed the cross-check
        route; they are only needed when cross_check is enabled and k >= 1.
        """
        k = self.k
        if self.valid:
            try:
                new_gamma_mu = update_gamma_mu(self.gamma_mu, gamma_k,
                                               delta_next, self.mu)
            except EstimatorInvalidError:
                self.valid = False
                self.invalidated_at = k
                new_gamma_mu = self._advance_untrusted(gamma_k, delta_next)
        else:
            new_gamma_mu = self._advance_untrusted(gamma_k, delta_next)
        if self.cross_check and self.valid:
            self._cross_check(gamma_k, gamma_prev, delta_k)
        self.gamma_mu = new_gamma_mu
        self.k = k + 1
        return self.gamma_mu

    def _advance_untrusted(self, gamma_k, delta_next):
        if self.gamma_mu is None:
            return None
        diff = self.gamma_mu - gamma_k
        den = self.mu * diff + delta_next
        if den == 0:
            return None
        return diff / den

    def _cross_check(self, gamma_k, gamma_prev, delta_k):
        k = self.k
        if k == 0:
            self._alpha = 1 / gamma_k
            return
        if gamma_prev is None or delta_k is None:
            return
        beta2 = delta_k / (gamma_prev * gamma_prev)
        alpha_mu_next = update_alpha_mu(self._alpha_mu, self._alpha,
                                        beta2, self.mu)
        via_alpha = gamma_from_alpha(alpha_mu_next, delta_k, gamma_prev)
        rel = abs(via_alpha - self.gamma_mu) / self.gamma_mu
        if rel > self.cross_check_worst:
            self.cross_check_worst = rel
        self._alpha_mu = alpha_mu_next
        self._alpha = 1 / gamma_k + delta_k / gamma_prev


def estimate_bounds(trace, mu, ctx, label=None, tau=None, cross_check=False):
    """Sweep one prescribed mu over a completed trace.

    Emits the three basic bounds at every completed iteration and, when tau
    is given, runs the adaptive acceptance loop: a pointer ell starts at 0
    and, after each iteration k, advances and emits the improved bound
    Omega_{ell:k} while ||r_k||^2 (gamma_k^(mu) - gamma_k) / Delta_{ell:k}
    stays within tau.  Every accepted bound then overestimates the true
    squared error at ell by at most tau relatively.
    """
    mu = ctx.scalar(mu)
    est = MuEstimator(mu, ctx, label=label, cross_check=cross_check)
    series = BoundSeries(mu=mu, label=est.label)
    phi = PhiTracker(ctx)
    steps = trace.steps
    ell = 0
    gauss_terms = []
    for k in range(steps):
        gamma_k = ctx.scalar(trace.gamma(k))
        r2 = ctx.scalar(trace.rnorm2(k))
        delta_next = ctx.scalar(trace.delta(k + 1))
        gamma_mu = est.gamma_mu
        # equality is legitimate at the final step with mu = lambda_1; the
        # recurrence precondition (strict) is enforced on advancing instead
        trusted = est.valid and gamma_mu is not None and gamma_mu >= gamma_k
        gauss = gamma_k * r2
        gauss_terms.append(gauss)
        radau = gamma_mu * r2 if gamma_mu is not None else None
        simple = (phi.phi / mu) * r2
        series.rows.append(BoundRecord(k=k, gauss_lower=gauss,
                                       radau_upper=radau,
                                       simple_upper=simple, trusted=trusted))
        if tau is not None and trusted:
            while ell <= k:
                delta_lk = gauss_terms[ell]
                for j in range(ell + 1, k + 1):
                    delta_lk = delta_lk + gauss_terms[j]
                crit = r2 * (gamma_mu - gamma_k) / delta_lk
                if not crit <= tau:
                    break
                omega = radau
                for j in range(ell, k):
                    omega = omega + gauss_terms[j]
                series.accepted.append(AcceptedBound(
                    ell=ell, k=k, omega=omega, delta_lk=delta_lk,
                    criterion_value=crit))
                ell += 1
        if k == steps - 1:
            break  # no further rows need the advanced state
        gamma_prev = ctx.scalar(trace.gamma(k - 1)) if k >= 1 else None
        delta_k = ctx.scalar(trace.delta(k)) if k >= 1 else None
        est.advance(gamma_k, delta_next, gamma_prev=gamma_prev,
                    delta_k=delta_k)
        phi.update(delta_next)
        if not est.valid and series.status == "ok":
            series.status = "untrusted"
            series.invalidated_at = est.invalidated_at
    series.cross_check_worst = est.cross_check_worst
    return series


def improved_bounds(trace, series, ell, k):
    """Improved bounds looking back from iteration k to iteration ell:
    Omega_{ell:k} = Delta_{ell:k-1} + gamma_k^(mu) ||r_k||^2 and the lower
    companion Delta_{ell:k}."""
    if not 0 <= ell <= k:
        raise ValueError("need 0 <= ell <= k")
    if k >= len(series.rows):
        raise ValueError("iteration %d not present in the bound series" % k)
    if k >= trace.steps:
        raise ValueError("iteration %d not present in the trace" % k)
    radau = series.radau(k)
    if radau is None:
        raise ValueError("no Gauss-Radau value at iteration %d" % k)
    omega = trace.gauss_sum(ell, k - 1) + radau
    delta_lk = trace.gauss_sum(ell, k)
    return {"omega": omega, "delta_lk": delta_lk}


def adaptive_accept(trace, series, mu, tau):
    """Re-run the acceptance loop over a completed series (offline form of
    the solver-side loop in estimate_bounds).  Returns AcceptedBound items."""
    accepted = []
    ell = 0
    for k in range(len(series.rows)):
        row = series.rows[k]
        if not row.trusted or row.radau_upper is None:
            continue
        while ell <= k:
            delta_lk = trace.gauss_sum(ell, k)
            crit = (row.radau_upper - row.gauss_lower) / delta_lk
            if not crit <= tau:
                break
            omega = trace.gauss_sum(ell, k - 1) + row.radau_upper
            accepted.append(AcceptedBound(ell=ell, k=k, omega=omega,
                                          delta_lk=delta_lk,
                                          criterion_value=crit))
            ell += 1
    return accepted


UNDETERMINED = None


def delay_estimate(series, trace, ell, use_true_error=True):
    """Number of extra iterations before the basic Gauss-Radau bound falls
    under the error at iteration ell: smallest j >= 0 with
    radau_{ell+j+1} < eps_ell.  eps_ell is the recorded true error when
    available (and requested), else the tight lower bound Delta_{ell:K}.
    Returns None when no such j exists within the trace."""
    eps = None
    if use_true_error:
        eps = trace.true_err2(ell)
    if eps is None:
        eps = trace.gauss_sum(ell, trace.steps - 1)
    j = 0
    while ell + j + 1 < len(series.rows):
        radau = series.rows[ell + j + 1].radau_upper
        if radau is not None and radau < eps:
            return j
        j += 1
    return UNDETERMINED


# -- CSV ---------------------------------------------------------------------

BOUNDS_HEADER = "k,mu_label,gauss_lower,radau_upper,simple_upper"
ACCEPTANCE_HEADER = "ell,k,omega,delta_lk,criterion_value"
ESTIMATORS_HEADER = "mu_label,mu,status,invalidated_at"


def write_bounds_csv(series_list, path, ctx):
    with open(path, "w") as fh:
        fh.write(BOUNDS_HEADER + "\n")
        if series_list:
            nrows = max(len(s.rows) for s in series_list)
            for k in range(nrows):
                for s in series_list:
                    if k >= len(s.rows):
                        continue
                    row = s.rows[k]
                    fh.write("%d,%s,%s,%s,%s\n" % (
                        k, s.label, ctx.format(row.gauss_lower),
                        ctx.format(row.radau_upper),
                        ctx.format(row.simple_upper)))


def write_acceptance_csv(series, path, ctx):
    with open(path, "w") as fh:
        fh.write(ACCEPTANCE_HEADER + "\n")
        for a in series.accepted:
            fh.write("%d,%d,%s,%s,%s\n" % (
                a.ell, a.k, ctx.format(a.omega), ctx.format(a.delta_lk),
                ctx.format(a.criterion_value)))


def write_estimators_csv(series_list, path, ctx):
    with open(path, "w") as fh:
        fh.write(ESTIMATORS_HEADER + "\n")
        for s in series_list:
            fh.write("%s,%s,%s,%s\n" % (
                s.label, ctx.format(s.mu), s.status,
                "" if s.invalidated_at is None else str(s.invalidated_at)))
