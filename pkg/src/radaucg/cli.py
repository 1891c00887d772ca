"""Command-line driver.

Subcommands: ``model`` generates the clustered-spectrum test problem,
``ingest`` validates a Matrix Market matrix into a problem directory,
``solve`` runs CG with all configured bound estimators and the adaptive
acceptance loop, ``analyze`` derives the per-mu spectral diagnostics from a
completed solve, and ``selftest`` exercises the built-in small cases.

Configuration is a flat ``key = value`` text file; command-line flags
override file values.  All numeric CSV output carries the working precision
in full, so downstream tooling can reproduce high-precision runs.
"""

from __future__ import annotations

import argparse
import math
import os
import shutil
import sys

from .precision import PrecisionContext, elevated
from .tridiag import JacobiMatrix, eig_tridiagonal, solve_posdef
from . import spectrum
from . import krylov
from . import bounds as bounds_mod
from . import analysis as analysis_mod


class ConfigError(ValueError):
    pass


def read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError("%s:%d: expected 'key = value'" % (path, lineno))
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


class ExperimentConfig:
    """Merged file + flag configuration for one command invocation."""

    def __init__(self, file_values, args):
        self.values = dict(file_values)
        if getattr(args, "digits", None) is not None:
            self.values["digits"] = str(args.digits)
        if getattr(args, "out", None) is not None:
            self.values["out"] = args.out
        if getattr(args, "mu", None):
            self.values["mu"] = " ".join(args.mu)
        if getattr(args, "tau", None) is not None:
            self.values["tau"] = args.tau
        if getattr(args, "max_iters", None) is not None:
            self.values["max_iters"] = str(args.max_iters)
        if getattr(args, "oracle", False):
            self.values["oracle"] = "true"
        if getattr(args, "problem", None) is not None:
            self.values["problem"] = args.problem

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError("missing required configuration key %r" % key)
        return self.values[key]

    @property
    def ctx(self):
        return PrecisionContext(int(self.get("digits", "0")))

    @property
    def out(self):
        return self.get("out", "out")

    @property
    def oracle(self):
        return str(self.get("oracle", "false")).lower() in ("true", "1", "yes")

    def mu_specs(self):
        raw = self.get("mu", "").split()
        return raw


def _write_kv(path, pairs):
    with open(path, "w") as fh:
        for key, value in pairs:
            fh.write("%s = %s\n" % (key, value))


def mu_label(spec):
    spec = spec.strip()
    if spec == "ulp":
        return "ulp"
    kind, _, arg = spec.partition(":")
    if kind == "rel":
        return "mu" + arg
    if kind == "abs":
        return "abs" + arg
    raise ConfigError("unrecognized mu spec %r" % spec)


def resolve_mu(spec, ctx, lambda_min=None):
    """Turn a mu spec into a working-precision value.

    ``abs:<decimal>`` is taken literally; ``rel:<d>`` means
    (1 - 10^-d) * lambda_1; ``ulp`` is the largest binary64 value not above
    lambda_1.  The latter two need lambda_1 (oracle-capable problem).
    """
    spec = spec.strip()
    if spec == "ulp":
        if lambda_min is None:
            raise ConfigError("mu spec 'ulp' needs a computable lambda_1")
        d = float(lambda_min)
        if d > lambda_min:
            d = math.nextafter(d, 0.0)
        return ctx.scalar(d)
    kind, _, arg = spec.partition(":")
    if kind == "abs":
        return ctx.scalar(arg)
    if kind == "rel":
        if lambda_min is None:
            raise ConfigError("mu spec %r needs a computable lambda_1" % spec)
        digits = int(arg)
        wide = elevated(ctx, extra=digits + 16)
        value = (wide.one - wide.scalar("1e-%d" % digits)) * wide.scalar(lambda_min)
        return ctx.scalar(value)
    raise ConfigError("unrecognized mu spec %r" % spec)


# -- model -------------------------------------------------------------------

def cmd_model(config):
    ctx = config.ctx
    if ctx.is_native:
        raise ConfigError("model construction needs a multiprecision digits "
                          "setting (e.g. digits = 128)")
    m = int(config.require("m"))
    lam1 = config.require("lam1")
    lamm = config.require("lamm")
    rho = config.require("rho")
    delta = config.require("delta")
    p = int(config.require("p"))
    out = config.out
    os.makedirs(out, exist_ok=True)
    problem = spectrum.build_model_problem(m, lam1, lamm, rho, delta, p, ctx)
    ev = problem.eval_ctx
    native_ctx = PrecisionContext(0)
    paths = {}
    paths["reference"] = os.path.join(out, "reference_T.jacobi")
    spectrum.write_jacobi(problem.reference_T, paths["reference"], ctx)
    paths["distribution"] = os.path.join(out, "distribution.txt")
    spectrum.write_distribution(problem.distribution, paths["distribution"], ctx)
    paths["problem"] = os.path.join(out, "problem_A.jacobi")
    spectrum.write_jacobi(problem.A, paths["problem"], native_ctx)
    paths["metadata"] = os.path.join(out, "metadata.txt")
    _write_kv(paths["metadata"], [
        ("kind", "jacobi"),
        ("n", problem.n),
        ("digits", ctx.decimal_digits),
        ("m", m), ("lam1", lam1), ("lamm", lamm), ("rho", rho),
        ("delta", delta), ("p", p),
        ("b", "e1"),
        ("lambda_min", ev.format(problem.lambda_min)),
    ])
    for name in ("reference", "distribution", "problem", "metadata"):
        print("wrote %s" % paths[name])
    return 0


# -- ingest -------------------------------------------------------------------

def _as_jacobi(op):
    """Detect a symmetric tridiagonal sparse matrix with positive
    off-diagonal and double-representable entries; None otherwise."""
    alphas = [None] * op.n
    betas = [None] * (op.n - 1)
    for i, j, v in op.entries:
        if i == j:
            alphas[i] = float(v)
        elif i == j + 1:
            if not v > 0:
                return None
            betas[j] = float(v)
        else:
            return None
        if float(v) != v:  # value does not survive binary64
            return None
    if any(a is None for a in alphas) or any(b is None for b in betas):
        return None
    return JacobiMatrix(tuple(alphas), tuple(betas))


def cmd_ingest(config, path, b_mode):
    ctx = config.ctx
    out = config.out
    op = krylov.read_matrix_market(path, ctx)
    for i, j, v in op.entries:
        if i == j and not v > 0:
            raise ConfigError(
                "%s: diagonal entry %d is not positive; matrix cannot be "
                "positive definite" % (path, i + 1))
    os.makedirs(out, exist_ok=True)
    T = _as_jacobi(op)
    if T is not None:
        # tridiagonal problems solve through the same code path as model
        # problems, which keeps export/re-ingest round trips bit-exact
        problem_path = os.path.join(out, "problem_A.jacobi")
        spectrum.write_jacobi(T, problem_path, PrecisionContext(0))
        meta = [("kind", "jacobi"), ("n", op.n)]
        if b_mode.startswith("file:"):
            shutil.copyfile(b_mode[len("file:"):], os.path.join(out, "b.txt"))
            meta.append(("b", "file"))
        elif b_mode in ("ones", "e1"):
            meta.append(("b", b_mode))
        else:
            raise ConfigError("unknown b mode %r" % b_mode)
        meta_path = os.path.join(out, "metadata.txt")
        _write_kv(meta_path, meta)
        print("wrote %s" % problem_path)
        print("wrote %s" % meta_path)
        return 0
    matrix_path = os.path.join(out, "matrix.mtx")
    krylov.write_matrix_market(op, matrix_path)
    meta = [("kind", "sparse"), ("n", op.n), ("nnz", len(op.entries))]
    if b_mode.startswith("file:"):
        src = b_mode[len("file:"):]
        shutil.copyfile(src, os.path.join(out, "b.txt"))
        meta.append(("b", "file"))
    elif b_mode in ("ones", "e1"):
        meta.append(("b", b_mode))
    else:
        raise ConfigError("unknown b mode %r" % b_mode)
    meta_path = os.path.join(out, "metadata.txt")
    _write_kv(meta_path, meta)
    print("wrote %s" % matrix_path)
    print("wrote %s" % meta_path)
    return 0


# -- problem loading -----------------------------------------------------------

class LoadedProblem:
    def __init__(self, operator, b, kind, n, lambda_min=None, metadata=None):
        self.operator = operator
        self.b = b
        self.kind = kind
        self.n = n
        self.lambda_min = lambda_min
        self.metadata = metadata or {}


def load_problem(problem_dir, ctx, eval_ctx):
    meta_path = os.path.join(problem_dir, "metadata.txt")
    meta = read_config(meta_path)
    kind = meta.get("kind")
    n = int(meta["n"])
    if kind == "jacobi":
        native_ctx = PrecisionContext(0)
        T = spectrum.read_jacobi(os.path.join(problem_dir, "problem_A.jacobi"),
                                 native_ctx)
        operator = krylov.JacobiOperator(T)
        lambda_min = None
        if "lambda_min" in meta:
            lambda_min = eval_ctx.scalar(meta["lambda_min"])
    elif kind == "sparse":
        operator = krylov.read_matrix_market(
            os.path.join(problem_dir, "matrix.mtx"), ctx)
        lambda_min = None
    else:
        raise ConfigError("%s: unknown problem kind %r" % (meta_path, kind))
    b_mode = meta.get("b", "e1")
    if b_mode == "e1":
        b = [ctx.one if i == 0 else ctx.zero for i in range(n)]
    elif b_mode == "ones":
        scale = 1 / ctx.sqrt(ctx.scalar(n))
        b = [scale] * n
    elif b_mode == "file":
        b = []
        with open(os.path.join(problem_dir, "b.txt")) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    b.append(ctx.scalar(line))
        if len(b) != n:
            raise ConfigError("b.txt holds %d entries, expected %d" % (len(b), n))
    else:
        raise ConfigError("unknown b mode %r in metadata" % b_mode)
    return LoadedProblem(operator, b, kind, n, lambda_min=lambda_min,
                         metadata=meta)


# -- solve ---------------------------------------------------------------------

def cmd_solve(config):
    ctx = config.ctx
    eval_ctx = elevated(ctx)
    problem_dir = config.require("problem")
    problem = load_problem(problem_dir, ctx, eval_ctx)
    specs = config.mu_specs()
    if not specs:
        raise ConfigError("solve needs at least one mu spec")
    oracle = config.oracle
    if oracle and problem.lambda_min is None and problem.kind == "jacobi":
        A_eval = problem.operator.T.convert(eval_ctx)
        problem.lambda_min = eig_tridiagonal(A_eval, eval_ctx).thetas[0]
    resolved = []
    for spec in specs:
        label = mu_label(spec)
        value = resolve_mu(spec, ctx, lambda_min=problem.lambda_min)
        if not value > 0:
            raise ConfigError("mu spec %r resolves to a nonpositive value" % spec)
        resolved.append((spec, label, value))

    exact = None
    if oracle:
        if problem.kind != "jacobi":
            raise ConfigError("oracle mode needs a tridiagonal problem")
        A_eval = problem.operator.T.convert(eval_ctx)
        b_eval = [eval_ctx.scalar(v) for v in problem.b]
        exact = solve_posdef(A_eval, b_eval, eval_ctx)

    max_iters = int(config.get("max_iters", problem.n))
    stop = config.get("stop_threshold")
    rnorm_stop = ctx.scalar(stop) if stop is not None else None
    trace, _ = krylov.run_cg(problem.operator, problem.b, ctx, max_iters,
                             exact_solution=exact, eval_ctx=eval_ctx,
                             rnorm_stop=rnorm_stop)
    tau = ctx.scalar(config.get("tau", "0.25"))
    series_list = []
    for spec, label, value in resolved:
        series_list.append(bounds_mod.estimate_bounds(
            trace, value, ctx, label=label, tau=tau))

    out = config.out
    os.makedirs(out, exist_ok=True)
    trace_path = os.path.join(out, "trace.csv")
    krylov.write_trace_csv(trace, trace_path, ctx, err_ctx=eval_ctx)
    print("wrote %s" % trace_path)
    bounds_path = os.path.join(out, "bounds.csv")
    bounds_mod.write_bounds_csv(series_list, bounds_path, ctx)
    print("wrote %s" % bounds_path)
    for series in series_list:
        acc_path = os.path.join(out, "acceptance_%s.csv" % series.label)
        bounds_mod.write_acceptance_csv(series, acc_path, ctx)
        print("wrote %s" % acc_path)
    est_path = os.path.join(out, "estimators.csv")
    bounds_mod.write_estimators_csv(series_list, est_path, ctx)
    print("wrote %s" % est_path)
    if oracle:
        diag = analysis_mod.TraceDiagnostics(trace, ctx,
                                             lambda1=problem.lambda_min,
                                             eval_ctx=eval_ctx)
        theta1 = diag.theta1_series(upto=trace.steps - 1)
        ritz_path = os.path.join(out, "ritz.csv")
        with open(ritz_path, "w") as fh:
            fh.write("k,theta1,theta1_minus_lambda1\n")
            for k in range(1, trace.steps):
                fh.write("%d,%s,%s\n" % (
                    k,
                    eval_ctx.format(theta1[k], digits=ctx.decimal_digits or None),
                    eval_ctx.format(theta1[k] - eval_ctx.scalar(problem.lambda_min),
                                    digits=ctx.decimal_digits or None)))
        print("wrote %s" % ritz_path)
    run_meta = [
        ("problem", problem_dir),
        ("digits", ctx.decimal_digits),
        ("tau", ctx.format(tau)),
        ("max_iters", max_iters),
        ("oracle", str(oracle).lower()),
        ("steps", trace.steps),
        ("mu_count", len(resolved)),
    ]
    for i, (spec, label, value) in enumerate(resolved):
        run_meta.append(("mu_%d_spec" % i, spec))
        run_meta.append(("mu_%d_label" % i, label))
        run_meta.append(("mu_%d_value" % i, ctx.format(value)))
    run_path = os.path.join(out, "run.txt")
    _write_kv(run_path, run_meta)
    print("wrote %s" % run_path)
    return 0


# -- analyze ---------------------------------------------------------------------

def cmd_analyze(config):
    ctx = config.ctx
    eval_ctx = elevated(ctx)
    solve_dir = config.get("solve", config.out)
    run_path = os.path.join(solve_dir, "run.txt")
    if not os.path.exists(run_path):
        raise ConfigError("no completed solve found at %s" % solve_dir)
    run_meta = read_config(run_path)
    trace = krylov.read_trace_csv(os.path.join(solve_dir, "trace.csv"), ctx)
    oracle = config.oracle or run_meta.get("oracle") == "true"
    lambda_min = None
    if oracle:
        problem_dir = config.get("problem", run_meta.get("problem"))
        meta = read_config(os.path.join(problem_dir, "metadata.txt"))
        if "lambda_min" not in meta:
            raise ConfigError("oracle analysis needs lambda_min in problem "
                              "metadata")
        lambda_min = eval_ctx.scalar(meta["lambda_min"])
    mus = []
    for i in range(int(run_meta.get("mu_count", "0"))):
        mus.append((run_meta["mu_%d_label" % i],
                    eval_ctx.scalar(run_meta["mu_%d_value" % i])))
    if not mus:
        raise ConfigError("solve metadata lists no mu values")
    diag = analysis_mod.TraceDiagnostics(trace, ctx, lambda1=lambda_min,
                                         eval_ctx=eval_ctx)
    out = config.out
    os.makedirs(out, exist_ok=True)
    threshold = float(config.get("marker_threshold", "0.5"))
    marker_rows = []
    for label, mu in mus:
        rows = diag.phase_report(mu, oracle=oracle, threshold=threshold)
        path = os.path.join(out, "analysis_%s.csv" % label)
        analysis_mod.write_analysis_csv(rows, path, eval_ctx
                                        if ctx.is_native else ctx)
        print("wrote %s" % path)
        ell1, ell2 = diag.markers(mu, threshold=threshold)
        onset = diag.onset(mu) if oracle else None
        marker_rows.append((label, ell1, ell2, onset))
    markers_path = os.path.join(out, "markers.csv")
    with open(markers_path, "w") as fh:
        fh.write("mu_label,ell1,ell2,onset\n")
        for label, ell1, ell2, onset in marker_rows:
            fh.write("%s,%s,%s,%s\n" % (
                label,
                "" if ell1 is None else ell1,
                "none" if ell2 is None else ell2,
                ("" if not oracle else ("never" if onset is None else onset))))
    print("wrote %s" % markers_path)
    alphas_path = os.path.join(out, "alphas.csv")
    fmt_ctx = ctx if not ctx.is_native else eval_ctx
    with open(alphas_path, "w") as fh:
        header = ["k", "alpha"]
        header += ["alpha_%s" % label for label, _ in mus]
        if oracle:
            header.append("alpha_lambda1")
        fh.write(",".join(header) + "\n")
        alpha = diag.alpha_series()
        mu_series = [diag.alpha_mu_series(mu) for _, mu in mus]
        lam_series = diag.alpha_mu_series(lambda_min) if oracle else None
        for k in range(trace.steps):
            row = [str(k + 1), fmt_ctx.format(alpha[k])]
            row += [fmt_ctx.format(s[k]) for s in mu_series]
            if oracle:
                row.append(fmt_ctx.format(lam_series[k]))
            fh.write(",".join(row) + "\n")
    print("wrote %s" % alphas_path)
    return 0


# -- selftest ---------------------------------------------------------------------

def _check(name, fn):
    try:
        fn()
    except Exception as exc:  # report and keep going
        print("FAIL %s: %s" % (name, exc))
        return False
    print("PASS %s" % name)
    return True


def cmd_selftest():
    from fractions import Fraction
    native_ctx = PrecisionContext(0)
    ctx32 = PrecisionContext(32)

    def close(a, b, tol):
        if not abs(a - b) <= tol * max(abs(a), abs(b), 1e-300):
            raise AssertionError("%s vs %s beyond %g" % (a, b, tol))

    def eig_cases():
        dec = eig_tridiagonal(JacobiMatrix((5.0,), ()), native_ctx)
        close(dec.thetas[0], 5.0, 1e-15)
        dec = eig_tridiagonal(JacobiMatrix((2.0, 2.0), (1.0,)), native_ctx)
        close(dec.thetas[0], 1.0, 1e-12)
        close(dec.thetas[1], 3.0, 1e-12)

    def ldl_cases():
        from .tridiag import ldl_tridiagonal, NotPositiveDefiniteError
        factors, pivots = ldl_tridiagonal(JacobiMatrix((2.0, 2.0), (1.0,)),
                                          native_ctx)
        close(pivots[0], 2.0, 1e-15)
        close(pivots[1], 1.5, 1e-15)
        close(factors[0], 0.5, 1e-15)
        try:
            ldl_tridiagonal(JacobiMatrix((1.0, 1.0), (2.0,)), native_ctx)
        except NotPositiveDefiniteError:
            return
        raise AssertionError("indefinite matrix accepted")

    def micro_chain():
        # consistent two-step CG data: gamma_0 = 1/2, delta_1 = 1/4,
        # gamma_1 = 2/3, mu = 1
        phi1 = bounds_mod.update_phi(1.0, 0.25)
        close(phi1, 0.8, 1e-15)
        gm1 = bounds_mod.update_gamma_mu(1.0, 0.5, 0.25, 1.0)
        close(gm1, 2.0 / 3.0, 1e-15)
        am2 = bounds_mod.update_alpha_mu(1.0, 2.0, 1.0, 1.0)
        close(am2, 2.0, 1e-15)
        close(bounds_mod.gamma_from_alpha(am2, 0.25, 0.5), gm1, 1e-15)
        rd = analysis_mod.relative_distance(phi1, 1.0, gm1)
        close(rd, 0.2, 1e-14)
        disc = analysis_mod.omega_identity_check(
            JacobiMatrix((2.0,), ()), 1.0, 1.0, phi1, gm1, native_ctx)
        if disc > 1e-14:
            raise AssertionError("identity discrepancy %g" % disc)

    def strakos_cases():
        nodes = spectrum.strakos_nodes(3, 0, 1, 1, native_ctx)
        close(nodes[1], 0.5, 1e-15)
        nodes = spectrum.strakos_nodes(12, "1e-6", "1", "0.8", ctx32)
        if not nodes[11] == 1:
            raise AssertionError("last node must hit the upper endpoint")
        sizes = spectrum.cluster_sizes(12, 4)
        if sizes[0] != 1 or sizes[-1] != 4 or sum(sizes) != 30:
            raise AssertionError("cluster sizes %r" % sizes)

    def rkpw_cases():
        d = spectrum.DistributionFunction((-1.0, 1.0), (0.5, 0.5))
        T = spectrum.rkpw(d, ctx32)
        close(float(T.alphas[0]), 0.0, 1e-25)
        close(float(T.betas[0]), 1.0, 1e-25)

    def cg_cases():
        A = krylov.DiagonalOperator((1.0, 2.0))
        trace, _ = krylov.run_cg(A, [1.0, 1.0], native_ctx, 2)
        close(trace.gamma(0), 2.0 / 3.0, 1e-15)
        state = krylov.run_lanczos(A, [1.0, 1.0], 2, native_ctx)
        close(state.alphas[0], 1.5, 1e-14)
        close(state.betas[0], 0.5, 1e-14)

    def triple_case():
        import random
        from .tridiag import ldl_tridiagonal as ldl
        rng = random.Random(7)
        for _ in range(5):
            n = 6
            betas = [ctx32.scalar(rng.uniform(0.1, 1.0)) for _ in range(n - 1)]
            alphas = []
            for i in range(n):
                pad = ctx32.scalar(rng.uniform(0.1, 2.0))
                left = betas[i - 1] if i > 0 else ctx32.zero
                right = betas[i] if i < n - 1 else ctx32.zero
                alphas.append(left + right + pad)
            T = JacobiMatrix(tuple(alphas), tuple(betas))
            factors, pivots = ldl(T, ctx32)
            gammas = [1 / p for p in pivots]
            deltas = [None] + [f * f for f in factors]
            mu = ctx32.scalar("0.05")
            gm = [1 / mu]
            for j in range(n - 1):
                gm.append(bounds_mod.update_gamma_mu(gm[-1], gammas[j],
                                                     deltas[j + 1], mu))
            am = [mu]
            for j in range(1, n):
                am.append(bounds_mod.update_alpha_mu(
                    am[-1], alphas[j - 1], betas[j - 1] ** 2, mu))
            for k in range(1, n - 1):
                via = bounds_mod.gamma_from_alpha(am[k], deltas[k],
                                                  gammas[k - 1])
                close(via, gm[k], 1e-22)

    checks = [
        ("tridiagonal eigensolver examples", eig_cases),
        ("ldl factorization examples", ldl_cases),
        ("bound recurrence micro chain", micro_chain),
        ("graded nodes and cluster sizes", strakos_cases),
        ("jacobi reconstruction two-point measure", rkpw_cases),
        ("cg and lanczos single steps", cg_cases),
        ("gamma recurrence consistency triple", triple_case),
    ]
    ok = True
    for name, fn in checks:
        ok = _check(name, fn) and ok
    return 0 if ok else 1


# -- entry point --------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="radau-cg",
        description="CG with quadrature-based error bounds at configurable "
                    "precision")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, problem=False):
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--digits", type=int, help="working precision in "
                       "decimal digits (0 = native binary64)")
        p.add_argument("--out", help="output directory")
        if problem:
            p.add_argument("--problem", help="problem directory")
            p.add_argument("--mu", action="append", default=None,
                           help="mu spec: abs:<decimal>, rel:<d>, or ulp "
                                "(repeatable)")
            p.add_argument("--tau", help="acceptance tolerance "
                                         "(default 0.25)")
            p.add_argument("--max-iters", type=int, dest="max_iters")
            p.add_argument("--oracle", action="store_true",
                           help="compute reference quantities (lambda_1, "
                                "exact solution)")

    common(sub.add_parser("model", help="generate the clustered-spectrum "
                                        "model problem"))
    common(sub.add_parser("solve", help="run CG with bound estimation"),
           problem=True)
    common(sub.add_parser("analyze", help="spectral diagnostics of a solve"),
           problem=True)
    p_an = sub.choices["analyze"]
    p_an.add_argument("--solve", help="directory holding solve outputs "
                                      "(default: --out)")
    p_in = sub.add_parser("ingest", help="validate a Matrix Market matrix "
                                         "into a problem directory")
    p_in.add_argument("path", help="matrix coordinate real symmetric file")
    p_in.add_argument("--config")
    p_in.add_argument("--digits", type=int)
    p_in.add_argument("--out")
    p_in.add_argument("--b", default="ones",
                      help="right-hand side: ones (normalized), e1, or "
                           "file:<path>")
    sub.add_parser("selftest", help="run the built-in invariant checks")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "selftest":
            return cmd_selftest()
        file_values = read_config(args.config) if getattr(args, "config", None) \
            else {}
        config = ExperimentConfig(file_values, args)
        if args.command == "model":
            return cmd_model(config)
        if args.command == "solve":
            return cmd_solve(config)
        if args.command == "analyze":
            if getattr(args, "solve", None):
                config.values["solve"] = args.solve
            return cmd_analyze(config)
        if args.command == "ingest":
            return cmd_ingest(config, args.path, args.b)
    except (ConfigError, OSError, ValueError, krylov.MatrixMarketError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    parser.error("unknown command")


if __name__ == "__main__":
    sys.exit(main())
