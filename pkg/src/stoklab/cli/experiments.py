"""Named experiments: each yields report rows comparing an estimate to an oracle.

An experiment is a generator function ``run(params, seed)``.  Parameters are
a flat mapping whose keys and value types are fixed by the registered
defaults.  Experiment ``k`` in the registry order draws from stream ids
``k << 32`` onwards, so experiments never share randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np
from scipy import stats

from .. import brownian as bm_mod
from .. import discrete, ito, martingale, sde
from ..diffusion import bvp, closed_forms, density, montecarlo, operators
from ..kernels.exit import EXIT_B
from ..simcore import McEstimate, Path, derive_stream, ks_critical_value, ks_statistic
from ..simcore import ks_two_sample, ks_two_sample_critical, variance_estimate
from .report import Row

Z = 4.0


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    defaults: dict
    run: Callable[[dict, int], Iterator[Row]]
    index: int


REGISTRY: dict[str, Experiment] = {}


def experiment(name: str, description: str, **defaults):
    def register(fn):
        REGISTRY[name] = Experiment(name, description, dict(defaults), fn, len(REGISTRY))
        return fn

    return register


def _streams(seed: int, name: str):
    """Independent streams for one experiment, spaced 2^24 ids apart."""
    base = REGISTRY[name].index << 32
    return lambda k: derive_stream(seed, base + (k << 24))


def _mc(check_id: str, est: McEstimate, oracle: float, source: str, extra: float = 0.0) -> Row:
    return Row(check_id, est.mean, est.stderr, oracle, source, Z * est.stderr + extra)


def _exact(check_id: str, value: float, oracle: float, source: str, tol: float) -> Row:
    return Row(check_id, value, 0.0, oracle, source, tol)


def _excess(check_id: str, audit: martingale.InequalityAudit, source: str) -> Row:
    """max(0, lhs - rhs) against 0; the margin rhs - lhs goes into the source text."""
    se = audit.combined_stderr
    return Row(check_id, max(0.0, -audit.margin), se, 0.0, f"{source}; margin rhs-lhs={audit.margin:.6g}", Z * se)


# -- discrete chains ------------------------------------------------------------------


@experiment(
    "polya-limit",
    "Polya urn: exact law of the red proportion vs simulated histogram",
    n_paths=1_000_000, r0=2, v0=1, c=2, n=8, beta_check=False, beta_n=2000, beta_paths=5000,
)
def _polya(p, seed):
    s = _streams(seed, "polya-limit")
    law = dict(discrete.polya_exact_law(1, 1, 1, 3, exact=True))
    target = {Fraction(k, 5): Fraction(1, 4) for k in range(1, 5)}
    dev = sum(abs(law.get(v, Fraction(0)) - target.get(v, Fraction(0))) for v in set(law) | set(target))
    yield _exact("exact.r1v1c1.n3.uniform", float(dev), 0.0, "Polya urn r=v=c=1: X_3 uniform on {1/5,2/5,3/5,4/5}", 0.0)

    r0, v0, c, n, m = p["r0"], p["v0"], p["c"], p["n"], p["n_paths"]
    law = discrete.polya_exact_law(r0, v0, c, n)
    props = discrete.polya_batch(s(0), r0, v0, c, n, m)[:, -1]
    k = np.rint((props * (r0 + v0 + n * c) - r0) / c).astype(np.int64)
    counts = np.bincount(k, minlength=n + 1)
    for j, (_, prob) in enumerate(law):
        se = math.sqrt(prob * (1 - prob) / m)
        yield Row(f"mc.n{n}.atom{j}", counts[j] / m, se, prob, "exact DP law of X_n (recursion on red draws)", Z * se)

    if p["beta_check"]:
        final = discrete.polya_batch(s(1), r0, v0, c, p["beta_n"], p["beta_paths"])[:, -1]
        ks = ks_statistic(final, stats.beta(r0 / c, v0 / c).cdf)
        tol = ks_critical_value(final.size) + 1.0 / math.sqrt(p["beta_n"])
        yield _exact("beta-limit.ks", ks, 0.0, "limit law Beta(r0/c, v0/c) of the red proportion", tol)


@experiment(
    "gw-extinction",
    "Galton-Watson extinction: generating-function fixed point vs simulated trees",
    n_trees=100_000, n_gen=200, stop_at=1000,
)
def _gw(p, seed):
    s = _streams(seed, "gw-extinction")
    law = discrete.OffspringDistribution.binomial(3, 0.5)
    rho_true = math.sqrt(5.0) - 2.0
    rho = discrete.gw_extinction_probability(law)
    src = "extinction probability rho = sqrt(5)-2 for p0=p3=1/8, p1=p2=3/8"
    yield _exact("rho.fixed-point", rho, rho_true, src, 1e-10)
    yield _exact("rho.pgf-residual", abs(float(law.pgf(rho)) - rho), 0.0, "phi(rho) = rho", 1e-12)
    est = discrete.gw_extinction_mc(s(0), law, p["n_trees"], p["n_gen"], p["stop_at"])
    yield _mc("rho.mc", est, rho_true, src, rho_true ** p["stop_at"])


@experiment(
    "ehrenfest",
    "Ehrenfest urn: occupation frequencies vs binomial law, relaxation to N/2",
    n_balls=20, burn_in=1000, window=2000, n_chains=2000, big_n=100, big_steps=100_000,
)
def _ehrenfest(p, seed):
    s = _streams(seed, "ehrenfest")
    n = p["n_balls"]
    mean, se = discrete.ehrenfest_occupation(s(0), n, 0, p["burn_in"], p["window"], p["n_chains"])
    pi = stats.binom(n, 0.5).pmf(np.arange(n + 1))
    draws = p["n_chains"] * p["window"]
    for k in range(n + 1):
        floor = math.sqrt(pi[k] / draws)
        yield Row(f"occupation.k{k}", mean[k], se[k], pi[k], "stationary law Binomial(N, 1/2)", Z * max(se[k], floor))
    big = p["big_n"]
    path = discrete.simulate_ehrenfest(s(1), big, p["big_steps"], 0).values / big
    tail = path[p["big_steps"] // 10 :]
    yield _exact("relaxation.time-average", float(tail.mean()), 0.5, "X_n/N relaxes to 1/2 from an empty urn", 0.01)
    entered = float(np.any(np.abs(path - 0.5) <= 0.1))
    yield _exact("relaxation.enters-band", entered, 1.0, "X_n/N enters [0.4, 0.6]", 0.0)


@experiment(
    "doubling-strategy",
    "Doubling strategy: exact law of the wealth and its simulated counterpart",
    n_max=20, n_mc=10, n_paths=200_000,
)
def _doubling(p, seed):
    s = _streams(seed, "doubling-strategy")
    worst = Fraction(0)
    for n in range(p["n_max"] + 1):
        law = martingale.doubling_strategy_law(n)
        if n == 0:
            target = {Fraction(0): Fraction(1)}
        else:
            target = {Fraction(1): 1 - Fraction(1, 2**n), Fraction(1 - 2**n): Fraction(1, 2**n)}
        dev = sum(abs(law.get(v, Fraction(0)) - target.get(v, Fraction(0))) for v in set(law) | set(target))
        worst = max(worst, dev)
    yield _exact(
        f"exact.law.n<={p['n_max']}", float(worst), 0.0,
        "doubling strategy: P[Y_n=1-2^n]=2^-n, P[Y_n=1]=1-2^-n", 0.0,
    )
    n = p["n_mc"]
    walks = discrete.random_walk_batch(s(0), n, p["n_paths"]).T.astype(np.float64)
    X = Path.on_integers(walks)
    Y = martingale.predictable_transform(martingale.doubling_stakes(X), X).values[-1]
    ruin = McEstimate.from_samples((Y == 1 - 2**n).astype(np.float64))
    yield _mc(f"mc.p-ruin.n{n}", ruin, 2.0**-n, "P[Y_n=1-2^n]=2^-n")
    yield _mc(f"mc.mean.n{n}", McEstimate.from_samples(Y), 0.0, "martingale transform has E[Y_n]=0")


@experiment(
    "doob-audit",
    "Doob, Kolmogorov and L2 maximal inequalities, upcrossings, Doob decomposition",
    n_paths=100_000, n_steps=1000, chunk=10_000, lam=50.0, up_a=-5.0, up_b=5.0, stop_level=10, stop_n=500,
    stop_paths=20_000,
)
def _doob(p, seed):
    s = _streams(seed, "doob-audit")
    lam, a, b = p["lam"], p["up_a"], p["up_b"]
    absmax, absfinal, up, final_pos = [], [], [], []
    for walks in martingale.walk_chunks(s(0), p["n_paths"], p["n_steps"], p["chunk"]):
        absw = np.abs(walks)
        absmax.append(absw.max(axis=1))
        absfinal.append(absw[:, -1])
        up.append(martingale.upcrossings_batch(walks, a, b))
        final_pos.append(np.maximum(walks[:, -1] - a, 0.0))
    absmax, absfinal = np.concatenate(absmax), np.concatenate(absfinal)
    yield _excess(
        "doob.excess", martingale.audit_from_summary(absmax, absfinal, lam),
        f"Doob: P[max|S_m|>=lam] <= E|S_n|/lam, lam={lam:g}",
    )
    yield _excess(
        "kolmogorov.excess", martingale.audit_from_summary(absmax**2, absfinal**2, lam * lam),
        f"Kolmogorov: P[max|S_m|>=lam] <= E[S_n^2]/lam^2, lam={lam:g}",
    )
    yield _excess(
        "l2.excess", martingale.audit_from_summary(absmax, absfinal, None, p=2.0),
        "L2 maximal: E[max|S_m|^2] <= 4 E[S_n^2]",
    )
    up_audit = martingale.InequalityAudit(
        McEstimate.from_samples((b - a) * np.concatenate(up).astype(np.float64)),
        McEstimate.from_samples(np.concatenate(final_pos)),
    )
    yield _excess("upcrossing.excess", up_audit, f"upcrossing: (b-a)E[U_n] <= E[(S_n-a)^+], [a,b]=[{a:g},{b:g}]")

    level, horizon = p["stop_level"], p["stop_n"]
    rule = martingale.MinRule(martingale.FirstEntry({-level, level}), martingale.FixedTime(horizon))
    walks = discrete.random_walk_batch(s(1), horizon, p["stop_paths"])
    stopped = np.array([w[martingale.stopping_time(rule, w)] for w in walks], dtype=np.float64)
    yield _mc("optional-stopping.mean", McEstimate.from_samples(stopped), 0.0, "E[S_{N ^ n}] = S_0 for bounded N")

    chain = discrete.FiniteChain.ehrenfest(10)
    y = np.arange(11, dtype=np.float64)
    inc = martingale.compensator_increments(chain, None)
    yield _exact("doob-decomposition.ehrenfest-drift", float(np.max(np.abs(inc - (1 - 2 * y / 10)))), 0.0,
                 "Ehrenfest: A_n - A_{n-1} = 1 - 2 X_{n-1}/N", 1e-12)
    path = discrete.simulate_ehrenfest(s(2), 10, 1000, 5)
    dec = martingale.doob_decomposition_chain(chain, None, path)
    recon = dec.martingale_part.values + dec.predictable_part.values - path.values
    yield _exact("doob-decomposition.reconstruction", float(np.max(np.abs(recon))), 0.0, "X_n = M_n + A_n", 1e-10)
    urn = discrete.FiniteChain.polya(1, 1, 1, 12)
    drift = martingale.compensator_increments(urn, None)
    yield _exact("polya.martingale-drift", float(np.max(np.abs(drift))), 0.0,
                 "Polya red proportion is a martingale", 1e-12)


# -- Brownian motion -----------------------------------------------------------------


@experiment(
    "bm-maximum",
    "Brownian running maximum vs reflection principle, with grid-monitoring allowance",
    n_paths=100_000, dt=1e-4, level=1.0, T=1.0,
)
def _bm_max(p, seed):
    s = _streams(seed, "bm-maximum")
    L, T, dt = p["level"], p["T"], p["dt"]
    oracle = bm_mod.max_law_cdf(L, T)
    yield _exact("closed-form.vs-normal-tail", oracle, 2.0 * stats.norm.sf(L / math.sqrt(T)),
                 "2 P[B_t >= L] from the normal tail", 1e-15)
    maxima, finals = bm_mod.running_maximum(s(0), T, dt, p["n_paths"])
    est = McEstimate.from_samples((maxima >= L).astype(np.float64))
    src = closed_forms.source("max-law")
    yield Row("p-max", est.mean, est.stderr, oracle, src, 0.01)
    allowance = bm_mod.monitoring_bias_allowance(L, T, dt)
    yield _mc("p-max.statistical", est, oracle, src + ", grid-monitoring allowance", allowance)
    twice = McEstimate.from_samples(2.0 * (finals >= L))
    yield _mc("twice-terminal-tail", twice, oracle, "P[sup B >= L] = 2 P[B_t >= L]")


@experiment(
    "first-passage",
    "Exact first-passage times a^2/Z^2 vs the passage-time law",
    n=100_000, level=1.0,
)
def _first_passage(p, seed):
    s = _streams(seed, "first-passage")
    a, n = p["level"], p["n"]
    tau = bm_mod.first_passage_samples(s(0), a, n)
    yield _exact("ks", ks_statistic(tau, lambda t: bm_mod.first_passage_cdf(t, a)), 0.0,
                 "P[tau_a <= t] = P[sup_{s<=t} B_s >= a]", ks_critical_value(n))
    median = a * a / stats.norm.ppf(0.75) ** 2
    dens = a / math.sqrt(2 * math.pi * median**3) * math.exp(-a * a / (2 * median))
    se = 1.0 / (2.0 * dens * math.sqrt(n))
    yield Row("median", float(np.median(tau)), se, median, "median of tau_a = a^2/z_{0.75}^2", Z * se)
    yield _exact("all-finite", float(np.all(np.isfinite(tau))), 1.0, "tau_a < inf almost surely", 0.0)


@experiment(
    "cauchy-hit",
    "Hitting point of the x-axis by planar Brownian motion vs the Cauchy law",
    n=100_000,
)
def _cauchy(p, seed):
    s = _streams(seed, "cauchy-hit")
    n = p["n"]
    x = bm_mod.line_hit_samples(s(0), n)
    yield _exact("ks", ks_statistic(x, bm_mod.cauchy_cdf), 0.0, "hitting abscissa is standard Cauchy",
                 ks_critical_value(n))
    q1, q3 = np.percentile(x, [25, 75])
    iqr = float(q3 - q1)
    yield Row("median", float(np.median(x)), iqr / math.sqrt(n), 0.0, "Cauchy median 0", Z * iqr / math.sqrt(n))


# -- stochastic integrals -------------------------------------------------------------


@experiment(
    "ito-bdb",
    "Left-point and midpoint sums of B dB vs 1/2 B^2 - t/2 and 1/2 B^2",
    n_paths=10_000, log2_steps=12, T=1.0, chunk=1000,
)
def _ito_bdb(p, seed):
    s = _streams(seed, "ito-bdb")
    T, n = p["T"], 2 ** p["log2_steps"]
    dt = T / n
    grid = bm_mod.uniform_grid(T, n)
    ito_sq, strat_sq = [], []
    for start in range(0, p["n_paths"], p["chunk"]):
        bm = bm_mod.bm_batch(s(0).substream(start), grid, min(p["chunk"], p["n_paths"] - start))
        b = bm.values
        end = b[-1]
        ito_sq.append((ito.ito_integral_leftpoint(b, bm).values[-1] - (0.5 * end * end - 0.5 * T)) ** 2)
        strat_sq.append((ito.stratonovich_integral_midpoint(b, bm).values[-1] - 0.5 * end * end) ** 2)
    ito_ms = McEstimate.from_samples(np.concatenate(ito_sq))
    strat_ms = McEstimate.from_samples(np.concatenate(strat_sq))
    budget = 4.0 * dt / 2.0 * T
    yield Row("ito.mean-square", ito_ms.mean, ito_ms.stderr, 0.0, "int B dB = B_t^2/2 - t/2", budget)
    yield Row("stratonovich.mean-square", strat_ms.mean, strat_ms.stderr, 0.0, "Stratonovich int B dB = B_t^2/2", budget)
    yield _mc("ito.mean-square.theory", ito_ms, T * dt / 2.0, "grid error: E[(sum dB^2 - t)^2]/4 = t dt/2")


@experiment(
    "ito-isometry",
    "Ito isometry for simple integrands",
    n_paths=50_000, level=8,
)
def _isometry(p, seed):
    s = _streams(seed, "ito-isometry")
    lvl = p["level"]
    e = ito.SimpleIntegrand.dyadic_bm(lvl)
    lhs, rhs = ito.isometry_audit(e, p["n_paths"], s(0))
    yield _mc("dyadic-bm.isometry", lhs, (2**lvl - 1) / 2 ** (lvl + 1), "Ito isometry: int E[e^2] = (2^n-1)/2^(n+1)")
    lhs1, rhs1 = ito.isometry_audit(ito.SimpleIntegrand.constant(1.0), p["n_paths"], s(1))
    yield _mc("constant.isometry", lhs1, rhs1, "Ito isometry with e = 1: E[B_1^2] = 1")
    bm = bm_mod.bm_batch(s(2), e.partition, p["n_paths"])
    integral = ito.ito_integral_simple(e, bm).values[-1]
    yield _mc("dyadic-bm.zero-mean", McEstimate.from_samples(integral), 0.0, "Ito integrals have mean 0")


def _g(x):
    return 1.0 + 0.5 * np.sin(x)


def _g_dx(x):
    return 0.5 * np.cos(x)


@experiment(
    "stratonovich",
    "Stratonovich minus Ito equals 1/2 int g'(X) g(X) ds",
    n_paths=2000, log2_steps=12, T=1.0,
)
def _stratonovich(p, seed):
    s = _streams(seed, "stratonovich")
    T, n = p["T"], 2 ** p["log2_steps"]
    dt = T / n
    grid = bm_mod.uniform_grid(T, n)
    bm = bm_mod.bm_batch(s(0), grid, p["n_paths"])
    spec = sde.DiffusionSpec(lambda x, t: 0.0 * x, lambda x, t: _g(x), name="strat-demo")
    X = sde.euler_maruyama(spec, 0.0, bm=bm).values
    G = _g(X)
    diff = ito.stratonovich_integral_midpoint(G, bm).values[-1] - ito.ito_integral_leftpoint(G, bm).values[-1]
    corr = ito.time_integral_leftpoint(0.5 * _g_dx(X) * G, bm).values[-1]
    rms = math.sqrt(float(np.mean((diff - corr) ** 2)))
    yield _exact("g(X).correction.rms", rms, 0.0, "S - I = 1/2 int g'(X)g(X) ds for dX = g(X) dB", math.sqrt(dt))
    f = np.cos(grid)[:, None] * np.ones((1, p["n_paths"]))
    gap = ito.stratonovich_integral_midpoint(f, bm).values[-1] - ito.ito_integral_leftpoint(f, bm).values[-1]
    rms = math.sqrt(float(np.mean(gap**2)))
    yield _exact("deterministic.rms", rms, 0.0, "deterministic integrand: Stratonovich = Ito", math.sqrt(dt))


# -- SDE solvers ------------------------------------------------------------------------


@experiment(
    "euler-order",
    "Euler-Maruyama strong order on GBM, OU variance",
    n_paths=1000, r=0.5, sigma=1.0, T=1.0, k_min=6, k_max=12, ou_paths=10_000, ou_log2_steps=10,
)
def _euler(p, seed):
    s = _streams(seed, "euler-order")
    model = sde.ExactModel("gbm", {"r": p["r"], "sigma": p["sigma"]})
    dts = [2.0**-k for k in range(p["k_min"], p["k_max"] + 1)]
    table = sde.strong_error_table(model.spec(), model, dts, p["T"], p["n_paths"], s(0))
    yield _exact("gbm.loglog-slope", sde.loglog_slope(table), 0.5, "strong order 1/2 of Euler-Maruyama", 0.15)

    n = 2 ** p["ou_log2_steps"]
    dt = 1.0 / n
    X = sde.euler_maruyama(sde.ou_spec(1.0, 1.0), 0.0, bm_mod.uniform_grid(1.0, n), s(1), n_paths=p["ou_paths"])
    var = variance_estimate(X.values[-1])
    oracle = 0.5 * (1.0 - math.exp(-2.0))
    discrete_var = dt * (1.0 - (1.0 - dt) ** (2 * n)) / (1.0 - (1.0 - dt) ** 2)
    yield _mc("ou.variance.t1", var, oracle, "OU Var X_t = sigma^2 (1 - e^{-2t})/2", abs(discrete_var - oracle))


@experiment(
    "picard",
    "Picard iteration on a fixed driving path: contraction, comparison with Euler",
    n_paths=1000, log2_steps=8, r=0.5, sigma=1.0, k=6,
)
def _picard(p, seed):
    s = _streams(seed, "picard")
    n, k = 2 ** p["log2_steps"], p["k"]
    grid = bm_mod.uniform_grid(1.0, n)
    bm = bm_mod.bm_batch(s(0), grid, p["n_paths"])
    model = sde.ExactModel("gbm", {"r": p["r"], "sigma": p["sigma"]})
    its = sde.picard_iterate(model.spec(), 1.0, None, bm, k + 1)
    d = np.array([np.abs(its[j + 1].values - its[j].values).max(axis=0) for j in range(1, k + 1)])
    mono = float(np.mean(np.all(np.diff(d, axis=0) <= 0, axis=0)))
    se = math.sqrt(0.95 * 0.05 / p["n_paths"])
    yield Row(f"gbm.monotone-decay.k1..{k}", mono, se, 0.95,
              "successive-iterate sup-distances decrease on about 95% of paths", Z * se)
    exact_T = sde.exact_solution(model, bm, 1.0).values[-1]
    err_p = float(np.mean(np.abs(its[k].values[-1] - exact_T)))
    err_e = float(np.mean(np.abs(sde.euler_maruyama(model.spec(), 1.0, bm=bm).values[-1] - exact_T)))
    yield _exact(f"gbm.iterate{k}-vs-euler.relative", abs(err_p - err_e) / err_e, 0.0,
                 "Picard iterates converge to the Euler path on the same grid", 0.05)
    lin = sde.ExactModel("linear-additive", {"a": lambda t: 0.0 * t, "b": np.cos, "c": lambda t: 1.0 + t})
    its = sde.picard_iterate(lin.spec(), 0.5, None, bm, 2)
    yield _exact("linear-additive.one-step", float(np.max(np.abs(its[2].values - its[1].values))), 0.0,
                 "state-independent coefficients: X^(1) is the fixed point", 1e-12)


# -- diffusions: exit problems ------------------------------------------------------------


def _bias(stats_obj, key: str) -> float:
    return 0.0 if stats_obj.bias is None else float(stats_obj.bias[key])


@experiment(
    "exit-interval",
    "Brownian exit from an interval: hitting probability, moments, Laplace transform",
    n_paths=20_000, dt=1e-4, lam=0.5, bvp_n=2048,
)
def _exit_interval(p, seed):
    s = _streams(seed, "exit-interval")
    spec = sde.brownian_spec()
    dt, lam, n = p["dt"], p["lam"], p["bvp_n"]
    cf = closed_forms.closed_form
    src = closed_forms.source
    p_a, m_tau = cf("interval-hit-a", x=0, a=-1, b=2), cf("interval-mean-exit", x=0, a=-1, b=2)
    lap, tau_sq = cf("symmetric-laplace", x=0, a=1, lam=lam), cf("symmetric-tau-sq", x=0, a=1)

    r1 = montecarlo.mc_exit_statistics(spec, 0.0, -1.0, 2.0, dt, p["n_paths"], s(0))
    yield _mc("mc.p_hit_a", r1.p_hit_a, p_a, src("interval-hit-a"), _bias(r1, "p_a"))
    yield _mc("mc.mean_tau", r1.mean_tau, m_tau, src("interval-mean-exit"), _bias(r1, "mean_tau"))
    r2 = montecarlo.mc_exit_statistics(spec, 0.0, -1.0, 1.0, dt, p["n_paths"], s(1), lambdas=(lam,))
    yield _mc(f"mc.laplace.lam{lam:g}", r2.laplace[float(lam)], lap, src("symmetric-laplace"),
              _bias(r2, f"laplace_{lam:g}"))
    yield _mc("mc.mean_tau_sq", r2.mean_tau_sq, tau_sq, src("symmetric-tau-sq"), _bias(r2, "mean_tau_sq"))

    seq = bvp.solve_sequence(spec, -1.0, 2.0, n)
    yield _exact("bvp.p_hit_a", float(seq["p_a"](0.0)), p_a, src("interval-hit-a"), 1e-4)
    yield _exact("bvp.mean_tau", float(seq["mean_tau"](0.0)), m_tau, src("interval-mean-exit"), 1e-3)
    yield _exact(f"bvp.laplace.lam{lam:g}", float(bvp.laplace_bvp(spec, -1.0, 1.0, lam, n)(0.0)), lap,
                 src("symmetric-laplace"), 1e-4)
    sym = bvp.solve_sequence(spec, -1.0, 1.0, n)
    yield _exact("bvp.mean_tau_sq", float(sym["mean_tau_sq"](0.0)), tau_sq, src("symmetric-tau-sq"), 1e-3)


@experiment(
    "feynman-kac",
    "Killed and weighted exit functionals: cosh/sinh identities, E[tau; hit +1]",
    n_paths=20_000, dt=1e-4, lam=0.5, bvp_n=2048,
)
def _feynman_kac(p, seed):
    s = _streams(seed, "feynman-kac")
    spec = sde.brownian_spec()
    cf, src = closed_forms.closed_form, closed_forms.source
    lam, n = p["lam"], p["bvp_n"]
    r = montecarlo.mc_exit_statistics(spec, 0.0, -1.0, 1.0, p["dt"], p["n_paths"], s(0))
    yield _mc("mc.tau-on-hit+1", r.tau_hit_b, cf("tau-on-hit-a", x=0, a=1), src("tau-on-hit-a"),
              _bias(r, "tau_hit_b"))
    cond = r.tau_given_hit_b()
    P, A = r.p_hit_b.mean, r.tau_hit_b.mean
    ratio_bias = _bias(r, "tau_hit_b") / P + A * _bias(r, "p_b") / (P * P)
    yield _mc("mc.tau-given-hit+1", cond, cf("tau-given-hit-a", x=0, a=1), src("tau-given-hit-a"), ratio_bias)

    u = bvp.laplace_bvp(spec, -1.0, 1.0, lam, n)
    for x in (-0.5, 0.0, 0.5):
        yield _exact(f"bvp.cosh.x{x:g}", float(u(x)), cf("symmetric-laplace", x=x, a=1, lam=lam),
                     src("symmetric-laplace"), 1e-4)
    w = bvp.solve_exit_bvp(bvp.BvpProblem(spec, -1.0, 1.0, 0.0, 1.0, q=lam, n=n))
    yield _exact("bvp.sinh.x0.3", float(w(0.3)), cf("laplace-hit-a-first", x=0.3, a=1, lam=lam),
                 src("laplace-hit-a-first"), 1e-4)
    seq = bvp.solve_sequence(spec, -1.0, 1.0, n)
    yield _exact("bvp.tau-on-hit+1.x0.3", float(seq["tau_hit_b"](0.3)), cf("tau-on-hit-a", x=0.3, a=1),
                 src("tau-on-hit-a"), 1e-3)


@experiment(
    "ball-exit",
    "Exit time of the unit ball in R^3 from the centre",
    n_paths=20_000, dt=1e-4, dim=3,
)
def _ball(p, seed):
    s = _streams(seed, "ball-exit")
    d = p["dim"]
    res = montecarlo.mc_ball_exit(s(0), d, 1.0, np.zeros(d), p["dt"], p["n_paths"])
    yield _mc("mean_tau.centre", res.mean_tau, closed_forms.closed_form("ball-exit", r=0, R=1, n=d),
              closed_forms.source("ball-exit"), 0.02)
    yield _exact("all-exited", float(res.n_not_exited), 0.0, "tau < inf almost surely", 0.0)


@experiment(
    "transience",
    "Annulus hitting in R^3 and the transience limit (R/|x|)^(n-2)",
    n_paths=20_000, dt=1e-4, r0=2.0, outer=16.0, far_outer=128.0,
)
def _transience(p, seed):
    s = _streams(seed, "transience")
    cf, src = closed_forms.closed_form, closed_forms.source
    x0 = np.array([p["r0"], 0.0, 0.0])
    res = montecarlo.mc_ball_exit(s(0), 3, 1.0, x0, p["dt"], p["n_paths"], outer_R=p["outer"])
    exact = cf("annulus-hit-inner", r=p["r0"], R=1, outer=p["outer"], n=3)
    yield _mc(f"annulus.outer{p['outer']:g}", res.p_inner_first, exact, src("annulus-hit-inner"),
              res.bias["p_inner_first"])
    res = montecarlo.mc_ball_exit(s(1), 3, 1.0, x0, p["dt"], p["n_paths"], outer_R=p["far_outer"])
    limit = cf("transience", r=p["r0"], R=1, n=3)
    gap = abs(cf("annulus-hit-inner", r=p["r0"], R=1, outer=p["far_outer"], n=3) - limit)
    yield _mc(f"annulus.outer{p['far_outer']:g}.vs-limit", res.p_inner_first, limit, src("transience"),
              res.bias["p_inner_first"] + gap)
    yield _exact("annulus.closed-form.limit", cf("annulus-hit-inner", r=p["r0"], R=1, outer=1e12, n=3), limit,
                 "annulus formula tends to (R/|x|)^(n-2) as the outer radius grows", 1e-9)


# -- densities ------------------------------------------------------------------------------


def _gauss(var):
    def rho(x):
        return np.exp(-x * x / (2 * var)) / math.sqrt(2 * math.pi * var)

    def d1(x):
        return -x / var * rho(x)

    def d2(x):
        return (x * x / (var * var) - 1.0 / var) * rho(x)

    return rho, d1, d2


@experiment(
    "fokker-planck",
    "Forward equation: heat kernel, semigroup property, OU stationarity, adjoint residual",
    n=2048, half_width=8.0, dt=1e-3, T=1.0, t0=0.25,
)
def _fokker_planck(p, seed):
    n, w, dt, T, t0 = p["n"], p["half_width"], p["dt"], p["T"], p["t0"]
    heat = sde.brownian_spec()
    rho0 = density.DensityGrid.from_function(_gauss(t0)[0], -w, w, n, t=t0)
    out = density.evolve_density(heat, rho0, dt, T)
    yield _exact("heat.l2-error", out.l2_distance(_gauss(t0 + T)[0]), 0.0, "heat kernel N(0, t) solves the forward equation", 1e-3)
    yield _exact("heat.mass-drift", out.mass_drift, 0.0, "the forward equation conserves mass", 1e-3)
    half = density.evolve_density(heat, density.evolve_density(heat, rho0, dt, T / 2), dt, T / 2)
    yield _exact("heat.semigroup", float(np.max(np.abs(half.values - out.values))), 0.0,
                 "P_{s+t} = P_s P_t", 1e-12)
    ou = sde.ou_spec(1.0, 1.0)
    stat = _gauss(0.5)
    pi0 = density.DensityGrid.from_function(stat[0], -w, w, n)
    pi1 = density.evolve_density(ou, pi0, dt, T)
    yield _exact("ou.stationary.sup-change", float(np.max(np.abs(pi1.values - pi0.values))), 0.0,
                 "N(0, 1/2) is stationary for dX = -X dt + dB", 1e-3)
    y = np.linspace(-5, 5, 1001)
    yield _exact("ou.adjoint-residual", float(np.max(np.abs(operators.apply_adjoint(ou, stat, y)))), 0.0,
                 "L* pi = 0 for the stationary density", 1e-6)
    rho, d1, d2 = _gauss(1.0)
    dt_rho = 0.5 * d2(y)
    resid = operators.apply_adjoint(heat, (rho, d1, d2), y) - dt_rho
    yield _exact("heat.adjoint-residual", float(np.max(np.abs(resid))), 0.0,
                 "d rho/dt = L* rho for the heat kernel", 1e-6)


@experiment(
    "ou-stationary",
    "Ornstein-Uhlenbeck: stationary law, transient variance, Ito construction",
    sigma=0.7, theta=1.0, n=2048, half_width=6.0, dt=1e-3, T=1.0, n_paths=20_000, log2_steps=10, t=1.0,
)
def _ou(p, seed):
    s = _streams(seed, "ou-stationary")
    sig, th = p["sigma"], p["theta"]
    spec = sde.ou_spec(sig, th)
    var_inf = sig * sig / (2 * th)
    stat = _gauss(var_inf)
    y = np.linspace(-4, 4, 801)
    yield _exact("adjoint-residual", float(np.max(np.abs(operators.apply_adjoint(spec, stat, y)))), 0.0,
                 "stationary density N(0, sigma^2/(2 theta)) solves L* pi = 0", 1e-6)
    pi0 = density.DensityGrid.from_function(stat[0], -p["half_width"], p["half_width"], p["n"])
    pi1 = density.evolve_density(spec, pi0, p["dt"], p["T"])
    yield _exact("density.sup-change", float(np.max(np.abs(pi1.values - pi0.values))), 0.0,
                 "the stationary density does not move", 1e-3)

    t = p["t"]
    n = 2 ** p["log2_steps"]
    dt = t / n
    grid = bm_mod.uniform_grid(t, n)
    bm = bm_mod.bm_batch(s(0), grid, p["n_paths"])
    oracle = var_inf * (1.0 - math.exp(-2 * th * t))
    X = sde.euler_maruyama(spec, 0.0, bm=bm).values[-1]
    q = (1.0 - th * dt) ** 2
    disc = sig * sig * dt * (1.0 - q**n) / (1.0 - q)
    yield _mc("euler.variance", variance_estimate(X), oracle, "OU Var X_t = sigma^2(1-e^{-2 theta t})/(2 theta)",
              abs(disc - oracle))
    model = sde.ExactModel("ou", {"sigma": sig, "theta": th})
    Xe = sde.exact_solution(model, bm, 0.0).values[-1]
    quad = sig * sig * math.exp(-2 * th * t) * float(np.sum(np.exp(2 * th * grid[:-1]) * dt))
    yield _mc("ito-construction.variance", variance_estimate(Xe), oracle,
              "X_t = e^{-theta t} sigma int e^{theta s} dB_s", abs(quad - oracle))


@experiment(
    "ou-exit",
    "Ornstein-Uhlenbeck exit probability as a ratio of integrals",
    n_paths=10_000, dt=1e-4, x0=0.3, bvp_n=4096,
)
def _ou_exit(p, seed):
    s = _streams(seed, "ou-exit")
    cf, src = closed_forms.closed_form, closed_forms.source
    x0 = p["x0"]
    yield _exact("symmetric-start", cf("ou-exit", x=0, a=-1, b=1, sigma=1), 0.5, "symmetry of the OU law", 1e-12)
    for sig in (1.0, 0.5):
        spec = sde.ou_spec(sig, 1.0)
        u = bvp.solve_exit_bvp(bvp.BvpProblem(spec, -1.0, 1.0, 1.0, 0.0, n=p["bvp_n"]))
        yield _exact(f"bvp.sigma{sig:g}", float(u(x0)), cf("ou-exit", x=x0, a=-1, b=1, sigma=sig), src("ou-exit"), 1e-4)
    spec = sde.ou_spec(1.0, 1.0)
    r = montecarlo.mc_exit_statistics(spec, x0, -1.0, 1.0, p["dt"], p["n_paths"], s(0))
    yield _mc("mc.sigma1", r.p_hit_a, cf("ou-exit", x=x0, a=-1, b=1, sigma=1), src("ou-exit"), _bias(r, "p_a"))


@experiment(
    "gbm-hitting",
    "Geometric Brownian motion: hitting 4 before a small level, mean hitting time",
    n_paths=20_000, dt=1e-3, eps=1e-4, r_low=0.25, r_high=1.0, b=4.0,
)
def _gbm(p, seed):
    s = _streams(seed, "gbm-hitting")
    cf, src = closed_forms.closed_form, closed_forms.source
    b, eps, dt = p["b"], p["eps"], p["dt"]
    spec = sde.gbm_spec(p["r_low"], 1.0)
    closed = cf("gbm-hit-b-before-a", x=1, a=eps, b=b, r=p["r_low"])
    limit = cf("gbm-hit-b-before-0", x=1, b=b, r=p["r_low"])
    r = montecarlo.mc_exit_statistics(spec, 1.0, eps, b, dt, p["n_paths"], s(0))
    yield _mc(f"mc.p-hit{b:g}.r{p['r_low']:g}", r.p_hit_b, limit, src("gbm-hit-b-before-0"),
              _bias(r, "p_b") + abs(closed - limit))
    n = max(2048, bvp.required_grid_size(spec, eps, b) or 2048)
    u = bvp.solve_exit_bvp(bvp.BvpProblem(spec, eps, b, 0.0, 1.0, n=n))
    yield _exact("bvp.p-hit", float(u(1.0)), closed, src("gbm-hit-b-before-a"), 1e-3)

    spec = sde.gbm_spec(p["r_high"], 1.0)
    mean = cf("gbm-mean-hit", x=1, b=b, r=p["r_high"])
    r = montecarlo.mc_exit_statistics(spec, 1.0, -math.inf, b, dt, p["n_paths"], s(1))
    shifted = cf("gbm-mean-hit", x=1, b=b * (1 + bm_mod.MONITORING_BETA * math.sqrt(dt)), r=p["r_high"])
    yield _mc(f"mc.mean-hit{b:g}.r{p['r_high']:g}", r.mean_tau, mean, src("gbm-mean-hit"), 2 * abs(shifted - mean))
    yield _exact("mc.all-hit", float(r.n_not_exited), 0.0, "tau_b < inf for r > 1/2", 0.0)


@experiment(
    "drifted-bm",
    "Brownian motion with drift -b hitting a: finite-horizon law and Laplace transform",
    n_paths=20_000, dt=1e-3, a=1.0, b=0.5, horizon=8.0, lam=1.0,
)
def _drifted(p, seed):
    s = _streams(seed, "drifted-bm")
    a, b, H, dt, lam = p["a"], p["b"], p["horizon"], p["dt"], p["lam"]
    cf = closed_forms.closed_form
    yield _exact("closed-form.lam0", cf("drifted-bm-laplace", a=a, b=b, lam=0.0), math.exp(-2 * a * b),
                 "general formula at lam=0 gives P[tau<inf] = e^{-2ab}", 1e-15)
    r = montecarlo.mc_exit_statistics(sde.drifted_bm_spec(-b, 1.0), 0.0, -math.inf, a, dt, p["n_paths"], s(0),
                                      lambdas=(lam,), t_max=H)
    hit = r.code == EXIT_B

    def law(level):
        rt = math.sqrt(H)
        return stats.norm.cdf((-level - b * H) / rt) + math.exp(-2 * b * level) * stats.norm.cdf((-level + b * H) / rt)

    shift = bm_mod.MONITORING_BETA * math.sqrt(dt)
    est = McEstimate.from_samples(hit.astype(np.float64))
    yield _mc(f"mc.p-hit-by{H:g}", est, law(a), "inverse Gaussian law of tau_a with drift",
              2 * abs(law(a + shift) - law(a)))
    excess = McEstimate(max(0.0, est.mean - math.exp(-2 * a * b)), est.stderr, est.n)
    yield _mc("mc.p-hit.below-e^{-2ab}", excess, 0.0, "P[tau<H] <= P[tau<inf] = e^{-2ab}")
    weights = McEstimate.from_samples(np.where(hit, np.exp(-lam * r.tau), 0.0))
    closed = cf("drifted-bm-laplace", a=a, b=b, lam=lam)
    moved = cf("drifted-bm-laplace", a=a + shift, b=b, lam=lam)
    yield _mc(f"mc.laplace.lam{lam:g}", weights, closed, closed_forms.source("drifted-bm-laplace"),
              2 * abs(moved - closed) + math.exp(-lam * H))


@experiment(
    "ehrenfest-limit",
    "Rescaled Ehrenfest chain: drift -2x and unit variance per unit time",
    n_balls=400,
)
def _ehrenfest_limit(p, seed):
    N = p["n_balls"]
    x, drift, var = montecarlo.ehrenfest_limit_moments(N)
    yield _exact("drift", float(np.max(np.abs(drift + 2 * x))), 0.0, "rescaled drift -2x (limit dX = -2X dt + dB)", 1e-9)
    yield _exact("variance.exact", float(np.max(np.abs(var - (1 - 4 * x * x / N)))), 0.0,
                 "rescaled variance 1 - 4x^2/N", 1e-9)
    inside = np.abs(x) <= 1.0
    yield _exact("variance.near-1", float(np.max(np.abs(var[inside] - 1.0))), 0.0,
                 "unit diffusion coefficient within 5% on |x| <= 1", 0.05)


@experiment(
    "arcsine",
    "Occupation time of (0, inf) vs the arcsine law",
    n_paths=20_000, dt=1e-4, t=1.0, scale_paths=5000, scale_t=4.0,
)
def _arcsine(p, seed):
    s = _streams(seed, "arcsine")
    frac = montecarlo.arcsine_occupation(s(0), p["t"], p["dt"], p["n_paths"])
    yield _exact("ks", ks_statistic(frac, montecarlo.arcsine_cdf), 0.0, "arcsine law (2/pi) arcsin(sqrt(u))", 0.02)
    below = McEstimate.from_samples((frac < 0.5).astype(np.float64))
    yield _mc("symmetry", below, 0.5, "arcsine law is symmetric about 1/2")
    m = p["scale_paths"]
    f1 = montecarlo.arcsine_occupation(s(1), p["t"], 1e-3 * p["t"], m)
    f2 = montecarlo.arcsine_occupation(s(2), p["scale_t"], 1e-3 * p["scale_t"], m)
    yield _exact("scaling.two-sample-ks", ks_two_sample(f1, f2), 0.0, "occupation fraction law does not depend on t",
                 ks_two_sample_critical(m, m))


# the minimal set named in the interface contract
REQUIRED = (
    "polya-limit", "gw-extinction", "ehrenfest", "doubling-strategy", "doob-audit", "bm-maximum",
    "first-passage", "cauchy-hit", "ito-bdb", "ito-isometry", "stratonovich", "euler-order", "picard",
    "exit-interval", "feynman-kac", "ball-exit", "transience", "fokker-planck", "ou-stationary",
    "gbm-hitting", "arcsine",
)


def list_experiments() -> list[tuple[str, str]]:
    return [(e.name, e.description) for e in REGISTRY.values()]
