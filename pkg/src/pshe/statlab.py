"""Statistical verdicts: KS distances, variance/covariance intervals, slope fits, trend tests.

Every check returns a TestReport whose pass flag is a pure function of the
statistic and its critical value; thresholds sit at the 1 percent level
globally unless a criterion states otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import norm

__all__ = [
    "TestReport",
    "ks_normal",
    "ks_uniform",
    "ks_two_sample",
    "variance_ci",
    "mean_ci",
    "loglog_slope",
    "trend_to_zero",
    "interval_contains",
    "reports_to_json",
    "all_passed",
]

KS_ONE_PCT = 1.628   # asymptotic one-percent Kolmogorov-Smirnov coefficient
Z_ONE_PCT = 2.5758293035489004  # two-sided 1% normal quantile


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        # strict-JSON consumers cannot parse Infinity/NaN
        return float(v) if math.isfinite(v) else None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class TestReport:
    name: str
    statistic: float
    critical: float
    passed: bool
    n: int
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.statistic = float(self.statistic)
        self.critical = float(self.critical)
        self.passed = bool(self.passed)
        self.n = int(self.n)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: _jsonable(v) if k != "details" else _jsonable(self.details)
                for k, v in d.items()}


def reports_to_json(reports, path=None) -> str:
    payload = json.dumps([r.to_dict() for r in reports], indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(payload)
    return payload


def all_passed(reports) -> bool:
    return all(r.passed for r in reports)


def _ks_distance_to_cdf(samples: np.ndarray, cdf_vals: np.ndarray) -> float:
    n = len(samples)
    up = np.arange(1, n + 1) / n - cdf_vals
    lo = cdf_vals - np.arange(0, n) / n
    return float(max(up.max(), lo.max()))


def ks_normal(samples, mu: float, var: float, name: str = "ks_normal") -> TestReport:
    """One-sample KS against N(mu, var) at the 1% level (critical 1.628/sqrt(n))."""
    samples = np.sort(np.asarray(samples, dtype=float))
    n = len(samples)
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    if var <= 0:
        raise ValueError("variance must be positive")
    cdf = norm.cdf((samples - mu) / math.sqrt(var))
    d = _ks_distance_to_cdf(samples, cdf)
    crit = KS_ONE_PCT / math.sqrt(n)
    return TestReport(name=name, statistic=d, critical=crit, passed=d < crit, n=n,
                      details={"mu": mu, "var": var,
                               "critical_formula": "1.628/sqrt(n), 1% asymptotic"})


def ks_uniform(pvals, name: str = "ks_uniform") -> TestReport:
    """KS of probability-integral-transformed samples against Uniform(0,1)."""
    p = np.sort(np.asarray(pvals, dtype=float))
    n = len(p)
    d = _ks_distance_to_cdf(p, p)
    crit = KS_ONE_PCT / math.sqrt(n)
    return TestReport(name=name, statistic=d, critical=crit, passed=d < crit, n=n,
                      details={"critical_formula": "1.628/sqrt(n), 1% asymptotic"})


def ks_two_sample(a, b, name: str = "ks_two_sample") -> TestReport:
    """Two-sample KS at the 1% level (critical 1.628 sqrt((n+m)/nm))."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n, m = len(a), len(b)
    allv = np.concatenate([a, b])
    cdfa = np.searchsorted(a, allv, side="right") / n
    cdfb = np.searchsorted(b, allv, side="right") / m
    d = float(np.abs(cdfa - cdfb).max())
    crit = KS_ONE_PCT * math.sqrt((n + m) / (n * m))
    return TestReport(name=name, statistic=d, critical=crit, passed=d < crit,
                      n=n + m, details={"n_a": n, "n_b": m,
                                        "critical_formula": "1.628*sqrt((n+m)/nm)"})


def variance_ci(samples, confidence: float = 0.99, n_boot: int = 2000,
                seed: int = 0) -> tuple[float, tuple[float, float]]:
    """Sample variance with the wider of a normal-theory and a bootstrap CI."""
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n < 30:
        raise ValueError(f"need at least 30 samples, got {n}")
    v = float(x.var(ddof=1))
    if v == 0.0:
        return 0.0, (0.0, 0.0)
    # normal-theory: chi-squared interval
    from scipy.stats import chi2
    alpha = 1.0 - confidence
    lo_n = (n - 1) * v / chi2.ppf(1 - alpha / 2, n - 1)
    hi_n = (n - 1) * v / chi2.ppf(alpha / 2, n - 1)
    gen = np.random.Generator(np.random.Philox(key=seed))
    idx = gen.integers(0, n, size=(n_boot, n))
    bv = x[idx].var(axis=1, ddof=1)
    lo_b, hi_b = np.quantile(bv, [alpha / 2, 1 - alpha / 2])
    return v, (min(lo_n, float(lo_b)), max(hi_n, float(hi_b)))


def mean_ci(samples, z: float = Z_ONE_PCT) -> tuple[float, float, tuple[float, float]]:
    """(mean, se, CI) with a z-interval at the 1% level by default."""
    x = np.asarray(samples, dtype=float)
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(len(x)))
    return m, se, (m - z * se, m + z * se)


def interval_contains(interval, value: float) -> bool:
    return interval[0] <= value <= interval[1]


def loglog_slope(pairs, name: str = "loglog_slope") -> tuple[float, tuple[float, float]]:
    """Least-squares slope of log v against log r with a residual-based 99% CI."""
    pairs = np.asarray(pairs, dtype=float)
    if pairs.shape[0] < 4:
        raise ValueError("need at least 4 points")
    if np.any(pairs <= 0):
        raise ValueError("log-log fit needs positive values")
    x = np.log(pairs[:, 0])
    y = np.log(pairs[:, 1])
    n = len(x)
    A = np.column_stack([x, np.ones(n)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    if n > 2:
        resid = y - A @ coef
        s2 = float(resid @ resid) / (n - 2)
        sxx = float(((x - x.mean()) ** 2).sum())
        se = math.sqrt(s2 / sxx) if sxx > 0 else 0.0
        from scipy.stats import t as tdist
        half = tdist.ppf(0.995, n - 2) * se
    else:
        half = 0.0
    return slope, (slope - half, slope + half)


def trend_to_zero(values, ses, name: str = "trend_to_zero",
                  z: float = Z_ONE_PCT) -> TestReport:
    """Magnitude decreasing (within noise) and final confidence interval containing 0.

    The decrease check allows each step z combined standard errors of slack;
    the final point must satisfy |v| <= z se.
    """
    v = np.asarray(values, dtype=float)
    s = np.asarray(ses, dtype=float)
    if len(v) < 3:
        raise ValueError("need at least 3 horizons")
    decreasing = True
    for k in range(len(v) - 1):
        slack = z * math.hypot(s[k], s[k + 1])
        if abs(v[k + 1]) > abs(v[k]) + slack:
            decreasing = False
    final_ok = abs(v[-1]) <= z * s[-1]
    if s[-1] > 0:
        stat = abs(v[-1]) / s[-1]
    else:
        stat = 0.0 if v[-1] == 0 else math.inf
        final_ok = v[-1] == 0
    return TestReport(name=name, statistic=float(stat), critical=z,
                      passed=bool(decreasing and final_ok), n=len(v),
                      details={"values": list(map(float, v)),
                               "ses": list(map(float, s)),
                               "decreasing": decreasing,
                               "final_ci_contains_zero": bool(final_ok)})
