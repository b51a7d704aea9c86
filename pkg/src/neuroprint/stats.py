"""Nonparametric and parametric tests used to verify the analyses.

Kruskal-Wallis rank ANOVA with tie correction, a permutation t-test
(sign-flip when paired, group relabelling otherwise) and the classic paired
t-test.  Survival functions come from the regularized incomplete gamma /
Student-t integrals in scipy.special.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class TestResult:
    """A test statistic with its two-sided p-value.

    ``df`` is set for distribution-based tests, ``n_permutations`` for
    resampling tests.
    """

    statistic: float
    p: float
    df: int | None = None
    n_permutations: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p-value {self.p} outside [0, 1]")


def chi2_sf(x: float, df: int) -> float:
    """Chi-square survival function via the regularized incomplete gamma."""
    if df < 1:
        raise ConfigError(f"df must be >= 1, got {df}")
    if x < 0:
        raise ConfigError(f"chi-square statistic must be >= 0, got {x}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def t_sf(t: float, df: int) -> float:
    """Student-t survival function P(T > t) via the incomplete beta."""
    if df < 1:
        raise ConfigError(f"df must be >= 1, got {df}")
    return float(special.stdtr(df, -t))


def _midranks(pooled: np.ndarray) -> np.ndarray:
    """Ranks 1..N with ties sharing their average rank."""
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled))
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def kruskal_wallis(groups: list[np.ndarray]) -> TestResult:
    """Kruskal-Wallis H test across two or more groups.

    Mid-ranks for ties, the usual tie correction, and a chi-square
    approximation with g - 1 degrees of freedom.  When every observation is
    identical the statistic is defined as 0 (p = 1).
    """
    if len(groups) < 2:
        raise ConfigError(f"need >= 2 groups, got {len(groups)}")
    arrays = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    if any(a.size == 0 for a in arrays):
        raise DataError("empty group")
    pooled = np.concatenate(arrays)
    n = pooled.size
    ranks = _midranks(pooled)
    h = 0.0
    start = 0
    for a in arrays:
        r = ranks[start : start + a.size]
        h += a.size * (r.mean() - (n + 1) / 2.0) ** 2
        start += a.size
    h *= 12.0 / (n * (n + 1))
    _, tie_counts = np.unique(pooled, return_counts=True)
    correction = 1.0 - np.sum(tie_counts**3 - tie_counts) / (n**3 - n)
    if correction == 0.0:
        return TestResult(statistic=0.0, p=1.0, df=len(groups) - 1)
    h /= correction
    return TestResult(statistic=float(h), p=chi2_sf(h, len(groups) - 1),
                      df=len(groups) - 1)


def _welch_t(a: np.ndarray, b: np.ndarray) -> float:
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    denom = np.sqrt(va + vb)
    if denom == 0.0:
        diff = a.mean() - b.mean()
        return 0.0 if diff == 0.0 else np.inf * np.sign(diff)
    return float((a.mean() - b.mean()) / denom)


def _paired_t(d: np.ndarray) -> float:
    sd = d.std(ddof=1)
    if sd == 0.0:
        m = d.mean()
        return 0.0 if m == 0.0 else np.inf * np.sign(m)
    return float(d.mean() / (sd / np.sqrt(d.size)))


def paired_ttest(a: np.ndarray, b: np.ndarray) -> TestResult:
    """Two-sided paired t-test on elementwise differences, df = n - 1."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise DataError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise DataError(f"need >= 2 pairs, got {a.size}")
    d = a - b
    if d.std(ddof=1) == 0.0:
        raise DataError("degenerate pairing: differences have zero variance")
    t = _paired_t(d)
    return TestResult(statistic=t, p=2.0 * t_sf(abs(t), a.size - 1), df=a.size - 1)


def permutation_ttest(
    a: np.ndarray,
    b: np.ndarray,
    n_perm: int = 10000,
    seed: int = 0,
    paired: bool = False,
) -> TestResult:
    """Permutation test on a t statistic, two-sided with add-one smoothing.

    Paired samples are resampled by random sign flips of the differences;
    independent samples by random relabelling of the pooled data (the
    observed statistic is Welch's t).  p = (1 + #{|t*| >= |t|}) / (1 + n_perm),
    so p is never below 1 / (1 + n_perm).
    """
    if n_perm < 100:
        raise ConfigError(f"n_perm must be >= 100, got {n_perm}")
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise DataError("empty input")
    rng = np.random.default_rng(seed)
    if paired:
        if a.size != b.size:
            raise DataError(f"length mismatch for paired test: {a.size} vs {b.size}")
        d = a - b
        t_obs = _paired_t(d)
        flipped = d * rng.choice([-1.0, 1.0], size=(n_perm, d.size))
        means = flipped.mean(axis=1)
        sds = flipped.std(axis=1, ddof=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_perm = means / (sds / np.sqrt(d.size))
        limit = np.where(means > 0, np.inf, np.where(means < 0, -np.inf, 0.0))
        t_perm = np.where(sds == 0.0, limit, t_perm)
    else:
        pooled = np.concatenate([a, b])
        t_obs = _welch_t(a, b)
        idx = rng.random((n_perm, pooled.size)).argsort(axis=1)
        shuffled = pooled[idx]
        ga, gb = shuffled[:, : a.size], shuffled[:, a.size :]
        va = ga.var(axis=1, ddof=1) / a.size
        vb = gb.var(axis=1, ddof=1) / b.size
        diff = ga.mean(axis=1) - gb.mean(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_perm = diff / np.sqrt(va + vb)
        limit = np.where(diff > 0, np.inf, np.where(diff < 0, -np.inf, 0.0))
        t_perm = np.where((va + vb) == 0.0, limit, t_perm)
    exceed = int(np.sum(np.abs(t_perm) >= abs(t_obs)))
    p = (1.0 + exceed) / (1.0 + n_perm)
    return TestResult(statistic=t_obs, p=p, n_permutations=n_perm)
