"""Agreement measures and significance machinery.

Pairwise order consistency (OC_p) gives a pair full credit when both score
lists order it the same way, half credit when either list ties it, and no
credit otherwise.  With ``s = sign(x_i - x_j) * sign(y_i - y_j)`` the credit
is ``(1 + s) / 2``, so OC_p is ``1/2 + sum(s) / (2 * n_pairs)`` and exceedance
counts can be done on the integer ``sum(s)``.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from ._validation import check_not_constant, check_paired
from .exceptions import InsufficientDataError

MEASURES = ("r", "ocp")
DEFAULT_EXHAUSTIVE_LIMIT = 40_320  # 8!
PERM_BLOCK = 1000


def pearson_r(x, y):
    """Product-moment correlation of two equal-length, non-constant vectors."""
    x, y = check_paired(x, y, min_len=3)
    check_not_constant(x, "x")
    check_not_constant(y, "y")
    xc = x - x.mean()
    yc = y - y.mean()
    r = float(np.dot(xc, yc) / math.sqrt(float(np.dot(xc, xc)) * float(np.dot(yc, yc))))
    return min(1.0, max(-1.0, r))


def _sign_matrix(v):
    return np.sign(v[:, None] - v[None, :]).astype(np.int8)


def _concordance(x, y):
    """Twice the sum over unordered pairs of sign agreement (an integer)."""
    return int(np.sum(_sign_matrix(x).astype(np.int64) * _sign_matrix(y)))


def _ocp_from_concordance(s2, n):
    # One rounding of an exact integer ratio, so OC_p is correctly rounded.
    pairs2 = n * (n - 1)
    return (pairs2 + s2) / (2 * pairs2)


def pairwise_oc(x, y):
    """Fraction of item pairs ordered the same way by ``x`` and ``y``."""
    x, y = check_paired(x, y, min_len=2)
    return _ocp_from_concordance(_concordance(x, y), x.shape[0])


@dataclass
class NullDistribution:
    """Permutation null for one agreement measure.

    ``samples`` holds one value per permutation.  For exhaustive runs
    ``counts`` additionally maps each distinct null value to its
    multiplicity.
    """

    kind: str
    samples: np.ndarray
    n_permutations: int
    seed: object
    exhaustive: bool
    mean: float = float("nan")
    sd: float = float("nan")
    counts: dict = field(default_factory=dict)

    def quantiles(self, qs=(0.025, 0.5, 0.975)):
        return {q: float(np.quantile(self.samples, q)) for q in qs}

    def summary(self):
        out = {"kind": self.kind, "mean": self.mean, "sd": self.sd,
               "n_permutations": self.n_permutations, "exhaustive": self.exhaustive}
        for q, v in self.quantiles().items():
            out[f"q{q:g}"] = v
        return out


def _seed_entropy(seed):
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return int(seed)


def permutation_blocks(n, n_perm, seed, exhaustive_limit=DEFAULT_EXHAUSTIVE_LIMIT):
    """Yield blocks of index permutations, shape ``(block, n)``.

    Exhaustive enumeration is used when ``n! <= exhaustive_limit``.  Random
    block ``b`` draws from its own generator seeded by ``(seed, b)``, so the
    stream does not depend on how blocks are scheduled.
    """
    if math.factorial(n) <= exhaustive_limit:
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
        for start in range(0, perms.shape[0], PERM_BLOCK):
            yield perms[start:start + PERM_BLOCK]
        return
    if n_perm < 1:
        raise ValueError("n_perm must be >= 1")
    entropy = _seed_entropy(seed)
    base = np.tile(np.arange(n, dtype=np.intp), (PERM_BLOCK, 1))
    for b, start in enumerate(range(0, n_perm, PERM_BLOCK)):
        size = min(PERM_BLOCK, n_perm - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=(b,))))
        yield rng.permuted(base[:size], axis=1)


def permutation_nulls(model, human, measures=MEASURES, n_perm=10_000, seed=0,
                      exhaustive_limit=DEFAULT_EXHAUSTIVE_LIMIT):
    """Shuffle model scores against fixed human scores; one pass for all measures.

    Returns ``{measure: (p, NullDistribution)}``.  For ``r`` the p-value is
    the upper tail of a Gaussian fitted to the null; for ``ocp`` it is the
    fraction of null values at or above the observed one.
    """
    unknown = set(measures) - set(MEASURES)
    if unknown:
        raise ValueError(f"unknown measure(s): {sorted(unknown)}")
    model, human = check_paired(model, human, min_len=2)
    n = model.shape[0]
    exhaustive = math.factorial(n) <= exhaustive_limit
    if n_perm < 1 and not exhaustive:
        raise ValueError("n_perm must be >= 1")

    if "r" in measures:
        observed_r = pearson_r(model, human)
        mc = model - model.mean()
        mc = mc / np.linalg.norm(mc)
        hc = human - human.mean()
        hc = hc / np.linalg.norm(hc)
    if "ocp" in measures:
        sm = _sign_matrix(model)
        sh = _sign_matrix(human).astype(np.int64)
        observed_s2 = int(np.sum(sm.astype(np.int64) * sh))

    r_samples, s2_samples = [], []
    for perms in permutation_blocks(n, n_perm, seed, exhaustive_limit):
        if "r" in measures:
            r_samples.append(mc[perms] @ hc)
        if "ocp" in measures:
            permuted = sm[perms[:, :, None], perms[:, None, :]]
            s2_samples.append(np.einsum("bij,ij->b", permuted, sh, dtype=np.int64))

    out = {}
    if "r" in measures:
        samples = np.clip(np.concatenate(r_samples), -1.0, 1.0)
        mu = float(samples.mean())
        sd = float(samples.std(ddof=1)) if samples.size > 1 else 0.0
        if not sd > 0:
            raise InsufficientDataError("degenerate null distribution for r (zero spread)")
        null = NullDistribution("r", samples, samples.size, seed, exhaustive, mu, sd)
        if exhaustive:
            vals, cnt = np.unique(np.round(samples, 12), return_counts=True)
            null.counts = {float(v): int(c) for v, c in zip(vals, cnt)}
        out["r"] = (float(norm.sf(observed_r, loc=mu, scale=sd)), null)
    if "ocp" in measures:
        s2 = np.concatenate(s2_samples)
        samples = _ocp_from_concordance(s2, n)
        null = NullDistribution("ocp", samples, s2.size, seed, exhaustive,
                                float(samples.mean()),
                                float(samples.std(ddof=1)) if samples.size > 1 else 0.0)
        if exhaustive:
            vals, cnt = np.unique(s2, return_counts=True)
            null.counts = {_ocp_from_concordance(int(v), n): int(c) for v, c in zip(vals, cnt)}
        out["ocp"] = (int(np.count_nonzero(s2 >= observed_s2)) / s2.size, null)
    return out


def permutation_test(model, human, measure="r", n_perm=10_000, seed=0,
                     exhaustive_limit=DEFAULT_EXHAUSTIVE_LIMIT):
    """One-sided permutation p-value for a single measure.

    Returns
    -------
    p : float
    null : NullDistribution
    """
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    return permutation_nulls(model, human, (measure,), n_perm, seed, exhaustive_limit)[measure]


def fdr_by(pvals, q=0.05):
    """Benjamini-Yekutieli step-up procedure (valid under arbitrary dependence).

    Parameters
    ----------
    pvals : array_like
        Raw p-values in [0, 1].
    q : float
        Target false discovery rate.

    Returns
    -------
    adjusted : ndarray
        Monotone BY-adjusted p-values, capped at 1, in input order.
    reject : ndarray of bool
    """
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("pvals must be one-dimensional")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.shape[0]
    if m == 0:
        return np.empty(0), np.empty(0, dtype=bool)
    c_m = math.fsum(1.0 / i for i in range(1, m + 1))
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    ranks = np.arange(1, m + 1)
    below = ranked <= ranks / m * (q / c_m)
    k = int(ranks[below].max()) if below.any() else 0
    reject = np.zeros(m, dtype=bool)
    reject[order[:k]] = True
    scaled = ranked * m * c_m / ranks
    adj_sorted = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
    adjusted = np.empty(m)
    adjusted[order] = adj_sorted
    return adjusted, reject


def adjust_upper_bound(value, reliability, kind="r"):
    """Scale an agreement score by the human reliability ceiling, capped at 1.

    For ``r`` this is ``sqrt(value**2 / reliability**2)``; the sign of
    ``value`` is dropped and must be reported separately.
    """
    if not reliability > 0:
        raise ValueError(f"reliability must be positive, got {reliability}")
    if kind == "r":
        out = abs(value) / reliability
    elif kind == "ocp":
        out = value / reliability
    else:
        raise ValueError(f"kind must be 'r' or 'ocp', got {kind!r}")
    return float(min(1.0, max(0.0, out)))


@dataclass(frozen=True)
class SchemeComparison:
    median_a: float
    median_b: float
    cohen_d: float
    p: float
    n: int
    exhaustive: bool


def _sign_blocks(n, n_perm, seed, exhaustive_limit):
    if 2 ** n <= exhaustive_limit:
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
        yield signs
        return
    entropy = _seed_entropy(seed)
    for b, start in enumerate(range(0, n_perm, PERM_BLOCK)):
        size = min(PERM_BLOCK, n_perm - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=(b,))))
        yield np.where(rng.random((size, n)) < 0.5, -1.0, 1.0)


def compare_schemes(values_a, values_b, n_perm=10_000, seed=0,
                    exhaustive_limit=DEFAULT_EXHAUSTIVE_LIMIT):
    """Paired comparison of two scoring schemes over the same experiments.

    ``values_a`` and ``values_b`` map experiment ids to scores.  The p-value
    is a one-sided sign-flip permutation test of mean(a - b) > 0.
    """
    keys_a, keys_b = set(values_a), set(values_b)
    if keys_a != keys_b:
        raise ValueError(f"experiment keys differ: {sorted(keys_a ^ keys_b)}")
    keys = sorted(keys_a)
    if len(keys) < 2:
        raise InsufficientDataError("need at least two experiments to compare schemes")
    a = np.array([values_a[k] for k in keys], dtype=np.float64)
    b = np.array([values_b[k] for k in keys], dtype=np.float64)
    d = a - b
    sd = float(d.std(ddof=1))
    mean = float(d.mean())
    if sd > 0:
        cohen_d = mean / sd
    else:
        cohen_d = 0.0 if mean == 0 else math.copysign(math.inf, mean)

    n = d.shape[0]
    observed = float(d.sum())
    tol = 1e-12 * float(np.abs(d).sum())
    hits = total = 0
    for signs in _sign_blocks(n, n_perm, seed, exhaustive_limit):
        null = signs @ d
        hits += int(np.count_nonzero(null >= observed - tol))
        total += null.shape[0]
    return SchemeComparison(float(np.median(a)), float(np.median(b)), cohen_d,
                            hits / total, n, 2 ** n <= exhaustive_limit)
