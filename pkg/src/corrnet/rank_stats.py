"""Rank correlation (Spearman's rho, Kendall's tau-b) and two-sided tests.

Exact null distributions are used for tie-free samples up to
``exact_n_max`` observations; anything tied or larger falls back to the
asymptotic approximations.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import betainc

from .errors import DegenerateInput, NonFinite, TooFewObservations
from .returns import ReturnsMatrix

METHODS = ("spearman", "kendall_b")
MISSING_POLICIES = ("pairwise_complete", "listwise_complete")
EXACT_N_MAX = 8
# full enumeration of n! rank permutations is kept below this size
SPEARMAN_ENUM_LIMIT = 10


@dataclass(frozen=True)
class CorrEstimate:
    pair: tuple[str, str]
    method: str
    value: float
    n: int
    had_ties: bool
    p_two_sided: float
    p_kind: str  # "exact" | "asymptotic"

    @property
    def name(self) -> str:
        return f"{self.pair[0]} {self.pair[1]}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pair"] = list(self.pair)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "CorrEstimate":
        return cls(tuple(d["pair"]), d["method"], float(d["value"]), int(d["n"]),
                   bool(d["had_ties"]), float(d["p_two_sided"]), d["p_kind"])


def _as_vector(values) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise NonFinite("input contains NaN or infinite values")
    return x


def midranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of the positions they span."""
    x = _as_vector(values)
    n = x.size
    if n == 0:
        raise ValueError("midranks of an empty sequence")
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], n]
    ranks = np.empty(n)
    ranks[order] = np.repeat((starts + ends + 1) / 2.0, ends - starts)
    return ranks


def _check_pair(x, y, min_n=3):
    x, y = _as_vector(x), _as_vector(y)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < min_n:
        raise ValueError(f"need at least {min_n} observations, got {x.size}")
    return x, y


def _has_ties(x: np.ndarray) -> bool:
    return np.unique(x).size < x.size


def spearman_rho(x, y) -> float:
    x, y = _check_pair(x, y)
    rx, ry = midranks(x), midranks(y)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInput("constant series has zero rank variance")
    rho = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


def concordance_counts(x, y) -> tuple[int, int, int, int]:
    """(concordant, discordant, pairs untied in x, pairs untied in y).

    Pairs tied in either series count as neither concordant nor discordant.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    i, j = np.triu_indices(x.size, 1)
    sx = np.sign(x[j] - x[i])
    sy = np.sign(y[j] - y[i])
    prod = sx * sy
    return (int(np.count_nonzero(prod > 0)), int(np.count_nonzero(prod < 0)),
            int(np.count_nonzero(sx)), int(np.count_nonzero(sy)))


def kendall_tau_b(x, y) -> float:
    x, y = _check_pair(x, y)
    nc, nd, nx, ny = concordance_counts(x, y)
    if nx == 0 or ny == 0:
        raise DegenerateInput("every pair is tied in at least one series")
    # nx * ny is an exact integer, so the no-ties case reduces to (nc - nd) / n_pairs exactly
    return (nc - nd) / math.sqrt(nx * ny)


def _two_sided(le: int, ge: int, total: int) -> float:
    return min(1.0, 2 * min(le, ge) / total)


@lru_cache(maxsize=None)
def spearman_null_counts(n: int) -> np.ndarray:
    """Histogram of sum((i - pi(i))**2) over all n! permutations."""
    if n > SPEARMAN_ENUM_LIMIT:
        raise ValueError(f"exact Spearman enumeration is limited to n <= {SPEARMAN_ENUM_LIMIT}")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    d2 = ((perms - np.arange(n)) ** 2).sum(axis=1)
    return np.bincount(d2)


@lru_cache(maxsize=None)
def inversion_counts(n: int) -> tuple[int, ...]:
    """Number of permutations of n items with k inversions, k = 0..n(n-1)/2."""
    counts = [1]
    for m in range(2, n + 1):
        nxt = [0] * (len(counts) + m - 1)
        for k, c in enumerate(counts):
            for extra in range(m):
                nxt[k + extra] += c
        counts = nxt
    return tuple(counts)


def _t_two_sided(t: float, df: int) -> float:
    # P(|T| >= |t|) for Student's t with df degrees of freedom
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def spearman_asymptotic_p(rho: float, n: int) -> float:
    if abs(rho) >= 1.0:
        return 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return _t_two_sided(t, n - 2)


def _tie_groups(x: np.ndarray) -> np.ndarray:
    _, counts = np.unique(x, return_counts=True)
    return counts[counts > 1].astype(float)


def kendall_s_variance(x, y) -> float:
    """Null variance of S = n_c - n_d with tie corrections.

    var(S) = (v0 - vt - vu) / 18 + v1 / (2n(n-1)) + v2 / (9n(n-1)(n-2))
    with v0 = n(n-1)(2n+5), vt = sum t(t-1)(2t+5) over tie groups t of x,
    vu the same over tie groups u of y, v1 = sum t(t-1) * sum u(u-1) and
    v2 = sum t(t-1)(t-2) * sum u(u-1)(u-2).
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    n = float(x.size)
    t, u = _tie_groups(x), _tie_groups(y)
    v0 = n * (n - 1) * (2 * n + 5)
    vt = float(np.sum(t * (t - 1) * (2 * t + 5)))
    vu = float(np.sum(u * (u - 1) * (2 * u + 5)))
    v1 = float(np.sum(t * (t - 1))) * float(np.sum(u * (u - 1)))
    v2 = float(np.sum(t * (t - 1) * (t - 2))) * float(np.sum(u * (u - 1) * (u - 2)))
    return (v0 - vt - vu) / 18.0 + v1 / (2 * n * (n - 1)) + v2 / (9 * n * (n - 1) * (n - 2))


def sr_test(x, y, exact_n_max: int = EXACT_N_MAX, pair=("x", "y")) -> CorrEstimate:
    x, y = _check_pair(x, y)
    rho = spearman_rho(x, y)
    n = x.size
    ties = _has_ties(x) or _has_ties(y)
    if not ties and n <= exact_n_max:
        counts = spearman_null_counts(n)
        rx, ry = midranks(x), midranks(y)
        d_obs = int(round(float(((rx - ry) ** 2).sum())))
        le = int(counts[: d_obs + 1].sum())  # rho >= observed
        ge = int(counts[d_obs:].sum())       # rho <= observed
        p, kind = _two_sided(le, ge, math.factorial(n)), "exact"
    else:
        p, kind = spearman_asymptotic_p(rho, n), "asymptotic"
    return CorrEstimate(tuple(pair), "spearman", rho, n, ties, p, kind)


def kt_test(x, y, exact_n_max: int = EXACT_N_MAX, pair=("x", "y")) -> CorrEstimate:
    x, y = _check_pair(x, y)
    tau = kendall_tau_b(x, y)
    n = x.size
    ties = _has_ties(x) or _has_ties(y)
    nc, nd, _, _ = concordance_counts(x, y)
    if not ties and n <= exact_n_max:
        counts = inversion_counts(n)
        inv = nd  # without ties the discordant pairs are the inversions
        le = sum(counts[: inv + 1])  # tau >= observed
        ge = sum(counts[inv:])       # tau <= observed
        p, kind = _two_sided(le, ge, math.factorial(n)), "exact"
    else:
        var = kendall_s_variance(x, y)
        s = nc - nd
        p = 1.0 if s == 0 else math.erfc(abs(s) / math.sqrt(2.0 * var))
        kind = "asymptotic"
    return CorrEstimate(tuple(pair), "kendall_b", tau, n, ties, min(1.0, p), kind)


TESTS = {"spearman": sr_test, "kendall_b": kt_test}


@dataclass
class CorrelationMatrix:
    assets: tuple[str, ...]
    method: str
    missing_policy: str = "pairwise_complete"
    # keyed by (a, b) with a before b in asset order
    estimates: dict = field(default_factory=dict)

    def key(self, a: str, b: str) -> tuple[str, str]:
        ia, ib = self.assets.index(a), self.assets.index(b)
        if ia == ib:
            raise KeyError("diagonal is not stored")
        return (a, b) if ia < ib else (b, a)

    def get(self, a: str, b: str) -> CorrEstimate:
        return self.estimates[self.key(a, b)]

    def value(self, a: str, b: str) -> float:
        return self.get(a, b).value

    def pairs(self) -> list[tuple[str, str]]:
        return list(itertools.combinations(self.assets, 2))

    def to_array(self) -> np.ndarray:
        k = len(self.assets)
        out = np.eye(k)
        for i, j in itertools.combinations(range(k), 2):
            out[i, j] = out[j, i] = self.estimates[(self.assets[i], self.assets[j])].value
        return out

    def subset(self, symbols: Sequence[str]) -> "CorrelationMatrix":
        keep = tuple(a for a in self.assets if a in set(symbols))
        est = {p: e for p, e in self.estimates.items() if p[0] in keep and p[1] in keep}
        return CorrelationMatrix(keep, self.method, self.missing_policy, est)

    def to_dict(self) -> dict:
        return {
            "assets": list(self.assets),
            "method": self.method,
            "missing_policy": self.missing_policy,
            "estimates": [self.estimates[p].to_dict() for p in self.pairs()],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CorrelationMatrix":
        est = [CorrEstimate.from_dict(e) for e in d["estimates"]]
        cm = cls(tuple(d["assets"]), d["method"], d.get("missing_policy", "pairwise_complete"))
        for e in est:
            cm.estimates[cm.key(*e.pair)] = e
        return cm

    @classmethod
    def from_values(cls, assets: Sequence[str], values: Mapping[tuple[str, str], float],
                    method: str = "spearman", n: int = 0) -> "CorrelationMatrix":
        """Hand-built matrix; p-values are left at 1.0 with kind "asymptotic"."""
        cm = cls(tuple(assets), method)
        for (a, b), v in values.items():
            k = cm.key(a, b)
            cm.estimates[k] = CorrEstimate(k, method, float(v), n, False, 1.0, "asymptotic")
        missing = [p for p in cm.pairs() if p not in cm.estimates]
        if missing:
            raise ValueError(f"no value for pairs {missing}")
        return cm


def corr_matrix(m: ReturnsMatrix, method: str = "spearman",
                missing_policy: str = "pairwise_complete",
                exact_n_max: int = EXACT_N_MAX, workers: int | None = None) -> CorrelationMatrix:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if missing_policy not in MISSING_POLICIES:
        raise ValueError(f"unknown missing policy {missing_policy!r}")
    symbols = m.symbols
    if len(symbols) < 2:
        raise ValueError("need at least 2 assets")
    present = ~m.missing
    all_rows = present.all(axis=1)
    test = TESTS[method]

    def one(ij):
        i, j = ij
        rows = all_rows if missing_policy == "listwise_complete" else present[:, i] & present[:, j]
        pair = (symbols[i], symbols[j])
        n = int(rows.sum())
        if n < 3:
            raise TooFewObservations(pair, n)
        try:
            return test(m.values[rows, i], m.values[rows, j], exact_n_max, pair=pair)
        except DegenerateInput as exc:
            raise DegenerateInput(f"pair {pair[0]} {pair[1]}: {exc}") from None

    index_pairs = list(itertools.combinations(range(len(symbols)), 2))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, index_pairs))
    else:
        results = [one(ij) for ij in index_pairs]
    cm = CorrelationMatrix(tuple(symbols), method, missing_policy)
    for est in results:
        cm.estimates[est.pair] = est
    return cm


@dataclass(frozen=True)
class RankedPair:
    rank: int
    pair: tuple[str, str]
    value: float
    n: int = 0
    p: float = 1.0
    p_kind: str = "asymptotic"

    @property
    def name(self) -> str:
        return f"{self.pair[0]} {self.pair[1]}"


def rank_pairs(cm: CorrelationMatrix) -> list[RankedPair]:
    """All pairs by value, descending; equal values ordered by pair name."""
    ests: Iterable[CorrEstimate] = cm.estimates.values()
    ordered = sorted(ests, key=lambda e: (-e.value, e.name))
    return [RankedPair(r, e.pair, e.value, e.n, e.p_two_sided, e.p_kind)
            for r, e in enumerate(ordered, start=1)]
