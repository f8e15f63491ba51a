"""CHSH estimators and hypothesis tests for event-ready trial logs.

Two significance analyses are provided. The conventional one assumes i.i.d.
trials, Gaussian statistics, and perfect input randomness: a one-sided normal
tail at z = (S - 2) / sigma_S. The complete one allows arbitrary memory in
the devices and partially predictable inputs: with uniform settings, no local
realist strategy can win a trial (in the sense (-1)^(a b) x y = 1) with
probability above 3/4 regardless of history, so the number of wins k out of
n is stochastically dominated by a binomial, and its exact tail is a valid
p-value bound. Input predictability tau relaxes the per-trial win bound to
3/4 + c tau (the adjustment coefficient is configurable and conservative).

The binomial tail is summed in exact rational arithmetic, never a naive
float loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .quantum import QuantumState, expectation
from .readout import ReadoutBasisSet, ReadoutModel, effective_observable
from .quantum import Observable

SETTING_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))
CHSH_SIGNS = {(0, 0): 1.0, (0, 1): 1.0, (1, 0): 1.0, (1, 1): -1.0}

DEFAULT_WIN_ADJUSTMENT = 3.0  # conservative: every favourable pair may gain tau


class StatisticsError(ValueError):
    """Invalid estimator input."""


class MissingSettingError(StatisticsError):
    """A setting pair has no trials, leaving S undefined."""


@dataclass(frozen=True)
class SettingCell:
    """Per-setting-pair counts and correlation estimate."""

    n: int
    n_agree: int
    n_disagree: int
    correlation: float
    std_error: float


@dataclass(frozen=True)
class ChshEstimate:
    cells: tuple[tuple[tuple[int, int], SettingCell], ...]
    s: float
    sigma_s: float

    def cell(self, a: int, b: int) -> SettingCell:
        return dict(self.cells)[(a, b)]


def chsh_estimate(records: Sequence) -> ChshEstimate:
    """Correlation table, S, and its standard error from trial records.

    E(a,b) = (N_agree - N_disagree) / n(a,b), S = E00 + E01 + E10 - E11,
    per-cell standard error sqrt((1 - E^2)/n), sigma_S the root sum square.
    """
    counts = {pair: [0, 0] for pair in SETTING_PAIRS}  # [agree, disagree]
    for rec in records:
        pair = (rec.a, rec.b)
        if pair not in counts:
            raise StatisticsError(f"invalid settings {pair}")
        counts[pair][0 if rec.x * rec.y == 1 else 1] += 1
    missing = [pair for pair, (agree, dis) in counts.items() if agree + dis == 0]
    if missing:
        raise MissingSettingError(
            "no trials for setting pair(s): " + ", ".join(str(p) for p in missing)
        )
    cells = []
    s = 0.0
    var = 0.0
    for pair in SETTING_PAIRS:
        agree, dis = counts[pair]
        n = agree + dis
        e = (agree - dis) / n
        se = math.sqrt(max(0.0, 1.0 - e * e) / n)
        cells.append((pair, SettingCell(n, agree, dis, e, se)))
        s += CHSH_SIGNS[pair] * e
        var += se * se
    return ChshEstimate(tuple(cells), s, math.sqrt(var))


def win_count(records: Iterable) -> int:
    """Number of trials with (-1)^(a b) x y = 1."""
    return sum(1 for rec in records if (-1) ** (rec.a * rec.b) * rec.x * rec.y == 1)


def i_statistic(k: int, n: int) -> float:
    """I = 8 (k/n - 1/2), computed exactly before the final float conversion."""
    if n < 1:
        raise StatisticsError("n must be >= 1")
    if not 0 <= k <= n:
        raise StatisticsError(f"k={k} outside [0, {n}]")
    return float(8 * (Fraction(k, n) - Fraction(1, 2)))


def conventional_pvalue(s: float, sigma_s: float) -> float:
    """One-sided Gaussian tail at z = (S - 2) / sigma_S."""
    if sigma_s <= 0:
        raise StatisticsError("sigma_S must be positive")
    z = (s - 2.0) / sigma_s
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def binomial_tail(k: int, n: int, q: Fraction) -> Fraction:
    """P(X >= k) for X ~ Binomial(n, q), in exact rational arithmetic."""
    if n < 0 or not 0 <= k <= n:
        raise StatisticsError(f"invalid tail arguments k={k}, n={n}")
    if not 0 <= q <= 1:
        raise StatisticsError("q must be in [0, 1]")
    one_minus = 1 - q
    total = Fraction(0)
    for j in range(k, n + 1):
        total += math.comb(n, j) * q**j * one_minus**(n - j)
    return total


def win_probability_bound(tau_out: float,
                          win_adjustment: float = DEFAULT_WIN_ADJUSTMENT) -> Fraction:
    """Per-trial local-realist win bound 3/4 + c tau, capped at 1."""
    if not 0.0 <= tau_out < 0.25:
        raise StatisticsError("tau_out must be in [0, 1/4)")
    if win_adjustment < 0:
        raise StatisticsError("win adjustment must be non-negative")
    q = Fraction(3, 4) + Fraction(win_adjustment) * Fraction(tau_out)
    return min(q, Fraction(1))


def complete_pvalue(k: int, n: int, tau_out: float = 0.0,
                    win_adjustment: float = DEFAULT_WIN_ADJUSTMENT) -> float:
    """Memory-robust p-value bound: exact binomial tail at the win bound.

    Valid against any local realist model with memory; decreasing in k at
    fixed (n, tau), increasing in tau at fixed (k, n). A win bound >= 1
    degenerates to p = 1.
    """
    if n < 1:
        raise StatisticsError("n must be >= 1")
    if not 0 <= k <= n:
        raise StatisticsError(f"k={k} outside [0, {n}]")
    q = win_probability_bound(tau_out, win_adjustment)
    if q >= 1:
        return 1.0
    p = binomial_tail(k, n, q)
    return float(min(max(p, Fraction(0)), Fraction(1)))


@dataclass(frozen=True)
class CurveRow:
    k: int
    i: float
    p_complete: float
    p_conventional: float


def p_vs_i_curve(n: int, tau_out: float = 0.0,
                 k_values: Sequence[int] | None = None,
                 win_adjustment: float = DEFAULT_WIN_ADJUSTMENT) -> list[CurveRow]:
    """Significance versus the I statistic for a grid of win counts.

    ``p_conventional`` is the Gaussian-tail equivalent for the same win
    statistic under the i.i.d. null (mean n q, variance n q (1-q), q = 3/4).
    """
    if n < 1:
        raise StatisticsError("n must be >= 1")
    if k_values is None:
        k_values = range(n + 1)
    q = win_probability_bound(tau_out, win_adjustment)
    rows = []
    # one pass of exact suffix sums instead of re-summing each tail
    if q < 1:
        pmf = [math.comb(n, j) * q**j * (1 - q)**(n - j) for j in range(n + 1)]
        suffix = [Fraction(0)] * (n + 2)
        for j in range(n, -1, -1):
            suffix[j] = suffix[j + 1] + pmf[j]
    q0 = 0.75
    sd = math.sqrt(n * q0 * (1 - q0))
    for k in k_values:
        if not 0 <= k <= n:
            raise StatisticsError(f"k={k} outside [0, {n}]")
        p_c = 1.0 if q >= 1 else float(min(max(suffix[k], Fraction(0)), Fraction(1)))
        z = (k - n * q0) / sd
        rows.append(CurveRow(int(k), i_statistic(k, n), p_c,
                             0.5 * math.erfc(z / math.sqrt(2.0))))
    return rows


def expected_correlations(state: QuantumState, readout_a: ReadoutModel,
                          readout_b: ReadoutModel,
                          basis: ReadoutBasisSet) -> dict[tuple[int, int], float]:
    """Predicted E(a,b) from the state, the readout POVMs, and the angles."""
    out = {}
    for a, b in SETTING_PAIRS:
        obs_a = Observable(effective_observable(readout_a, basis.angle("A", a)))
        obs_b = Observable(effective_observable(readout_b, basis.angle("B", b)))
        out[(a, b)] = expectation(state, obs_a, obs_b)
    return out


def chsh_combination(correlations: Mapping[tuple[int, int], float]) -> float:
    """S from a full table of per-setting correlations."""
    missing = [p for p in SETTING_PAIRS if p not in correlations]
    if missing:
        raise MissingSettingError(f"correlation table is missing {missing}")
    return sum(CHSH_SIGNS[p] * correlations[p] for p in SETTING_PAIRS)


@dataclass(frozen=True)
class AnalysisResult:
    """Everything the analysis pipeline reports for one trial log."""

    n: int
    k: int
    s: float
    sigma_s: float
    i: float
    p_conventional: float
    p_complete: float
    tau_out: float
    cells: tuple[tuple[tuple[int, int], SettingCell], ...]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "S": self.s,
            "sigma_S": self.sigma_s,
            "I": self.i,
            "p_conventional": self.p_conventional,
            "p_complete": self.p_complete,
            "tau_out": self.tau_out,
            "correlations": {
                f"{a}{b}": {
                    "n": c.n,
                    "agree": c.n_agree,
                    "disagree": c.n_disagree,
                    "E": c.correlation,
                    "std_error": c.std_error,
                }
                for (a, b), c in self.cells
            },
        }


def analyze_records(records: Sequence, tau_out: float = 0.0,
                    win_adjustment: float = DEFAULT_WIN_ADJUSTMENT) -> AnalysisResult:
    """Full analysis of a sequence of trial records."""
    est = chsh_estimate(records)
    n = len(records)
    k = win_count(records)
    if est.sigma_s > 0:
        p_conv = conventional_pvalue(est.s, est.sigma_s)
    else:
        # degenerate log with |E| = 1 in every cell
        p_conv = 0.0 if est.s > 2 else (1.0 if est.s < 2 else 0.5)
    return AnalysisResult(
        n=n,
        k=k,
        s=est.s,
        sigma_s=est.sigma_s,
        i=i_statistic(k, n),
        p_conventional=p_conv,
        p_complete=complete_pvalue(k, n, tau_out, win_adjustment),
        tau_out=tau_out,
        cells=est.cells,
    )
