"""Systemic-risk indices, loss risk measures and batch statistics.

The per-firm indices weight each bank's clamped equity loss by its share
of total banking-system equity: the base index stops after the credit
losses, the extended index additionally runs interbank solvency
contagion. Batch statistics cover expected loss / value at risk /
expected shortfall per channel, interbank amplification distributions and
the regression and test utilities used to summarise them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

from .credit import bank_seed, default_flags, profit_shock
from .debtrank import DEFAULT_EPSILON, DEFAULT_MAX_ITER, debtrank
from .economy import EconomyGraph
from .pipeline import BatchResult, run_batch
from .propagation import PropagationConfig, propagate
from .scenarios import ShockBatch, single_firm_shock

CHANNELS = ("di", "di_sc", "di_ib", "di_sc_ib")
CHANNEL_REGIME = {"di": "wo", "di_sc": "w", "di_ib": "wo", "di_sc_ib": "w"}


# ---------------------------------------------------------------------------
# risk measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RiskSummary:
    """Expected loss, 95% value at risk and 95% expected shortfall."""

    el: float
    var95: float
    es95: float


def risk_measures(samples) -> RiskSummary:
    """Summarise a loss sample: mean, 95% order statistic, mean of worst 5%.

    The value at risk is the order statistic at (1-based) rank
    ceil(0.95 * N) without interpolation; the expected shortfall averages
    the largest ceil(0.05 * N) samples.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("risk measures need at least one sample")
    ordered = np.sort(x)
    n = ordered.size
    var_rank = -((-19 * n) // 20)   # ceil(0.95 n) in exact integer arithmetic
    tail = -((-n) // 20)            # ceil(0.05 n)
    return RiskSummary(
        el=float(x.mean()),
        var95=float(ordered[var_rank - 1]),
        es95=float(ordered[n - tail:].mean()),
    )


# ---------------------------------------------------------------------------
# per-firm systemic risk indices
# ---------------------------------------------------------------------------


@dataclass
class FirmRiskRecord:
    firm_id: str
    fsri: float
    fsri_plus: float

    @property
    def amplification(self) -> float:
        """Relative index increase from interbank contagion; nan when fsri = 0."""
        if self.fsri == 0.0:
            return float("nan")
        return self.fsri_plus / self.fsri


def _firm_loss_seed(g: EconomyGraph, firm_id: str, cfg: PropagationConfig) -> np.ndarray:
    psi = single_firm_shock(g, firm_id)
    profile = propagate(g, psi, cfg)
    flags = default_flags(g, profit_shock(g, profile.h))
    return bank_seed(g, flags)


def fsri(g: EconomyGraph, firm_id: str, cfg: PropagationConfig = PropagationConfig()) -> float:
    """Equity-weighted banking-system loss from one firm's failure.

    Runs the single-firm shock through the supply chain and the credit
    channel; no interbank step.
    """
    seed = _firm_loss_seed(g, firm_id, cfg)
    weights = g.bank_equity / g.bank_equity.sum()
    return float(weights @ np.minimum(seed, 1.0))


def fsri_plus(
    g: EconomyGraph,
    firm_id: str,
    cfg: PropagationConfig = PropagationConfig(),
    *,
    dr_epsilon: float = DEFAULT_EPSILON,
    dr_max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Like :func:`fsri` but with interbank solvency contagion on top."""
    seed = _firm_loss_seed(g, firm_id, cfg)
    result = debtrank(g, np.minimum(seed, 1.0), epsilon=dr_epsilon, max_iter=dr_max_iter)
    weights = g.bank_equity / g.bank_equity.sum()
    return float(weights @ np.minimum(result.final, 1.0))


def fsri_profile(
    g: EconomyGraph,
    cfg: PropagationConfig = PropagationConfig(),
    *,
    dr_epsilon: float = DEFAULT_EPSILON,
    dr_max_iter: int = DEFAULT_MAX_ITER,
) -> list[FirmRiskRecord]:
    """Both indices for every firm, rank ordered by the base index."""
    weights = g.bank_equity / g.bank_equity.sum()
    records = []
    for i, firm_id in enumerate(g.firm_ids):
        seed = _firm_loss_seed(g, firm_id, cfg)
        base = float(weights @ np.minimum(seed, 1.0))
        result = debtrank(g, np.minimum(seed, 1.0), epsilon=dr_epsilon, max_iter=dr_max_iter)
        plus = float(weights @ np.minimum(result.final, 1.0))
        records.append((i, FirmRiskRecord(firm_id=firm_id, fsri=base, fsri_plus=plus)))
    records.sort(key=lambda pair: (-pair[1].fsri, pair[0]))
    return [rec for _, rec in records]


def ccdf(values) -> tuple[np.ndarray, np.ndarray]:
    """Empirical survival function: fraction of samples >= each level."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("ccdf needs at least one sample")
    levels, counts = np.unique(x, return_counts=True)
    below = np.cumsum(counts) - counts
    survival = (x.size - below) / x.size
    return levels, survival


# ---------------------------------------------------------------------------
# channel decomposition over scenario batches
# ---------------------------------------------------------------------------


@dataclass
class ChannelDecomposition:
    """Per-scenario channel losses and the summaries built from them."""

    result: BatchResult

    @property
    def bank_ids(self) -> list[str]:
        return self.result.bank_ids

    def channel_losses(self) -> dict[str, np.ndarray]:
        """Cumulative per-bank loss levels, clamped at one full equity.

        ``di`` and ``di_ib`` belong to the regime without supply-chain
        contagion, ``di_sc`` and ``di_sc_ib`` to the regime with it.
        """
        r = self.result
        seed_wo = np.minimum(r.di, 1.0)
        seed_w = np.minimum(r.di + r.sc, 1.0)
        return {
            "di": seed_wo,
            "di_sc": seed_w,
            "di_ib": np.minimum(seed_wo + r.ib_wo, 1.0),
            "di_sc_ib": np.minimum(seed_w + r.ib_w, 1.0),
        }

    def system_losses(self) -> dict[str, np.ndarray]:
        """Equity-weighted system loss per scenario for each channel."""
        equity = self.result.bank_equity
        share = equity / equity.sum()
        return {name: losses @ share for name, losses in self.channel_losses().items()}

    def summaries(self) -> list[tuple[str, str, str, RiskSummary]]:
        """(bank, channel, regime, summary) rows; 'system' rows lead."""
        rows: list[tuple[str, str, str, RiskSummary]] = []
        system = self.system_losses()
        for channel in CHANNELS:
            rows.append(("system", channel, CHANNEL_REGIME[channel], risk_measures(system[channel])))
        losses = self.channel_losses()
        for k, bank_id in enumerate(self.bank_ids):
            for channel in CHANNELS:
                rows.append(
                    (bank_id, channel, CHANNEL_REGIME[channel], risk_measures(losses[channel][:, k]))
                )
        return rows

    def amplification_records(self) -> list["AmplificationRecord"]:
        r = self.result
        return [
            AmplificationRecord(
                bank_id=self.bank_ids[k],
                scenario=s,
                ib_wo=float(r.ib_wo[s, k]),
                ib_w=float(r.ib_w[s, k]),
            )
            for s in range(len(r))
            for k in range(len(self.bank_ids))
        ]


def channel_decomposition(
    g: EconomyGraph,
    batch: ShockBatch,
    cfg: PropagationConfig = PropagationConfig(),
    *,
    dr_epsilon: float = DEFAULT_EPSILON,
    dr_max_iter: int = DEFAULT_MAX_ITER,
    workers: int = 1,
    keep_defaults: bool = False,
) -> ChannelDecomposition:
    """Run both regimes over a batch and wrap the per-channel statistics."""
    result = run_batch(
        g, batch, cfg,
        dr_epsilon=dr_epsilon, dr_max_iter=dr_max_iter,
        workers=workers, keep_defaults=keep_defaults,
    )
    return ChannelDecomposition(result=result)


# ---------------------------------------------------------------------------
# interbank amplification statistics
# ---------------------------------------------------------------------------


@dataclass
class AmplificationRecord:
    bank_id: str
    scenario: int
    ib_wo: float
    ib_w: float

    @property
    def ratio(self) -> float:
        """Interbank loss amplification; nan when there is nothing to amplify."""
        if self.ib_wo == 0.0:
            return float("nan")
        return self.ib_w / self.ib_wo


@dataclass
class BoxStats:
    """Tukey box-plot statistics (1.5 IQR whiskers) for one bank's ratios."""

    bank_id: str
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    n_defined: int
    n_undefined: int


@dataclass
class AmplificationStats:
    per_bank: list[BoxStats]
    scenario_ids: np.ndarray
    scenario_median: np.ndarray
    scenario_q1: np.ndarray
    scenario_q3: np.ndarray
    pooled_ratios: np.ndarray
    pooled_levels: np.ndarray
    pooled_survival: np.ndarray
    n_undefined: int


def _box(bank_id: str, ratios: np.ndarray, n_undefined: int) -> BoxStats:
    q1, med, q3 = np.percentile(ratios, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    low_fence, high_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = ratios[(ratios >= low_fence) & (ratios <= high_fence)]
    return BoxStats(
        bank_id=bank_id,
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        n_defined=int(ratios.size),
        n_undefined=n_undefined,
    )


def ib_amplification(records: list[AmplificationRecord]) -> AmplificationStats:
    """Distribution of interbank amplification ratios over a batch.

    Banks without interbank losses in a scenario have no defined ratio and
    are excluded, with the exclusion counts reported. Raises when no ratio
    at all is defined.
    """
    by_bank: dict[str, list[float]] = {}
    undefined_by_bank: dict[str, int] = {}
    by_scenario: dict[int, list[float]] = {}
    pooled_list: list[float] = []
    for r in records:
        by_bank.setdefault(r.bank_id, [])
        undefined_by_bank.setdefault(r.bank_id, 0)
        if r.ib_wo == 0.0:
            undefined_by_bank[r.bank_id] += 1
            continue
        ratio = r.ratio
        by_bank[r.bank_id].append(ratio)
        by_scenario.setdefault(r.scenario, []).append(ratio)
        pooled_list.append(ratio)
    if not pooled_list:
        raise ValueError("all amplification ratios are undefined (no interbank losses)")
    n_undefined = len(records) - len(pooled_list)

    per_bank = [
        _box(bank_id, np.asarray(ratios), undefined_by_bank[bank_id])
        for bank_id, ratios in by_bank.items()
        if ratios
    ]

    scenario_ids = sorted(by_scenario)
    med = np.empty(len(scenario_ids))
    q1 = np.empty(len(scenario_ids))
    q3 = np.empty(len(scenario_ids))
    for pos, s in enumerate(scenario_ids):
        q1[pos], med[pos], q3[pos] = np.percentile(by_scenario[s], [25.0, 50.0, 75.0])

    pooled = np.asarray(pooled_list)
    levels, survival = ccdf(pooled)
    return AmplificationStats(
        per_bank=per_bank,
        scenario_ids=np.asarray(scenario_ids),
        scenario_median=med,
        scenario_q1=q1,
        scenario_q3=q3,
        pooled_ratios=pooled,
        pooled_levels=levels,
        pooled_survival=survival,
        n_undefined=n_undefined,
    )


# ---------------------------------------------------------------------------
# regression and test utilities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    log_log: bool
    n: int


def ols_fit(x, y, log_log: bool = False) -> FitResult:
    """Least-squares line through (x, y); with ``log_log`` the slope is the
    power-law exponent fit on the log-transformed variables."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError("x and y must have the same length")
    if x.size < 3:
        raise ValueError("need at least three points to fit")
    if log_log:
        if np.any(x <= 0.0) or np.any(y <= 0.0):
            raise ValueError("log-log fit requires strictly positive data")
        x = np.log(x)
        y = np.log(y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("x has zero variance; slope undefined")
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (intercept + slope * x)
    sst = float(dy @ dy)
    r_squared = 1.0 if sst == 0.0 else 1.0 - float(residuals @ residuals) / sst
    return FitResult(slope=slope, intercept=intercept, r_squared=r_squared, log_log=log_log, n=x.size)


@dataclass(frozen=True)
class WelchResult:
    t_statistic: float
    p_value: float
    df: float


def welch_test(a, b) -> WelchResult:
    """Two-sample unequal-variance t test.

    The statistic and the Welch-Satterthwaite degrees of freedom are
    computed directly; the two-sided p-value comes from the t-distribution
    survival function.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise ValueError("need at least two samples per group")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    if va <= 0.0 or vb <= 0.0:
        raise ValueError("degenerate variance; test undefined")
    sa, sb = va / a.size, vb / b.size
    t = (float(a.mean()) - float(b.mean())) / np.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), df))
    return WelchResult(t_statistic=float(t), p_value=p, df=float(df))
