"""Synthetic desk-scale economies and stand-in empirical shock tables.

Real supply-chain, loan and interbank registries cannot be redistributed,
so the generator produces structurally similar economies: a sparse random
supply network with sector labels, firm financials consistent with the
eligibility rules, a loan book scaled to a target firm-to-interbank
exposure ratio, and a small interbank layer. Everything is a pure
function of the parameters and the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .economy import (
    BankSheet,
    EconomyGraph,
    EconomyValidationError,
    EssentialityTable,
    FirmNode,
    InterbankNetwork,
    LoanBook,
    SupplyNetwork,
    validate_economy,
)
from .scenarios import EmpiricalShockTable


@dataclass(frozen=True)
class SyntheticParams:
    """Generator knobs; the defaults give a stress-testable mid-size economy."""

    n: int = 1000
    m: int = 19
    mean_degree: float = 4.0
    sector_count: int = 20
    target_exposure_ratio: float | None = 12.5
    weight_family: str = "lognormal"  # lognormal | pareto | uniform
    missing_financials_rate: float = 0.05
    negative_income_rate: float = 0.03
    loan_coverage: float = 0.6
    interbank_density: float = 0.3
    essential_fraction: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need at least one firm and one bank")
        if self.mean_degree < 0:
            raise ValueError("mean_degree must be >= 0")
        if self.sector_count < 1:
            raise ValueError("sector_count must be >= 1")
        if self.weight_family not in ("lognormal", "pareto", "uniform"):
            raise ValueError(f"unknown weight family {self.weight_family!r}")
        if self.target_exposure_ratio is not None and self.target_exposure_ratio <= 0.0:
            raise ValueError("target exposure ratio must be positive (or None to skip)")
        if not 0.0 <= self.essential_fraction <= 1.0:
            raise ValueError("essential_fraction must lie in [0, 1]")


def _sector_codes(count: int) -> list[str]:
    # consecutive codes share the two-digit prefix so the four-to-two digit
    # imputation fallback has real work to do
    return [f"{10 + s // 2:02d}{s % 2:02d}" for s in range(count)]


def _edge_weights(rng: np.random.Generator, family: str, size: int) -> np.ndarray:
    if family == "lognormal":
        return rng.lognormal(mean=3.0, sigma=1.0, size=size)
    if family == "pareto":
        return 10.0 * (1.0 + rng.pareto(2.5, size=size))
    return rng.uniform(5.0, 50.0, size=size)


def generate_synthetic_economy(params: SyntheticParams, seed: int) -> EconomyGraph:
    """Generate a validated economy; bit-identical for equal seeds.

    The loan book is rescaled against the interbank volume so the realized
    firm-to-interbank exposure ratio matches ``target_exposure_ratio``
    (skipped when the interbank layer is empty).
    """
    rng = np.random.default_rng(seed)
    n, m = params.n, params.m
    codes = _sector_codes(params.sector_count)
    sector_idx = rng.integers(0, params.sector_count, size=n)

    # supply network: directed random edges without self-loops
    n_edges = int(round(n * params.mean_degree))
    if n < 2:
        n_edges = 0
    if n_edges:
        suppliers = rng.integers(0, n, size=2 * n_edges)
        buyers = rng.integers(0, n, size=2 * n_edges)
        keep = suppliers != buyers
        pairs = np.unique(np.stack([suppliers[keep], buyers[keep]], axis=1), axis=0)
        order = rng.permutation(pairs.shape[0])[:n_edges]
        pairs = pairs[np.sort(order)]
        weights = _edge_weights(rng, params.weight_family, pairs.shape[0])
        supply = SupplyNetwork.from_edges(n, pairs[:, 0], pairs[:, 1], weights)
    else:
        supply = SupplyNetwork.from_edges(n, [], [], [])

    intermediate = np.asarray(supply.weights.sum(axis=1)).ravel()

    # financials: revenue covers intermediate sales plus final demand, so
    # the final-demand proxy is non-negative by construction
    final_demand = rng.lognormal(mean=3.5, sigma=0.8, size=n)
    revenue = intermediate + final_demand
    margin = rng.uniform(0.08, 0.35, size=n)
    negative = rng.random(n) < params.negative_income_rate
    margin[negative] = -rng.uniform(0.02, 0.1, size=int(negative.sum()))
    op_cost = revenue * (1.0 - margin)
    profit = revenue - op_cost
    equity = np.abs(profit) * rng.uniform(0.2, 2.5, size=n)
    short_assets = revenue * rng.uniform(0.1, 0.5, size=n)
    short_liabs = short_assets * rng.uniform(0.1, 0.8, size=n)
    missing = rng.random(n) < params.missing_financials_rate

    firms = []
    for i in range(n):
        if missing[i]:
            firm = FirmNode(
                id=f"f{i}", sector=codes[sector_idx[i]],
                financials_present=False, eligible_for_default=False,
            )
        else:
            firm = FirmNode(
                id=f"f{i}",
                sector=codes[sector_idx[i]],
                revenue=float(revenue[i]),
                op_cost=float(op_cost[i]),
                equity=float(equity[i]),
                short_assets=float(short_assets[i]),
                short_liabs=float(short_liabs[i]),
            )
            firm.eligible_for_default = (
                firm.equity > 0.0
                and (firm.short_assets - firm.short_liabs) > 0.0
                and (firm.revenue - firm.op_cost) > 0.0
            )
        firms.append(firm)

    bank_equity = rng.lognormal(mean=0.0, sigma=0.5, size=m)
    bank_equity *= revenue.sum() / bank_equity.sum() / 3.0
    banks = [BankSheet(id=f"b{k}", tier1_equity=float(bank_equity[k])) for k in range(m)]

    # loan book: financially covered firms borrow from one or two banks
    loan_firms: list[int] = []
    loan_banks: list[int] = []
    loan_amounts: list[float] = []
    bank_pick = bank_equity / bank_equity.sum()
    for i in range(n):
        if missing[i] or rng.random() >= params.loan_coverage:
            continue
        n_loans = 1 + int(rng.random() < 0.3)
        chosen = rng.choice(m, size=min(n_loans, m), replace=False, p=bank_pick)
        for k in np.atleast_1d(chosen):
            loan_firms.append(i)
            loan_banks.append(int(k))
            loan_amounts.append(float(revenue[i] * rng.uniform(0.05, 0.3)))

    # interbank layer: each bank borrows a slice of its equity from a few peers
    ib_borrowers: list[int] = []
    ib_lenders: list[int] = []
    ib_amounts: list[float] = []
    if m > 1:
        for k in range(m):
            if rng.random() >= params.interbank_density:
                continue
            total = bank_equity[k] * rng.uniform(0.1, 0.5)
            n_lenders = int(rng.integers(1, min(3, m - 1) + 1))
            others = np.array([l for l in range(m) if l != k])
            lenders = rng.choice(others, size=n_lenders, replace=False)
            shares = rng.dirichlet(np.ones(n_lenders))
            for l, s in zip(lenders, shares):
                ib_borrowers.append(k)
                ib_lenders.append(int(l))
                ib_amounts.append(float(total * s))

    loans_total = float(np.sum(loan_amounts))
    ib_total = float(np.sum(ib_amounts))
    if params.target_exposure_ratio is not None:
        if loans_total > 0.0 and ib_total == 0.0 and m > 1:
            # guarantee a non-empty interbank layer so the ratio is defined
            ib_borrowers, ib_lenders = [0], [1]
            ib_amounts = [bank_equity[0] * 0.2]
            ib_total = ib_amounts[0]
        if ib_total > 0.0:
            if loans_total <= 0.0:
                raise ValueError(
                    "target exposure ratio is unreachable: generated economy has no loans"
                )
            scale = loans_total / (params.target_exposure_ratio * ib_total)
            ib_amounts = [a * scale for a in ib_amounts]

    essentiality = EssentialityTable()
    if params.essential_fraction < 1.0:
        overrides = {
            (sup, buy): bool(rng.random() < params.essential_fraction)
            for sup in codes
            for buy in codes
        }
        essentiality = EssentialityTable(overrides=overrides)

    graph = EconomyGraph(
        firms=firms,
        supply=supply,
        banks=banks,
        interbank=InterbankNetwork.from_edges(m, ib_borrowers, ib_lenders, ib_amounts),
        loans=LoanBook.from_entries(n, m, loan_firms, loan_banks, loan_amounts),
        essentiality=essentiality,
    )
    report = validate_economy(graph)
    if not report.ok:
        raise EconomyValidationError(report)
    return graph


def synthetic_shock_table(
    g: EconomyGraph,
    seed: int,
    coverage: float = 0.7,
    severity_range: tuple[float, float] = (0.05, 0.5),
) -> EmpiricalShockTable:
    """Stand-in for an observed shock table (the real one is confidential).

    Each two-digit industry gets a severity level; covered firms get
    reductions scattered around it. Every industry keeps at least one
    observation so batch generation never starves.
    """
    rng = np.random.default_rng(seed)
    nace2 = [s[:2] for s in g.sectors]
    sector_severity = {
        code: rng.uniform(*severity_range) for code in sorted(set(nace2))
    }
    reductions: dict[str, float] = {}
    first_in_sector: set[str] = set()
    for i, firm in enumerate(g.firms):
        code = nace2[i]
        force = code not in first_in_sector
        first_in_sector.add(code)
        if not force and rng.random() >= coverage:
            continue
        value = float(np.clip(rng.normal(sector_severity[code], 0.15), 0.0, 1.0))
        reductions[firm.id] = value
    return EmpiricalShockTable(reductions=reductions)
