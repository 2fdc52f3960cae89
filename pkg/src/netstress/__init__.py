"""netstress: supply-chain and interbank network stress-testing engine."""

from .economy import (
    BankSheet,
    DataFormatError,
    EconomyGraph,
    EconomyValidationError,
    EssentialityTable,
    FirmNode,
    InterbankNetwork,
    LoanBook,
    ReferentialError,
    SupplyNetwork,
    ValidationReport,
    Violation,
    exposure_ratio,
    validate_economy,
)
from .ingest import IngestionSpec, economy_files, load_economy, load_essentiality, write_economy
from .synthetic import SyntheticParams, generate_synthetic_economy, synthetic_shock_table
from .propagation import (
    ProductionProfile,
    PropagationConfig,
    check_shock_vector,
    compute_esri,
    propagate,
)
from .credit import (
    BankLossLedger,
    DefaultFlags,
    ProfitShock,
    bank_losses,
    bank_seed,
    default_flags,
    profit_shock,
)
from .debtrank import ContagionResult, DebtRankProfile, debtrank, debtrank_profile
from .scenarios import (
    EmpiricalShockTable,
    ShockBatch,
    covid_style_batch,
    gaussian_bank_seed_batch,
    random_interbank_network,
    read_batch,
    single_firm_shock,
    write_batch,
)
from .pipeline import BatchResult, ScenarioOutcome, run_batch, run_scenario
from .metrics import (
    AmplificationRecord,
    AmplificationStats,
    BoxStats,
    ChannelDecomposition,
    FirmRiskRecord,
    FitResult,
    RiskSummary,
    WelchResult,
    ccdf,
    channel_decomposition,
    fsri,
    fsri_plus,
    fsri_profile,
    ib_amplification,
    ols_fit,
    risk_measures,
    welch_test,
)
from .fixtures import ring_economy, toy_economy

__version__ = "0.1.0"

__all__ = [
    "AmplificationRecord",
    "AmplificationStats",
    "BankLossLedger",
    "BankSheet",
    "BatchResult",
    "BoxStats",
    "ChannelDecomposition",
    "ContagionResult",
    "DataFormatError",
    "DebtRankProfile",
    "DefaultFlags",
    "EconomyGraph",
    "EconomyValidationError",
    "EmpiricalShockTable",
    "EssentialityTable",
    "FirmNode",
    "FirmRiskRecord",
    "FitResult",
    "IngestionSpec",
    "InterbankNetwork",
    "LoanBook",
    "ProductionProfile",
    "ProfitShock",
    "PropagationConfig",
    "ReferentialError",
    "RiskSummary",
    "ScenarioOutcome",
    "ShockBatch",
    "SupplyNetwork",
    "SyntheticParams",
    "ValidationReport",
    "Violation",
    "WelchResult",
    "bank_losses",
    "bank_seed",
    "ccdf",
    "channel_decomposition",
    "check_shock_vector",
    "compute_esri",
    "covid_style_batch",
    "debtrank",
    "debtrank_profile",
    "default_flags",
    "economy_files",
    "exposure_ratio",
    "fsri",
    "fsri_plus",
    "fsri_profile",
    "gaussian_bank_seed_batch",
    "generate_synthetic_economy",
    "ib_amplification",
    "load_economy",
    "load_essentiality",
    "ols_fit",
    "profit_shock",
    "propagate",
    "random_interbank_network",
    "read_batch",
    "ring_economy",
    "risk_measures",
    "run_batch",
    "run_scenario",
    "single_firm_shock",
    "synthetic_shock_table",
    "toy_economy",
    "validate_economy",
    "welch_test",
    "write_batch",
    "write_economy",
]
