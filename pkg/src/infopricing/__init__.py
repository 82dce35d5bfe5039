"""Pricing with information disclosure for a unit-demand buyer.

Finite-support models, uniform/two-price constructions, full-surplus checks
and LP-based oracles.
"""

from .approx import (
    ConditionFailed,
    ConstructionCertificate,
    TwoPriceParams,
    best_of_three_two_products,
    full_surplus_condition,
    full_surplus_mechanism,
    is_exchangeable,
    is_negatively_affiliated,
    two_price,
    uniform_half,
)
from .core import (
    AuditReport,
    InformationStructure,
    Mechanism,
    PricingMechanism,
    RejectedMechanism,
    SignalStats,
    ValueDistribution,
    audit_ic_ir,
    buyer_choice,
    induce_mechanism,
    optimal_welfare,
    pricing_revenue,
    revenue,
    signal_stats,
    welfare,
)
from .disclosure import (
    horizontal_disclosure,
    max_sale_pooling,
    max_uniform_price,
    top_item_profile,
    wel_split,
)
from .lp import LinearProgram, lp_solve

__version__ = "0.1.0"
