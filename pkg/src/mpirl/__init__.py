"""Inverse reinforcement learning from experts with different planning horizons."""

from .domains import DomainKind, DomainSpec, ExpertSet, Regime, make_experts
from .mdp import TabularMdp, occupancy_measure, policy_value, soft_value_iteration, value_iteration

__version__ = "0.1.0"

__all__ = [
    "DomainKind",
    "DomainSpec",
    "ExpertSet",
    "Regime",
    "TabularMdp",
    "make_experts",
    "occupancy_measure",
    "policy_value",
    "soft_value_iteration",
    "value_iteration",
]
