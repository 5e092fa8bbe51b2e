"""Multiscale chemical master equation reductions and bridge sampling."""

from ._mscme import (
    ConfigError,
    DominatingProcess,
    Distribution,
    EffectiveGenerator,
    EventCountPMF,
    Generator,
    Network,
    NumericalError,
    cma,
    examples,
    full_generator,
    lin_marginal_intensity,
    load_network,
    nested,
    parse_network,
    poisson,
    qssa,
    relative_l2,
    simulate,
)

__all__ = [
    "ConfigError",
    "DominatingProcess",
    "Distribution",
    "EffectiveGenerator",
    "EventCountPMF",
    "Generator",
    "Network",
    "NumericalError",
    "cma",
    "examples",
    "full_generator",
    "lin_marginal_intensity",
    "load_network",
    "nested",
    "parse_network",
    "poisson",
    "qssa",
    "relative_l2",
    "simulate",
]
