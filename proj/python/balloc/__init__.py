from ._balloc import (
    ValidationError,
    allocation_vector,
    certify_key_lemma,
    cli,
    conductance_exact,
    final_loads,
    gap,
    key_lemma_constant,
    potential,
    s_constant,
    selftest,
    simulate_csv,
)

__all__ = [
    "ValidationError",
    "allocation_vector",
    "certify_key_lemma",
    "cli",
    "conductance_exact",
    "final_loads",
    "gap",
    "key_lemma_constant",
    "potential",
    "s_constant",
    "selftest",
    "simulate_csv",
]
