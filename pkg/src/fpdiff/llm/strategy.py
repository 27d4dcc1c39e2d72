from __future__ import annotations

import random

from .prompts import Strategy

DEFAULT_P_MUTATION = 0.5


def select_strategy(rng: random.Random, successful_set_size: int,
                    p_mutation: float = DEFAULT_P_MUTATION) -> Strategy:
    """Grammar-based until some program has triggered an inconsistency."""
    if not 0.0 <= p_mutation <= 1.0:
        raise ValueError(f"p_mutation must be in [0, 1], got {p_mutation}")
    if successful_set_size < 0:
        raise ValueError("successful_set_size must be non-negative")
    if successful_set_size == 0:
        return Strategy.GRAMMAR_BASED
    # always draw so the rng stream does not depend on p_mutation edge cases
    draw = rng.random()
    return Strategy.FEEDBACK_MUTATION if draw < p_mutation else Strategy.GRAMMAR_BASED
