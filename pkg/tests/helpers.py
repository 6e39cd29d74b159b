"""Shared assertions for statistical tests."""


def within_se(estimate, target, se, n_se=3.0, floor=1e-12):
    """True when ``|estimate - target| <= n_se * se`` (``se`` floored)."""
    return abs(estimate - target) <= n_se * max(se, floor)
