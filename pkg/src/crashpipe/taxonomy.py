"""The five-way collision taxonomy shared across the pipeline.

The tuple order is the fixed tie-break order used wherever an argmax over
classes can tie.
"""

from __future__ import annotations

CLASS_ORDER: tuple[str, ...] = ("head-on", "rear-end", "sideswipe", "single", "t-bone")


def canonical_class(name: str) -> str:
    """Normalize a class name to its canonical lowercase hyphenated form."""
    canon = name.strip().lower()
    if canon not in CLASS_ORDER:
        raise ValueError(f"unknown collision class '{name}'; expected one of {CLASS_ORDER}")
    return canon
