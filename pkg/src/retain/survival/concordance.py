"""Harrell's concordance index.

A pair is comparable when the strictly shorter duration ended in an
observed event; the pair concords when that member also has the higher
risk score. Risk ties count one half.
"""

from __future__ import annotations


def concordance_index(
    durations: list[int], events: list[int], risks: list[float]
) -> float | None:
    """Returns the C statistic, or None when no pair is comparable."""
    n = len(durations)
    if not (n == len(events) == len(risks)):
        raise ValueError("durations, events, risks must align")
    concordant = 0.0
    comparable = 0
    for i in range(n):
        if events[i] != 1:
            continue
        for j in range(n):
            if durations[i] < durations[j]:
                comparable += 1
                if risks[i] > risks[j]:
                    concordant += 1.0
                elif risks[i] == risks[j]:
                    concordant += 0.5
    if comparable == 0:
        return None
    return concordant / comparable
