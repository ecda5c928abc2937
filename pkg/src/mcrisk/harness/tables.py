"""Growth tables of alpha(C, p) against the sum it dominates."""

from __future__ import annotations

from typing import Iterable, List

from ..core import INF, DomainError, alpha, harmonic_p_sum, parse_p


def alpha_table(C_list: Iterable[int], p_list: Iterable) -> List[dict]:
    """One row per (C, p) with alpha, sum_k k^{-1/p} and their ratio."""
    ps = [parse_p(p) for p in p_list]
    rows = []
    for C in C_list:
        if int(C) != C or C < 2:
            raise DomainError(f"C values must be integers >= 2, got {C}")
        for p in ps:
            a = alpha(int(C), p)
            s = harmonic_p_sum(int(C), p)
            rows.append({
                "C": int(C),
                "p": "inf" if p == INF else p,
                "alpha": a,
                "harmonic_sum": s,
                "ratio": s / a,
                "sum_le_alpha": s <= a,
            })
    return rows
