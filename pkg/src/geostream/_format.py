"""Number formatting shared by the report writers."""

from __future__ import annotations

import json
import math


def round_half_up(x: float, decimals: int = 0) -> float:
    q = 10**decimals
    return math.floor(x * q + 0.5) / q


def fmt_pct(count: int, total: int, decimals: int) -> str:
    """Percentage text at fixed precision; ``–`` when the total is zero."""
    if total == 0:
        return "–"
    return f"{round_half_up(100.0 * count / total, decimals):.{decimals}f}%"


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
