"""Access to the golden fixtures written by ``tools/quadrature_oracle.py``."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=1)
def load() -> dict:
    text = resources.files("filigeo").joinpath("data/golden.json").read_text()
    return json.loads(text)


def hw_row(eps: float) -> dict:
    """Golden HW turning-point data for ``eps`` (``lambda`` as recorded in the file)."""
    for row in load()["hw"]:
        if abs(row["eps"] - eps) < 1e-15:
            return row
    raise KeyError(f"no golden HW data for eps={eps}")
