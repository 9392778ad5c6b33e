"""Residual bookkeeping shared by the checks and the CLI."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class ResidualReport:
    """Named residual magnitudes, each passing when ``value <= tolerance``."""

    residuals: dict[str, float] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def add(self, name: str, value: float, tol: float) -> None:
        self.residuals[name] = float(value)
        self.tolerances[name] = float(tol)

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items()
                if not (math.isfinite(v) and v <= self.tolerances[k])]

    @property
    def passed(self) -> bool:
        return not self.failures

    def merge_max(self, other: "ResidualReport") -> None:
        """Fold ``other`` in, keeping the larger value per name."""
        for k, v in other.residuals.items():
            if k not in self.residuals or v > self.residuals[k] or not math.isfinite(v):
                self.residuals[k] = v
            self.tolerances[k] = other.tolerances[k]

    def lines(self) -> list[str]:
        out = []
        for k, v in self.residuals.items():
            ok = "ok  " if k not in self.failures else "FAIL"
            out.append(f"{ok} {k:<22s} {v:.3e}  (tol {self.tolerances[k]:.1e})")
        return out


def worker_count(default: int | None = None) -> int:
    """Thread cap from ``PRAK_THREADS`` (falls back to the CPU count)."""
    env = os.environ.get("PRAK_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"PRAK_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return default or min(8, os.cpu_count() or 1)


def ordered_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T],
                threads: int | None = None) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on a thread pool, results in input order."""
    items = list(items)
    n = threads if threads is not None else worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
