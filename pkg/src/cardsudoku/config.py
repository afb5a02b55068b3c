from __future__ import annotations

from dataclasses import dataclass

from .cards import CardError, default_group_size, isqrt_exact, max_group_size


@dataclass(frozen=True)
class ProtocolConfig:
    """Puzzle size, method, optimization flag and seed of one run.

    ``group_size`` overrides how many blocks one uniqueness pass covers in the
    optimized block verification; ``None`` picks the standard grouping.
    """

    n: int = 9
    method: str = "B"
    optimized: bool = True
    seed: int = 0
    group_size: int | None = None

    def __post_init__(self) -> None:
        isqrt_exact(self.n)
        m = self.method.upper()
        if m not in ("A", "B"):
            raise CardError(f"unknown method {self.method!r}")
        object.__setattr__(self, "method", m)
        g = self.blocks_per_pass
        if not self.optimized and g != 1:
            raise CardError("grouped block verification requires the optimized variant")
        if not 1 <= g <= max_group_size(self.n, m):
            raise CardError(f"group size {g} unsupported for n={self.n}, method {m}")

    @property
    def block_size(self) -> int:
        return isqrt_exact(self.n)

    @property
    def blocks_per_pass(self) -> int:
        if self.group_size is not None:
            return self.group_size
        return default_group_size(self.n, self.method.upper(), self.optimized)

    def with_seed(self, seed: int) -> "ProtocolConfig":
        return ProtocolConfig(self.n, self.method, self.optimized, seed, self.group_size)

    def label(self) -> str:
        return f"n={self.n} method={self.method} {'optimized' if self.optimized else 'unoptimized'}"
