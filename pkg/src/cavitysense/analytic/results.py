from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class QfiResult:
    value: float
    regime: str
    flags: tuple[str, ...] = ()
    extras: dict = field(default_factory=dict)
    floor: float | None = 4.0

    def __post_init__(self):
        # coherent-seeded states never drop below the vacuum value
        if self.floor is not None and not self.value >= self.floor - 1e-9:
            raise ValueError(f"QFI {self.value} below the coherent-seed floor of 4")


@dataclass(frozen=True)
class SensitivityResult:
    """(delta beta)^2 from a closed form, with an optional simpler approximation."""

    value: float
    approx: float | None = None
    flags: tuple[str, ...] = ()
