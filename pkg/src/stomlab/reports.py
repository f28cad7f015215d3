"""Falsification records returned by the inequality checks."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any


@dataclass
class FalsificationRecord:
    """Outcome of checking a claimed inequality on concrete instances.

    ``holds`` is False as soon as one violation is recorded.  ``seeds`` holds
    everything needed to replay a Monte Carlo check bit-for-bit.
    """

    check: str
    holds: bool = True
    violations: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    def violate(self, **info: Any) -> None:
        self.holds = False
        self.violations.append(info)

    def to_dict(self) -> dict:
        return asdict(self)

    def __bool__(self) -> bool:
        return self.holds
