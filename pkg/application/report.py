"""Violation reports returned by the check operations"""
from dataclasses import dataclass, field


@dataclass
class Report:
    """Collects invariant violations found by a check

    An empty report means every checked property held.
    """
    name: str
    violations: list[str] = field(default_factory=list)
    checked: int = 0

    def add(self, violation: str):
        self.violations.append(violation)

    def tick(self, count: int = 1):
        self.checked += count

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0

    def get_violations(self) -> list[str]:
        """Return list of current violations"""
        return self.violations.copy()

    def as_dict(self) -> dict:
        return {'name': self.name, 'ok': self.ok, 'checked': self.checked, 'violations': self.get_violations()}
