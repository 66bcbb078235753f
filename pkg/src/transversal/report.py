"""Pass/fail records shared by every inequality checker."""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Link:
    """One inequality ``lhs <= rhs`` with its margin ``rhs - lhs``."""

    name: str
    lhs: float
    rhs: float

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        return self.margin >= 0


@dataclass
class CheckReport:
    name: str
    links: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add(self, name, lhs, rhs):
        self.links.append(Link(name, float(lhs), float(rhs)))

    @property
    def passed(self):
        return all(l.passed for l in self.links)

    @property
    def margin(self):
        return min((l.margin for l in self.links), default=0.0)

    @property
    def violated(self):
        return [l.name for l in self.links if not l.passed]

    def __str__(self):
        rows = [f"{self.name}: {'pass' if self.passed else 'FAIL'}"]
        rows += [f"  {l.name}: {l.lhs:.6g} <= {l.rhs:.6g} (margin {l.margin:+.3g})" for l in self.links]
        return "\n".join(rows)
