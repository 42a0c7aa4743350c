"""The access control list: a total map from principals to privilege sets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping


@dataclass(frozen=True)
class Acl:
    grants: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        frozen = {n: frozenset(ps) for n, ps in self.grants.items()}
        object.__setattr__(self, "grants", frozen)

    def __getitem__(self, principal: str) -> frozenset:
        # unmapped principals are authorized for nothing
        return self.grants.get(principal, frozenset())

    def __hash__(self) -> int:
        return hash(frozenset(self.grants.items()))

    @property
    def principals(self) -> frozenset:
        return frozenset(self.grants)

    @property
    def privileges(self) -> frozenset:
        out = frozenset()
        for ps in self.grants.values():
            out |= ps
        return out

    def to_text(self) -> str:
        return "\n".join(
            f"{n}: {' '.join(sorted(ps))}".rstrip() for n, ps in sorted(self.grants.items())
        )

    def __str__(self) -> str:
        return "; ".join(f"{n}: {' '.join(sorted(ps))}" for n, ps in sorted(self.grants.items()))
