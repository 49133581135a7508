"""Library of optimized submodules and prompt composition.

Large targets are expensive to search because every extra token slows the
whole loop down. The workaround: search small modules first, keep the best
functional code for each (kind, width) in an on-disk library, and prepend
that code to the prompt of larger targets so the generation can reference
it instead of re-deriving it.

Records store *injectable* text: whatever the storing side puts in
``code_text`` is prepended verbatim. For HDL that is a complete module
definition; for toy netlists it is the definition fragment with the output
designation stripped (see ``toycircuit.reusable_fragment``).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from filelock import FileLock

from .rewards import EvaluationOutcome

log = logging.getLogger(__name__)

ModuleKey = tuple[str, int]  # (kind, bit width)


@dataclass(frozen=True)
class Provenance:
    run_id: str
    iteration: int


@dataclass(frozen=True)
class ModuleRecord:
    name: str
    kind: str
    bit_width: int
    code_text: str
    reward: float
    outcome: EvaluationOutcome
    provenance: Provenance

    def __post_init__(self) -> None:
        if not self.outcome.functional:
            raise ValueError("library records must hold functional code")
        if not self.code_text:
            raise ValueError("library records must hold non-empty code")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "bit_width": self.bit_width,
            "code_text": self.code_text,
            "reward": self.reward,
            "outcome": {
                "compilable": self.outcome.compilable,
                "functional": self.outcome.functional,
                "area": self.outcome.area,
                "delay": self.outcome.delay,
            },
            "provenance": {
                "run_id": self.provenance.run_id,
                "iteration": self.provenance.iteration,
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "ModuleRecord":
        out = data["outcome"]
        return cls(
            name=data["name"],
            kind=data["kind"],
            bit_width=int(data["bit_width"]),
            code_text=data["code_text"],
            reward=float(data["reward"]),
            outcome=EvaluationOutcome(
                compilable=bool(out["compilable"]),
                functional=bool(out["functional"]),
                area=out["area"],
                delay=out["delay"],
            ),
            provenance=Provenance(
                run_id=data["provenance"]["run_id"],
                iteration=int(data["provenance"]["iteration"]),
            ),
        )


@dataclass(frozen=True)
class CompositionPolicy:
    """When and with what to augment a prompt.

    Targets at or above ``large_threshold_bits`` get their configured
    dependencies injected; smaller ones are left alone. ``dependency_map``
    lists which stored submodules each large target wants.
    """

    large_threshold_bits: int = 32
    dependency_map: dict[ModuleKey, tuple[ModuleKey, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.large_threshold_bits <= 0:
            raise ValueError("large_threshold_bits must be positive")

    def dependencies_for(self, target: ModuleKey) -> tuple[ModuleKey, ...]:
        return self.dependency_map.get(target, ())


class ModuleLibrary:
    """One JSON file per (kind, width) under ``{root}/{kind}/{width}.json``.

    Writes go through a sibling lock file and an atomic rename, so readers
    always see a complete snapshot and concurrent stores of the same key
    serialize. A later record replaces an existing one only when its reward
    is strictly higher.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: ModuleKey) -> Path:
        kind, width = key
        return self.root / kind / f"{width}.json"

    def store(self, record: ModuleRecord) -> bool:
        """Insert or improve the record for its key; True if it was written."""
        path = self._path((record.kind, record.bit_width))
        path.parent.mkdir(parents=True, exist_ok=True)
        with FileLock(str(path) + ".lock"):
            existing = self._read(path)
            if existing is not None and record.reward <= existing.reward:
                return False
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(
                json.dumps(record.to_json(), indent=2) + "\n", encoding="utf-8"
            )
            tmp.replace(path)
            return True

    def fetch(self, key: ModuleKey) -> Optional[ModuleRecord]:
        return self._read(self._path(key))

    @staticmethod
    def _read(path: Path) -> Optional[ModuleRecord]:
        if not path.exists():
            return None
        return ModuleRecord.from_json(json.loads(path.read_text(encoding="utf-8")))

    def keys(self) -> list[ModuleKey]:
        found = []
        for child in sorted(self.root.glob("*/*.json")):
            found.append((child.parent.name, int(child.stem)))
        return found


def store_module(library: ModuleLibrary, record: ModuleRecord) -> bool:
    return library.store(record)


def compose_prompt(
    base_prompt: str,
    target: ModuleKey,
    library: ModuleLibrary,
    policy: CompositionPolicy,
) -> str:
    """Prepend stored dependency code to the prompt of a large target.

    Small targets pass through unchanged. Dependencies inject in ascending
    width order; one that is missing from the library is skipped with a
    warning and the search proceeds without it.
    """
    _, width = target
    if width < policy.large_threshold_bits:
        return base_prompt
    parts: list[str] = []
    for dep in sorted(policy.dependencies_for(target), key=lambda kw: (kw[1], kw[0])):
        record = library.fetch(dep)
        if record is None:
            log.warning("dependency %s of %s not in library; skipping", dep, target)
            continue
        text = record.code_text
        parts.append(text if text.endswith("\n") else text + "\n")
    parts.append(base_prompt)
    return "".join(parts)
