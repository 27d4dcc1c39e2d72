"""On-disk campaign state.

Layout of a campaign directory::

    manifest.json        progress counters, successful set, log offsets
    records.jsonl        header, program, rejection, comparison and exclusion lines
    programs/<id>.c      accepted sources (plus <id>.cu for device builds)
    prompts/audit.jsonl  one line per generation attempt
    prompts/<n>.prompt.txt, prompts/<n>.response.txt
    build/               binaries (removed per program unless kept)
    report/              rendered tables
    timing.json          wall-clock time per phase

Logs are append-only. The manifest is replaced atomically after each
iteration and remembers how many bytes of every log were committed; on
resume anything past those offsets is cut off.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from ..diffexec.compare import CROSS, ComparisonRecord, Exclusion, is_successful
from ..program.ast import Precision

MANIFEST = "manifest.json"
RECORDS = "records.jsonl"
AUDIT = "prompts/audit.jsonl"
LOGS = (RECORDS, AUDIT)
STATE_SCHEMA = 1


class CorruptState(RuntimeError):
    def __init__(self, path: Path | str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = Path(path)


class EmptySet(LookupError):
    pass


class SuccessfulSet:
    """Insertion-ordered set of program ids that triggered an inconsistency."""

    def __init__(self, ids: Iterable[str] = ()) -> None:
        self._ids: dict[str, None] = dict.fromkeys(ids)

    def __contains__(self, pid: object) -> bool:
        return pid in self._ids

    def __len__(self) -> int:
        return len(self._ids)

    def __iter__(self) -> Iterator[str]:
        return iter(self._ids)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SuccessfulSet) and list(self) == list(other)

    def add(self, pid: str) -> None:
        self._ids.setdefault(pid, None)

    def members(self) -> list[str]:
        return list(self._ids)


def update_successful_set(members: SuccessfulSet, program_id: str,
                          records: Sequence[ComparisonRecord]) -> SuccessfulSet:
    foreign = {r.program_id for r in records} - {program_id}
    if foreign:
        raise ValueError(f"records of {sorted(foreign)} passed for {program_id}")
    if is_successful(records):
        members.add(program_id)
    return members


def pick_mutation_parent(members: SuccessfulSet, rng: random.Random) -> str:
    ids = members.members()
    if not ids:
        raise EmptySet("no successful program to mutate")
    return ids[rng.randrange(len(ids))]


def derive_rng(seed: int, purpose: str, index: int) -> random.Random:
    """Independent stream per (seed, purpose, iteration); str seeds hash stably."""
    return random.Random(f"{seed}/{purpose}/{index}")


def derive_seed(seed: int, purpose: str, index: int) -> int:
    return derive_rng(seed, purpose, index).getrandbits(32)


@dataclass
class CampaignState:
    root: Path
    config_digest: str = ""
    attempts: int = 0
    accepted: int = 0
    rejected: int = 0
    complete: bool = False
    successful: SuccessfulSet = field(default_factory=SuccessfulSet)
    offsets: dict[str, int] = field(default_factory=dict)
    rejections: dict[str, int] = field(default_factory=dict)
    toolchains: dict[str, str] = field(default_factory=dict)

    # -- layout
    def path(self, rel: str) -> Path:
        return self.root / rel

    @property
    def programs_dir(self) -> Path:
        return self.root / "programs"

    @property
    def build_dir(self) -> Path:
        return self.root / "build"

    @property
    def prompts_dir(self) -> Path:
        return self.root / "prompts"

    @property
    def report_dir(self) -> Path:
        return self.root / "report"

    def to_json(self) -> dict[str, Any]:
        return {
            "schema": STATE_SCHEMA,
            "config_digest": self.config_digest,
            "attempts": self.attempts,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "complete": self.complete,
            "successful": self.successful.members(),
            "offsets": self.offsets,
            "rejections": self.rejections,
            "toolchains": self.toolchains,
        }

    # -- persistence
    def append(self, rel: str, lines: Iterable[dict[str, Any]]) -> None:
        path = self.path(rel)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            for obj in lines:
                fh.write(json.dumps(obj, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def commit(self) -> None:
        for rel in LOGS:
            p = self.path(rel)
            self.offsets[rel] = p.stat().st_size if p.exists() else 0
        tmp = self.path(MANIFEST + ".tmp")
        tmp.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")
        os.replace(tmp, self.path(MANIFEST))

    @classmethod
    def fresh(cls, root: Path, config_digest: str) -> "CampaignState":
        root.mkdir(parents=True, exist_ok=True)
        leftovers = [p.name for p in root.iterdir()]
        if leftovers:
            raise CorruptState(root, f"directory is not empty and has no {MANIFEST}: {sorted(leftovers)[:5]}")
        for sub in ("programs", "build", "prompts", "report"):
            (root / sub).mkdir()
        state = cls(root, config_digest)
        for rel in LOGS:
            state.path(rel).touch()
        return state

    @classmethod
    def load(cls, root: Path) -> "CampaignState":
        mpath = root / MANIFEST
        try:
            data = json.loads(mpath.read_text())
            state = cls(
                root=root,
                config_digest=data["config_digest"],
                attempts=int(data["attempts"]),
                accepted=int(data["accepted"]),
                rejected=int(data["rejected"]),
                complete=bool(data["complete"]),
                successful=SuccessfulSet(data["successful"]),
                offsets={k: int(v) for k, v in data["offsets"].items()},
                rejections=dict(data.get("rejections", {})),
                toolchains=dict(data.get("toolchains", {})),
            )
        except FileNotFoundError:
            raise CorruptState(mpath, "manifest missing") from None
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise CorruptState(mpath, f"unreadable manifest: {exc}") from exc
        if data.get("schema") != STATE_SCHEMA:
            raise CorruptState(mpath, f"unsupported state schema {data.get('schema')}")
        for rel in LOGS:
            p = root / rel
            if not p.exists():
                raise CorruptState(p, "file listed in manifest is missing")
            size = p.stat().st_size
            want = state.offsets.get(rel, 0)
            if size < want:
                raise CorruptState(p, f"shorter ({size} bytes) than committed ({want} bytes)")
        return state

    def rollback(self) -> None:
        """Drop log bytes written after the last commit."""
        for rel in LOGS:
            with self.path(rel).open("r+b") as fh:
                fh.truncate(self.offsets.get(rel, 0))

    def verify_successful(self) -> None:
        inconsistent = {r.program_id for r in iter_records(self.path(RECORDS))
                        if isinstance(r, ComparisonRecord) and r.inconsistent and r.mode == CROSS}
        missing = [p for p in self.successful if p not in inconsistent]
        if missing:
            raise CorruptState(self.path(MANIFEST),
                               f"successful programs without inconsistent records: {missing[:5]}")


def read_jsonl(path: Path) -> Iterator[dict[str, Any]]:
    with path.open(encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptState(path, f"line {n}: {exc}") from exc


def read_header(path: Path) -> dict[str, Any]:
    for obj in read_jsonl(path):
        if obj.get("type") != "campaign":
            raise CorruptState(path, "first line is not a campaign header")
        return obj
    raise CorruptState(path, "no campaign header")


def iter_records(path: Path) -> Iterator[ComparisonRecord | Exclusion | dict[str, Any]]:
    """Typed records; header, program and rejection lines come back as dicts."""
    precision = Precision.FP64
    for obj in read_jsonl(path):
        kind = obj.get("type")
        if kind == "campaign":
            precision = Precision.parse(obj["precision"])
            yield obj
        elif kind == "comparison":
            yield ComparisonRecord.from_json(obj, precision)
        elif kind == "exclusion":
            yield Exclusion.from_json(obj)
        elif kind in ("program", "rejection"):
            yield obj
        else:
            raise CorruptState(path, f"unknown record type {kind!r}")
