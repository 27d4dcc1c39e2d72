"""Campaign report derived from records.jsonl (plus programs/ for diversity)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..analysis.clones import CloneReport, detect_clones
from ..analysis.similarity import SimilarityReport, mean_pairwise_similarity
from ..analysis.tables import (RateTable, Summary, baseline_table, compiler_pair_table, dump_json,
                               kind_distribution, summarize)
from ..diffexec.compare import ComparisonRecord, Exclusion
from .state import RECORDS, CorruptState, iter_records

TABLE_FILES = ("summary", "kind_distribution", "compiler_pairs", "baseline", "diversity")


@dataclass
class CampaignReport:
    header: dict[str, Any]
    summary: Summary
    tables: dict[str, RateTable]
    accepted: int
    rejected: int
    rejection_reasons: dict[str, int]
    similarity: SimilarityReport | None = None
    clones: CloneReport | None = None
    time: dict[str, float] = field(default_factory=dict)

    def diversity_json(self) -> dict[str, Any]:
        return {
            "similarity": self.similarity.to_json() if self.similarity else None,
            "clones": self.clones.to_json() if self.clones else None,
        }

    def totals_json(self) -> dict[str, Any]:
        return {
            "budget": self.header.get("budget"),
            "accepted": self.accepted,
            "rejected": self.rejected,
            "rejection_reasons": self.rejection_reasons,
            **self.summary.to_json(),
        }

    def render_summary(self) -> str:
        text = self.summary.render_text()
        extra = [f"budget              {self.header.get('budget')}",
                 f"accepted programs   {self.accepted}",
                 f"rejected attempts   {self.rejected}"]
        for reason, n in sorted(self.rejection_reasons.items()):
            extra.append(f"  {n:5d}  {reason}")
        if self.clones is not None:
            counts = ", ".join(f"{c.value} {n}" for c, n in self.clones.exclusive.items())
            extra.append(f"clone pairs         {counts}")
        return text + "\n".join(extra) + "\n"

    def write(self, out_dir: Path) -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []

        def put(name: str, text: str) -> None:
            path = out_dir / name
            path.write_text(text)
            written.append(path)

        put("summary.txt", self.render_summary())
        put("summary.json", dump_json(self.totals_json()))
        for name, table in self.tables.items():
            put(f"{name}.txt", table.render_text())
            put(f"{name}.json", dump_json(table.to_json()))
        put("diversity.json", dump_json(self.diversity_json()))
        return written


def _reason_class(reason: str) -> str:
    return reason.split(":", 1)[0]


def build_report(campaign_dir: Path, diversity: bool = True) -> CampaignReport:
    path = campaign_dir / RECORDS
    if not path.exists():
        raise CorruptState(path, "records file missing")
    header: dict[str, Any] | None = None
    programs: list[str] = []
    records: list[ComparisonRecord] = []
    exclusions = 0
    reasons: dict[str, int] = {}
    for item in iter_records(path):
        if isinstance(item, ComparisonRecord):
            records.append(item)
        elif isinstance(item, Exclusion):
            exclusions += item.mode == "cross"
        elif item["type"] == "campaign":
            header = item
        elif item["type"] == "program":
            programs.append(item["program"])
        else:
            key = _reason_class(item["reason"])
            reasons[key] = reasons.get(key, 0) + 1
    if header is None:
        raise CorruptState(path, "no campaign header")
    compilers = header["compilers"]
    levels = header["levels"]
    n = len(programs)
    summary = summarize(records, exclusions, n, len(compilers), len(levels))
    denom = max(n, 1)
    tables = {
        "kind_distribution": kind_distribution(records, levels),
        "compiler_pairs": compiler_pair_table(records, denom, compilers, levels),
    }
    if header.get("baseline"):
        tables["baseline"] = baseline_table(records, denom, compilers, levels)
    report = CampaignReport(header, summary, tables, n, sum(reasons.values()), reasons)
    if diversity and n >= 2:
        sources = []
        for pid in programs:
            src = campaign_dir / "programs" / f"{pid}.c"
            if src.exists():
                sources.append(src.read_text())
        if len(sources) >= 2:
            report.similarity = mean_pairwise_similarity(sources)
            report.clones = detect_clones(sources)
            summary.similarity = report.similarity.mean
            summary.clone_percent = report.clones.percent
    return report
