"""Extrinsic evaluation against ground-truth labels and run statistics."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Optional

from .pdb_io import LigandKey
from .pockets import N_HYDROPHILICITY_BINS, N_SIZE_BINS, Pocket, Shape

DIV0 = "Div 0"
NO_GROUND_TRUTH = "No ground truth"

GroundTruth = dict[str, dict[LigandKey, bool]]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    # predicted ligands absent from the ground truth; not part of the four counts
    uncovered: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp,
                               self.fn + other.fn, self.uncovered + other.uncovered)


@dataclass(frozen=True)
class MetricResult:
    """None marks a metric whose denominator is zero."""

    precision: Optional[float]
    recall: Optional[float]
    accuracy_pct: Optional[float]


def confusion(predicted: Mapping[LigandKey, bool], truth: Mapping[LigandKey, bool]) -> ConfusionCounts:
    """Per-ligand confusion counts.

    Keys only in ``predicted`` are counted as uncovered; keys only in
    ``truth`` are treated as not detected.
    """
    tp = tn = fp = fn = 0
    for key, expected in truth.items():
        got = bool(predicted.get(key, False))
        if got and expected:
            tp += 1
        elif got:
            fp += 1
        elif expected:
            fn += 1
        else:
            tn += 1
    uncovered = sum(1 for key in predicted if key not in truth)
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn, uncovered=uncovered)


def metrics(c: ConfusionCounts) -> MetricResult:
    def ratio(num, den):
        return num / den if den else None

    acc = ratio(c.tp + c.tn, c.total)
    return MetricResult(
        precision=ratio(c.tp, c.tp + c.fp),
        recall=ratio(c.tp, c.tp + c.fn),
        accuracy_pct=None if acc is None else 100.0 * acc,
    )


def _round_half_up(value: float, places: int) -> Decimal:
    q = Decimal(1).scaleb(-places)
    return Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP)


def format_ratio(value: Optional[float]) -> str:
    """Two decimals, half away from zero, trailing zeros dropped ("1", "0.67")."""
    if value is None:
        return DIV0
    text = format(_round_half_up(value, 2), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def format_percent(value: Optional[float]) -> str:
    if value is None:
        return DIV0
    return format(_round_half_up(value, 0), "f")


def load_ground_truth(path) -> GroundTruth:
    """Read the ground-truth TSV.

    Columns: structure_id, residue_name, chain_id, residue_seq,
    expected_detected (0/1).  Lines starting with ``#`` are ignored.
    """
    truth: GroundTruth = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 5:
                raise ValueError(f"{path}:{line_no}: expected 5 columns, got {len(row)}")
            sid, resn, chain, seq, flag = (x.strip() for x in row[:5])
            if flag not in ("0", "1"):
                raise ValueError(f"{path}:{line_no}: expected_detected must be 0 or 1, got {flag!r}")
            try:
                key = (resn, chain, int(seq))
            except ValueError:
                raise ValueError(f"{path}:{line_no}: bad residue_seq {seq!r}") from None
            per = truth.setdefault(sid, {})
            if key in per:
                raise ValueError(f"{path}:{line_no}: duplicate ligand {key} for {sid}")
            per[key] = flag == "1"
    return truth


@dataclass
class StructureResult:
    """Outcome of one structure through the pipeline."""

    structure_id: str
    pockets: list[Pocket]
    ligand_keys: list[LigandKey]
    active_ligands: set[LigandKey]
    non_active_ligands: set[LigandKey]
    silhouette: Optional[float] = None
    n_alpha_spheres: int = 0
    n_noise: int = 0

    def predicted(self) -> dict[LigandKey, bool]:
        return {k: k in self.active_ligands for k in self.ligand_keys}


@dataclass
class RunStats:
    n_structures: int = 0
    n_active_ligands: int = 0
    n_active_sites: int = 0
    n_non_active_ligands: int = 0
    n_non_active_sites: int = 0
    active_sites_by_shape: dict[str, int] = field(default_factory=dict)
    # per residue name: [active, non-active] ligand counts
    ligands_by_name: dict[str, list[int]] = field(default_factory=dict)
    size_bins_by_shape: dict[str, list[int]] = field(default_factory=dict)
    hydrophilicity_bins_by_shape: dict[str, list[int]] = field(default_factory=dict)

    @property
    def n_ligands(self) -> int:
        return self.n_active_ligands + self.n_non_active_ligands

    def shape_fraction(self, shape: str) -> float:
        """Share of active sites with this shape."""
        return self.active_sites_by_shape.get(shape, 0) / self.n_active_sites if self.n_active_sites else 0.0

    def size_bin_fractions(self, shape: str) -> list[float]:
        return _fractions(self.size_bins_by_shape.get(shape, [0] * N_SIZE_BINS))

    def hydrophilicity_bin_fractions(self, shape: str) -> list[float]:
        return _fractions(self.hydrophilicity_bins_by_shape.get(shape, [0] * N_HYDROPHILICITY_BINS))


def _fractions(counts: list[int]) -> list[float]:
    total = sum(counts)
    return [c / total if total else 0.0 for c in counts]


def aggregate_stats(results: Iterable[StructureResult]) -> RunStats:
    """Sum per-structure counts; shape and bin tallies cover active sites only."""
    stats = RunStats()
    shapes = Counter()
    names: dict[str, list[int]] = {}
    size_bins = {s.value: [0] * N_SIZE_BINS for s in Shape}
    hyd_bins = {s.value: [0] * N_HYDROPHILICITY_BINS for s in Shape}
    for r in results:
        stats.n_structures += 1
        stats.n_active_ligands += len(r.active_ligands)
        stats.n_non_active_ligands += len(r.non_active_ligands)
        for key in r.ligand_keys:
            slot = names.setdefault(key[0], [0, 0])
            slot[0 if key in r.active_ligands else 1] += 1
        for p in r.pockets:
            if not p.is_active:
                stats.n_non_active_sites += 1
                continue
            stats.n_active_sites += 1
            if p.shape is not None:
                shapes[p.shape.value] += 1
                size_bins[p.shape.value][p.descriptors.normalized_size_bin - 1] += 1
                hyd_bins[p.shape.value][p.descriptors.hydrophilicity_bin - 1] += 1
    stats.active_sites_by_shape = {s.value: shapes.get(s.value, 0) for s in Shape}
    stats.ligands_by_name = dict(sorted(names.items()))
    stats.size_bins_by_shape = size_bins
    stats.hydrophilicity_bins_by_shape = hyd_bins
    return stats


def metric_rows(results: Iterable[StructureResult], truth: GroundTruth) -> list[list[str]]:
    """Rows for the metric report, one per structure in the given order."""
    rows = []
    for r in results:
        sil = "NA" if r.silhouette is None else f"{r.silhouette:.2f}"
        if r.structure_id not in truth:
            rows.append([r.structure_id, NO_GROUND_TRUTH, "", "", "", "", "", "", "", sil])
            continue
        c = confusion(r.predicted(), truth[r.structure_id])
        m = metrics(c)
        rows.append([
            r.structure_id, format_ratio(m.precision), format_ratio(m.recall),
            format_percent(m.accuracy_pct), str(c.tp), str(c.fp), str(c.fn), str(c.tn),
            str(c.uncovered), sil,
        ])
    return rows


METRIC_HEADER = ["structure_id", "precision", "recall", "accuracy_pct", "tp", "fp", "fn", "tn",
                 "uncovered", "silhouette"]
