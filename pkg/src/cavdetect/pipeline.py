"""End-to-end cavity detection for one structure or a batch of files."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .alpha import RadiusBand, filter_alpha_spheres
from .clustering import (DbscanParams, UndefinedScoreError, dbscan, merge_small_clusters,
                         silhouette_score)
from .evaluation import (METRIC_HEADER, GroundTruth, RunStats, StructureResult, aggregate_stats,
                         load_ground_truth, metric_rows)
from .geometry import delaunay, voronoi_vertices
from .pdb_io import Structure, read_pdb, write_info_txt, write_pocket_pdb
from .pockets import (AtomCloud, CriteriaMode, Shape, SiteCriteria, assemble_pockets,
                      classify_sites, describe_pockets)

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class InsufficientAtomsError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    r_min: float = 3.0
    r_max: float = 5.0
    eps: float = 4.5
    min_pts: int = 4
    merge_min_size: int = 3
    merge_dist: Optional[float] = None  # default 2 * eps
    criteria_mode: str = "either"
    pp_dist: float = 4.0
    mo_dist: float = 3.0
    mo_fraction: float = 0.5
    probe: float = 1.4
    escape: float = 25.0
    mouth_linkage: Optional[float] = None  # default 2 * eps
    elongation: float = 3.0
    out_dir: Optional[str] = None
    ground_truth: Optional[str] = None

    def __post_init__(self):
        try:
            self.band
            self.dbscan_params
            self.criteria
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.merge_min_size < 1:
            raise ConfigError("merge_min_size must be >= 1")
        for name in ("merge_dist", "mouth_linkage"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.probe < 0 or self.escape <= 0 or self.elongation < 1:
            raise ConfigError("shape thresholds need probe >= 0, escape > 0, elongation >= 1")

    @property
    def band(self) -> RadiusBand:
        return RadiusBand(self.r_min, self.r_max)

    @property
    def dbscan_params(self) -> DbscanParams:
        return DbscanParams(self.eps, self.min_pts)

    @property
    def criteria(self) -> SiteCriteria:
        try:
            mode = CriteriaMode(self.criteria_mode)
        except ValueError:
            raise ValueError(f"unknown criteria mode {self.criteria_mode!r}") from None
        return SiteCriteria(self.pp_dist, self.mo_dist, self.mo_fraction, mode)

    @property
    def resolved_merge_dist(self) -> float:
        return 2.0 * self.eps if self.merge_dist is None else self.merge_dist

    @property
    def resolved_mouth_linkage(self) -> float:
        return 2.0 * self.eps if self.mouth_linkage is None else self.mouth_linkage

    def echo(self) -> dict:
        """Resolved parameters, without output locations."""
        d = asdict(self)
        d.pop("out_dir")
        d.pop("ground_truth")
        d["merge_dist"] = self.resolved_merge_dist
        d["mouth_linkage"] = self.resolved_mouth_linkage
        return d


def run_pipeline(structure: Structure, config: PipelineConfig = PipelineConfig()) -> StructureResult:
    """Find and describe the pockets of one structure.

    Writes ``<id>_pocket<k>.pdb`` and ``<id>_info.txt`` when
    ``config.out_dir`` is set.
    """
    atoms = structure.protein_atoms
    if len(atoms) < 4:
        raise InsufficientAtomsError(f"{structure.id}: {len(atoms)} protein atoms, need at least 4")
    coords = structure.coords
    tets = delaunay(coords)
    vertices = voronoi_vertices(coords, tets)
    spheres = filter_alpha_spheres(vertices, config.band)
    centers = np.array([s.center for s in spheres], dtype=float).reshape(-1, 3)

    labeling = dbscan(centers, config.dbscan_params)
    labeling = merge_small_clusters(labeling, centers, config.merge_min_size,
                                    config.resolved_merge_dist)
    try:
        silhouette = silhouette_score(centers, labeling)
    except UndefinedScoreError:
        silhouette = None

    pockets = assemble_pockets(labeling, spheres)
    _, active, non_active = classify_sites(pockets, structure.ligands, config.criteria)
    cloud = AtomCloud(coords, structure.radii, config.probe)
    describe_pockets(pockets, atoms, cloud, escape=config.escape,
                     mouth_linkage=config.resolved_mouth_linkage,
                     elongation_cut=config.elongation)
    logger.info("%s: %d atoms, %d tetrahedra, %d alpha spheres, %d pockets (%d active)",
                structure.id, len(atoms), len(tets), len(spheres), len(pockets),
                sum(p.is_active for p in pockets))

    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        for p in pockets:
            write_pocket_pdb(p, atoms, os.path.join(config.out_dir, f"{structure.id}_pocket{p.id}.pdb"))
        write_info_txt(structure, pockets, os.path.join(config.out_dir, f"{structure.id}_info.txt"),
                       config=config.echo())

    return StructureResult(
        structure_id=structure.id,
        pockets=pockets,
        ligand_keys=[lig.key for lig in structure.ligands],
        active_ligands=active,
        non_active_ligands=non_active,
        silhouette=silhouette,
        n_alpha_spheres=len(spheres),
        n_noise=labeling.n_noise,
    )


@dataclass
class BatchResult:
    results: list[StructureResult]
    failures: list[tuple[str, str]]
    stats: RunStats
    metric_rows: Optional[list[list[str]]] = None
    truth: Optional[GroundTruth] = field(default=None, repr=False)

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0


def _process(path: str, config: PipelineConfig):
    try:
        structure = read_pdb(path)
        return path, run_pipeline(structure, config), None
    except Exception as exc:  # one bad structure must not stop the batch
        return path, None, f"{type(exc).__name__}: {exc}"


def run_batch(paths: Sequence[str], config: PipelineConfig = PipelineConfig(),
              threads: int = 1) -> BatchResult:
    """Run every file, isolate failures, aggregate in structure-id order."""
    paths = list(paths)
    truth = load_ground_truth(config.ground_truth) if config.ground_truth else None
    if threads > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_process, paths, [config] * len(paths)))
    else:
        outcomes = [_process(p, config) for p in paths]

    results = []
    failures = []
    for path, result, err in outcomes:
        if err is not None:
            logger.error("%s: %s", path, err)
            failures.append((path, err))
        else:
            results.append(result)
    results.sort(key=lambda r: r.structure_id)
    batch = BatchResult(results=results, failures=failures, stats=aggregate_stats(results))
    if truth is not None:
        batch.truth = truth
        batch.metric_rows = metric_rows(results, truth)
    return batch


def format_report(batch: BatchResult) -> str:
    """Tab-separated run summary, shape table, per-structure rows and failures."""
    s = batch.stats
    out = ["[SUMMARY]"]
    for name, value in (
        ("structures", s.n_structures),
        ("failures", len(batch.failures)),
        ("active_ligands", s.n_active_ligands),
        ("active_sites", s.n_active_sites),
        ("non_active_ligands", s.n_non_active_ligands),
        ("non_active_sites", s.n_non_active_sites),
    ):
        out.append(f"{name}\t{value}")
    out.append("")
    out.append("[ACTIVE SITES BY SHAPE]")
    out.append("shape\tcount\tfraction\t" + "\t".join(f"size_{i}" for i in range(1, 7))
               + "\t" + "\t".join(f"hydro_{c}" for c in "ABCDE"))
    for shape in Shape:
        key = shape.value
        row = [key, str(s.active_sites_by_shape.get(key, 0)), f"{s.shape_fraction(key):.2f}"]
        row += [f"{v:.2f}" for v in s.size_bin_fractions(key)]
        row += [f"{v:.2f}" for v in s.hydrophilicity_bin_fractions(key)]
        out.append("\t".join(row))
    out.append("")
    out.append("[LIGANDS BY NAME]")
    out.append("residue_name\tactive\tnon_active")
    for name, (a, n) in s.ligands_by_name.items():
        out.append(f"{name}\t{a}\t{n}")
    out.append("")
    out.append("[STRUCTURES]")
    if batch.metric_rows is not None:
        out.append("\t".join(METRIC_HEADER))
        out.extend("\t".join(r) for r in batch.metric_rows)
    else:
        out.append("structure_id\tpockets\tactive_sites\tactive_ligands\tnon_active_ligands\tsilhouette")
        for r in batch.results:
            sil = "NA" if r.silhouette is None else f"{r.silhouette:.2f}"
            out.append(f"{r.structure_id}\t{len(r.pockets)}\t{sum(p.is_active for p in r.pockets)}"
                       f"\t{len(r.active_ligands)}\t{len(r.non_active_ligands)}\t{sil}")
    out.append("")
    out.append("[FAILURES]")
    for path, err in batch.failures:
        out.append(f"{path}\t{err}")
    return "\n".join(out) + "\n"
