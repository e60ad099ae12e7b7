"""Pockets: grouped alpha spheres, their binding-site status and descriptors."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .alpha import AlphaSphere
from .clustering import ClusterLabeling
from .pdb_io import Atom, Ligand, LigandKey

POLAR_RESIDUES = frozenset({"ARG", "ASN", "ASP", "GLN", "GLU", "HIS", "LYS", "SER", "THR", "TYR"})
RESIDUE_CHARGE = {"ASP": -1, "GLU": -1, "LYS": 1, "ARG": 1}

N_SIZE_BINS = 6
N_HYDROPHILICITY_BINS = 5


class Shape(str, enum.Enum):
    CLEFT = "Cleft"
    CHANNEL = "Channel"
    TUNNEL = "Tunnel"
    VOID = "Void"


class CriteriaMode(str, enum.Enum):
    POCKETPICKER = "pocketpicker"
    MUTUAL_OVERLAP = "overlap"
    EITHER = "either"
    BOTH = "both"


@dataclass(frozen=True)
class SiteCriteria:
    pp_dist: float = 4.0
    mo_dist: float = 3.0
    mo_fraction: float = 0.5
    mode: CriteriaMode = CriteriaMode.EITHER

    def __post_init__(self):
        if self.pp_dist <= 0 or self.mo_dist <= 0:
            raise ValueError("site criteria distances must be positive")
        if not (0 < self.mo_fraction <= 1):
            raise ValueError(f"mo_fraction must be in (0, 1], got {self.mo_fraction}")
        object.__setattr__(self, "mode", CriteriaMode(self.mode))


@dataclass
class Descriptors:
    n_spheres: int
    density: float = 0.0
    polarity_score: int = 0
    charge_score: int = 0
    normalized_size_bin: int = 1
    hydrophilicity_bin: int = 1


@dataclass
class Pocket:
    id: int
    spheres: list[AlphaSphere]
    lining_atoms: frozenset[int]
    centroid: tuple[float, float, float]
    descriptors: Descriptors
    shape: Optional[Shape] = None
    matched_ligands: list[LigandKey] = field(default_factory=list)
    cluster_id: int = -1

    @property
    def is_active(self) -> bool:
        return bool(self.matched_ligands)

    @property
    def centers(self) -> np.ndarray:
        return np.array([s.center for s in self.spheres], dtype=float).reshape(-1, 3)


def assemble_pockets(labeling: ClusterLabeling, spheres: Sequence[AlphaSphere]) -> list[Pocket]:
    """One pocket per cluster, largest first (ties: lower cluster id); ids from 1."""
    labels = labeling.labels
    if len(labels) != len(spheres):
        raise ValueError(f"{len(labels)} labels for {len(spheres)} spheres")
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels.tolist()):
        if lab >= 0:
            groups.setdefault(lab, []).append(i)
    order = sorted(groups, key=lambda c: (-len(groups[c]), c))
    pockets = []
    for rank, cid in enumerate(order, start=1):
        members = [spheres[i] for i in groups[cid]]
        centers = np.array([s.center for s in members], dtype=float)
        centroid = tuple(float(v) for v in centers.mean(axis=0))
        lining = frozenset(itertools.chain.from_iterable(s.defining_atoms for s in members))
        pockets.append(Pocket(
            id=rank,
            spheres=members,
            lining_atoms=lining,
            centroid=centroid,
            descriptors=Descriptors(n_spheres=len(members)),
            cluster_id=int(cid),
        ))
    return pockets


def pocketpicker_match(pocket: Pocket, ligand: Ligand, pp_dist: float = 4.0) -> bool:
    """Some ligand atom lies within ``pp_dist`` of the pocket centroid."""
    d = np.sqrt(((ligand.coords - np.asarray(pocket.centroid)) ** 2).sum(axis=1))
    return bool(d.min() <= pp_dist)


def mutual_overlap_match(pocket: Pocket, ligand: Ligand, mo_dist: float = 3.0,
                         mo_fraction: float = 0.5) -> bool:
    """At least ``mo_fraction`` of ligand atoms lie within ``mo_dist`` of a sphere centre."""
    lig = ligand.coords
    centers = pocket.centers
    d = np.sqrt(((lig[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2))
    near = int((d.min(axis=1) <= mo_dist).sum())
    # tolerance absorbs rounding in fraction * n
    return near >= mo_fraction * len(lig) - 1e-12


def _match(pocket: Pocket, ligand: Ligand, criteria: SiteCriteria) -> bool:
    mode = criteria.mode
    if mode is CriteriaMode.POCKETPICKER:
        return pocketpicker_match(pocket, ligand, criteria.pp_dist)
    if mode is CriteriaMode.MUTUAL_OVERLAP:
        return mutual_overlap_match(pocket, ligand, criteria.mo_dist, criteria.mo_fraction)
    pp = pocketpicker_match(pocket, ligand, criteria.pp_dist)
    if mode is CriteriaMode.EITHER and pp:
        return True
    if mode is CriteriaMode.BOTH and not pp:
        return False
    return mutual_overlap_match(pocket, ligand, criteria.mo_dist, criteria.mo_fraction)


def classify_sites(pockets: list[Pocket], ligands: Sequence[Ligand],
                   criteria: SiteCriteria = SiteCriteria()):
    """Match every pocket against every ligand.

    Sets ``matched_ligands`` on each pocket (in ligand order) and returns
    ``(pockets, active_ligands, non_active_ligands)`` where the ligand sets
    hold ligand keys.
    """
    active: set[LigandKey] = set()
    for p in pockets:
        p.matched_ligands = [lig.key for lig in ligands if lig.atoms and _match(p, lig, criteria)]
        active.update(p.matched_ligands)
    non_active = {lig.key for lig in ligands} - active
    return pockets, active, non_active


def compute_density(pocket: Pocket) -> float:
    """Mean distance over all pairs of sphere centres (0 for one sphere)."""
    c = pocket.centers
    n = len(c)
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, k=1)
    d = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(axis=2))
    return float(d[iu].mean())


def compute_polarity_charge(pocket: Pocket, atoms: Sequence[Atom]) -> tuple[int, int]:
    residues = {
        (atoms[i].chain_id, atoms[i].residue_seq, atoms[i].residue_name)
        for i in pocket.lining_atoms
    }
    polarity = sum(1 for r in residues if r[2] in POLAR_RESIDUES)
    charge = sum(RESIDUE_CHARGE.get(r[2], 0) for r in residues)
    return polarity, charge


def ray_directions(rotation: Optional[np.ndarray] = None) -> np.ndarray:
    """The 26 unit vectors along nonzero sign patterns in {-1, 0, 1}^3."""
    dirs = np.array([v for v in itertools.product((-1, 0, 1), repeat=3) if any(v)], dtype=float)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    if rotation is not None:
        dirs = dirs @ np.asarray(rotation, dtype=float).T
    return dirs


class AtomCloud:
    """Atom centres, inflated radii and a KD-tree, built once per structure."""

    def __init__(self, coords, radii, probe: float = 1.4):
        self.coords = np.asarray(coords, dtype=float).reshape(-1, 3)
        self.radii = np.asarray(radii, dtype=float) + probe
        self.probe = probe
        self.tree = cKDTree(self.coords) if len(self.coords) else None
        self.max_radius = float(self.radii.max()) if len(self.radii) else 0.0

    @classmethod
    def from_atoms(cls, atoms: Sequence[Atom], probe: float = 1.4) -> "AtomCloud":
        return cls([a.position for a in atoms], [a.vdw_radius for a in atoms], probe)


def exposed_spheres(centers, cloud: AtomCloud, escape: float = 25.0,
                    directions: Optional[np.ndarray] = None) -> np.ndarray:
    """Flag centres from which at least one ray reaches ``escape`` unobstructed.

    A ray is obstructed when it passes within an atom's inflated radius.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 3)
    dirs = ray_directions() if directions is None else directions
    out = np.zeros(len(centers), dtype=bool)
    if cloud.tree is None:
        out[:] = True
        return out
    near_lists = cloud.tree.query_ball_point(centers, r=escape + cloud.max_radius)
    for i, near in enumerate(near_lists):
        if not near:
            out[i] = True
            continue
        rel = cloud.coords[near] - centers[i]
        r2 = cloud.radii[near] ** 2
        proj = rel @ dirs.T
        t = np.clip(proj, 0.0, escape)
        dist2 = (rel ** 2).sum(axis=1)[:, None] - 2.0 * t * proj + t * t
        blocked = (dist2 <= r2[:, None]).any(axis=0)
        out[i] = not blocked.all()
    return out


def count_mouths(centers, exposed: np.ndarray, linkage: float) -> int:
    """Connected groups of exposed centres under single linkage at ``linkage``."""
    pts = np.asarray(centers, dtype=float).reshape(-1, 3)[np.asarray(exposed, dtype=bool)]
    if len(pts) == 0:
        return 0
    pairs = cKDTree(pts).query_pairs(linkage, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(pts), len(pts)))
    n, _ = connected_components(graph, directed=False)
    return int(n)


def elongation(centers) -> float:
    """sqrt(largest / smallest) eigenvalue of the centre covariance."""
    c = np.asarray(centers, dtype=float).reshape(-1, 3)
    if len(c) < 2:
        return 1.0
    cov = np.cov(c, rowvar=False, bias=True)
    lam = np.linalg.eigvalsh(cov)
    return float(np.sqrt(max(lam[-1], 1e-6) / max(lam[0], 1e-6)))


def classify_shape(pocket: Pocket, atoms, probe: float = 1.4, escape: float = 25.0,
                   mouth_linkage: float = 9.0, elongation_cut: float = 3.0,
                   rotation: Optional[np.ndarray] = None) -> Shape:
    """Shape class from ray exposure and mouth count.

    No exposed sphere gives Void, two or more separate mouths give Channel,
    and a single mouth gives Tunnel when the sphere cloud is elongated
    (ratio >= ``elongation_cut``), Cleft otherwise.  ``atoms`` may be a
    prebuilt :class:`AtomCloud`, whose own probe then applies.
    """
    cloud = atoms if isinstance(atoms, AtomCloud) else AtomCloud.from_atoms(atoms, probe)
    centers = pocket.centers
    exposed = exposed_spheres(centers, cloud, escape, ray_directions(rotation))
    mouths = count_mouths(centers, exposed, mouth_linkage)
    if mouths == 0:
        return Shape.VOID
    if mouths >= 2:
        return Shape.CHANNEL
    return Shape.TUNNEL if elongation(centers) >= elongation_cut else Shape.CLEFT


def _bin(values: list[int], n_bins: int) -> list[int]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return [1] * len(values)
    # ceil(n_bins * (v - lo) / (hi - lo)) in integer arithmetic
    return [min(n_bins, max(1, -(-n_bins * (v - lo) // (hi - lo)))) for v in values]


def bin_descriptors(pockets: list[Pocket]) -> list[Pocket]:
    """Min-max normalise size and polarity over the pocket set and bin them."""
    if not pockets:
        return pockets
    sizes = _bin([p.descriptors.n_spheres for p in pockets], N_SIZE_BINS)
    polar = _bin([p.descriptors.polarity_score for p in pockets], N_HYDROPHILICITY_BINS)
    for p, s, h in zip(pockets, sizes, polar):
        p.descriptors.normalized_size_bin = s
        p.descriptors.hydrophilicity_bin = h
    return pockets


def describe_pockets(pockets: list[Pocket], atoms: Sequence[Atom], cloud: Optional[AtomCloud] = None,
                     escape: float = 25.0, mouth_linkage: float = 9.0,
                     elongation_cut: float = 3.0, probe: float = 1.4) -> list[Pocket]:
    """Fill descriptors and shape class of every pocket, in place."""
    if cloud is None:
        cloud = AtomCloud.from_atoms(atoms, probe)
    for p in pockets:
        p.descriptors.n_spheres = len(p.spheres)
        p.descriptors.density = compute_density(p)
        p.descriptors.polarity_score, p.descriptors.charge_score = compute_polarity_charge(p, atoms)
        p.shape = classify_shape(p, cloud, escape=escape, mouth_linkage=mouth_linkage,
                                 elongation_cut=elongation_cut)
    return bin_descriptors(pockets)
