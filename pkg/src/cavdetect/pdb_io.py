"""Reading PDB structures and writing pocket files and text reports."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Iterable, Optional

import numpy as np

if TYPE_CHECKING:
    from .pockets import Pocket

WATER_NAMES = frozenset({"HOH", "WAT", "DOD"})

# Van der Waals radii in Å (Bondi 1964; Ca from Mantina et al. 2009).
VDW_RADII = {
    "H": 1.20, "HE": 1.40, "LI": 1.82, "C": 1.70, "N": 1.55, "O": 1.52,
    "F": 1.47, "NE": 1.54, "NA": 2.27, "MG": 1.73, "SI": 2.10, "P": 1.80,
    "S": 1.80, "CL": 1.75, "AR": 1.88, "K": 2.75, "CA": 2.31, "NI": 1.63,
    "CU": 1.40, "ZN": 1.39, "GA": 1.87, "AS": 1.85, "SE": 1.90, "BR": 1.85,
    "KR": 2.02, "PD": 1.63, "AG": 1.72, "CD": 1.58, "IN": 1.93, "SN": 2.17,
    "TE": 2.06, "I": 1.98, "XE": 2.16, "PT": 1.72, "AU": 1.66, "HG": 1.55,
    "TL": 1.96, "PB": 2.02, "U": 1.86,
}
DEFAULT_VDW_RADIUS = 1.70

SPHERE_RESNAME = "APS"
SPHERE_ELEMENT = "X"


class PDBParseError(ValueError):
    """A coordinate record could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyStructureError(ValueError):
    """The file holds no ATOM records."""


def vdw_radius(element: str) -> float:
    return VDW_RADII.get(element.strip().upper(), DEFAULT_VDW_RADIUS)


@dataclass(frozen=True)
class Atom:
    serial: int
    name: str
    element: str
    residue_name: str
    chain_id: str
    residue_seq: int
    insertion_code: Optional[str]
    position: tuple[float, float, float]
    is_hetero: bool
    vdw_radius: float
    occupancy: float = 1.0
    b_factor: float = 0.0


LigandKey = tuple[str, str, int]


def format_ligand_key(key: LigandKey) -> str:
    return f"{key[0]}:{key[1]}:{key[2]}"


@dataclass(frozen=True)
class Ligand:
    key: LigandKey
    atoms: tuple[Atom, ...]

    @property
    def coords(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=float)


@dataclass(frozen=True)
class Structure:
    id: str
    protein_atoms: tuple[Atom, ...]
    ligands: tuple[Ligand, ...] = ()
    # HETATM records dropped as solvent; kept for bookkeeping only.
    n_water_atoms: int = 0

    @property
    def coords(self) -> np.ndarray:
        return np.array([a.position for a in self.protein_atoms], dtype=float).reshape(-1, 3)

    @property
    def radii(self) -> np.ndarray:
        return np.array([a.vdw_radius for a in self.protein_atoms], dtype=float)


def _infer_element(line: str, is_hetero: bool) -> str:
    name_field = line[12:16]
    if name_field[:1] in (" ", "") or name_field[:1].isdigit():
        letters = [ch for ch in name_field[1:] if ch.isalpha()]
        return letters[0].upper() if letters else ""
    if is_hetero:
        two = name_field[:2].upper()
        if two.isalpha() and two in VDW_RADII:
            return two
    return name_field[0].upper()


def _parse_atom_line(line: str, line_no: int, is_hetero: bool) -> Atom:
    if len(line) < 54:
        raise PDBParseError(line_no, "record truncated before the coordinate columns")
    try:
        x = float(line[30:38])
        y = float(line[38:46])
        z = float(line[46:54])
    except ValueError:
        raise PDBParseError(line_no, f"malformed coordinates {line[30:54]!r}") from None
    if not all(np.isfinite((x, y, z))):
        raise PDBParseError(line_no, "non-finite coordinate")
    try:
        residue_seq = int(line[22:26])
    except ValueError:
        raise PDBParseError(line_no, f"malformed residue number {line[22:26]!r}") from None
    try:
        serial = int(line[6:11])
    except ValueError:
        serial = -1
    element = line[76:78].strip().upper() if len(line) >= 78 else ""
    if not element or not element.isalpha():
        element = _infer_element(line, is_hetero)
    icode = line[26:27].strip() or None
    occupancy = _float_or(line[54:60], 1.0)
    b_factor = _float_or(line[60:66], 0.0)
    return Atom(
        serial=serial,
        name=line[12:16].strip(),
        element=element,
        residue_name=line[17:20].strip(),
        chain_id=line[21:22].strip(),
        residue_seq=residue_seq,
        insertion_code=icode,
        position=(x, y, z),
        is_hetero=is_hetero,
        vdw_radius=vdw_radius(element),
        occupancy=occupancy,
        b_factor=b_factor,
    )


def _float_or(text: str, default: float) -> float:
    try:
        return float(text)
    except ValueError:
        return default


def parse_pdb(text, id: str) -> Structure:
    """Parse fixed-column PDB content into a :class:`Structure`.

    ``text`` may be a string or any iterable of lines.  Only the first MODEL
    is read, alternate locations other than blank or ``A`` are dropped, and
    water residues are discarded from the HETATM groups.
    """
    lines = io.StringIO(text) if isinstance(text, str) else text
    protein: list[Atom] = []
    groups: dict[LigandKey, list[Atom]] = {}
    n_water = 0
    serial_fallback = 0
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        record = line[:6]
        if record.startswith("ENDMDL"):
            break
        if record.startswith("ATOM") or record.startswith("HETATM"):
            is_het = record.startswith("HETATM")
            altloc = line[16:17] if len(line) > 16 else " "
            if altloc not in (" ", "A", ""):
                continue
            atom = _parse_atom_line(line, line_no, is_het)
            serial_fallback += 1
            if atom.serial < 0:
                atom = replace(atom, serial=serial_fallback)
            if not is_het:
                protein.append(atom)
            elif atom.residue_name in WATER_NAMES:
                n_water += 1
            else:
                key = (atom.residue_name, atom.chain_id, atom.residue_seq)
                groups.setdefault(key, []).append(atom)
    if not protein:
        raise EmptyStructureError(f"{id}: no ATOM records")
    ligands = tuple(Ligand(key=k, atoms=tuple(v)) for k, v in groups.items())
    return Structure(id=id, protein_atoms=tuple(protein), ligands=ligands, n_water_atoms=n_water)


def read_pdb(path) -> Structure:
    """Parse a PDB file; the structure id is the file stem."""
    stem = os.path.basename(os.fspath(path))
    for ext in (".pdb", ".ent"):
        if stem.lower().endswith(ext):
            stem = stem[: -len(ext)]
    with open(path, encoding="utf-8", errors="replace") as fh:
        return parse_pdb(fh, stem)


def _format_atom_name(name: str, element: str) -> str:
    if len(name) < 4 and len(element) < 2:
        return f" {name:<3}"
    return f"{name:<4}"[:4]


def format_atom_record(
    record: str,
    serial: int,
    name: str,
    residue_name: str,
    chain_id: str,
    residue_seq: int,
    position: Iterable[float],
    occupancy: float = 1.0,
    b_factor: float = 0.0,
    element: str = "",
    insertion_code: Optional[str] = None,
) -> str:
    x, y, z = position
    return (
        f"{record:<6}{serial % 100000:>5} {_format_atom_name(name, element)}"
        f" {residue_name:>3} {(chain_id or ' ')[:1]}{residue_seq:>4}{(insertion_code or ' ')[:1]}"
        f"   {x:8.3f}{y:8.3f}{z:8.3f}{occupancy:6.2f}{b_factor:6.2f}"
        f"          {element:>2}"
    )


def write_pocket_pdb(pocket: "Pocket", atoms, path) -> None:
    """Write a pocket as lining atoms (ATOM) plus sphere centres (HETATM).

    Sphere records use residue name ``APS`` and carry the sphere radius in
    the B-factor column.
    """
    lines = [f"REMARK   1 POCKET {pocket.id} N_SPHERES {len(pocket.spheres)}"]
    last_serial = 0
    for idx in sorted(pocket.lining_atoms):
        a = atoms[idx]
        lines.append(format_atom_record(
            "ATOM", a.serial, a.name, a.residue_name, a.chain_id, a.residue_seq,
            a.position, a.occupancy, a.b_factor, a.element, a.insertion_code,
        ))
        last_serial = max(last_serial, a.serial)
    lines.append("TER")
    for k, sphere in enumerate(pocket.spheres, start=1):
        lines.append(format_atom_record(
            "HETATM", last_serial + k, SPHERE_RESNAME, SPHERE_RESNAME, "X", pocket.id,
            sphere.center, 1.0, round(sphere.radius, 2), SPHERE_ELEMENT,
        ))
    lines.append("END")
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path, content: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from exc


_DESCRIPTOR_HEADER = (
    "pocket", "n_spheres", "density", "polarity_score", "charge_score",
    "size_bin", "hydrophilicity_bin", "shape", "centroid_x", "centroid_y", "centroid_z",
    "n_lining_atoms", "matched_ligands",
)


def _pocket_row(p: "Pocket") -> str:
    d = p.descriptors
    shape = p.shape.value if p.shape is not None else "NA"
    ligs = ",".join(format_ligand_key(k) for k in p.matched_ligands) or "-"
    cx, cy, cz = p.centroid
    return "\t".join([
        str(p.id), str(d.n_spheres), f"{d.density:.3f}", str(d.polarity_score),
        str(d.charge_score), str(d.normalized_size_bin), str(d.hydrophilicity_bin),
        shape, f"{cx:.3f}", f"{cy:.3f}", f"{cz:.3f}", str(len(p.lining_atoms)), ligs,
    ])


def write_info_txt(structure: Structure, pockets, path, config: Optional[dict] = None) -> None:
    """Write the per-structure report: active and non-active sites and ligands.

    ``config`` (flat mapping) is echoed into the header so that a run can be
    reproduced from its outputs.
    """
    active = [p for p in pockets if p.is_active]
    inactive = [p for p in pockets if not p.is_active]
    hits: dict[LigandKey, list[int]] = {}
    for p in pockets:
        for key in p.matched_ligands:
            hits.setdefault(key, []).append(p.id)

    out = [f"# cavdetect report for {structure.id}"]
    if config:
        for key in sorted(config):
            out.append(f"# config\t{key}\t{config[key]}")
    out.append(f"# protein_atoms\t{len(structure.protein_atoms)}")
    out.append(f"# ligands\t{len(structure.ligands)}")
    out.append(f"# pockets\t{len(pockets)}")
    out.append("")
    for title, group in (("ACTIVE SITES", active), ("NON-ACTIVE SITES", inactive)):
        out.append(f"[{title}]\t{len(group)}")
        out.append("\t".join(_DESCRIPTOR_HEADER))
        out.extend(_pocket_row(p) for p in group)
        out.append("")
    act = [lig for lig in structure.ligands if lig.key in hits]
    non = [lig for lig in structure.ligands if lig.key not in hits]
    out.append(f"[ACTIVE LIGANDS]\t{len(act)}")
    out.append("residue_name\tchain_id\tresidue_seq\tn_atoms\tpockets")
    for lig in act:
        name, chain, seq = lig.key
        out.append(f"{name}\t{chain}\t{seq}\t{len(lig.atoms)}\t{','.join(map(str, hits[lig.key]))}")
    out.append("")
    out.append(f"[NON-ACTIVE LIGANDS]\t{len(non)}")
    out.append("residue_name\tchain_id\tresidue_seq\tn_atoms")
    for lig in non:
        name, chain, seq = lig.key
        out.append(f"{name}\t{chain}\t{seq}\t{len(lig.atoms)}")
    _write_text(path, "\n".join(out) + "\n")
