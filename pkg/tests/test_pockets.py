import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cavdetect.clustering import NOISE, ClusterLabeling
from cavdetect.pdb_io import Atom
from cavdetect.pockets import (AtomCloud, CriteriaMode, Shape, SiteCriteria, assemble_pockets,
                               bin_descriptors, classify_shape, classify_sites,
                               compute_density, compute_polarity_charge, count_mouths, elongation,
                               exposed_spheres, mutual_overlap_match, pocketpicker_match,
                               ray_directions)
from oracles import brute_force_exposed, pairwise_mean_distance
from synthetic import (channel_fixture, cleft_fixture, ligand, pocket_from, sphere, tunnel_fixture,
                       void_fixture)


def residue_atom(i, resn, seq, chain="A"):
    return Atom(serial=i + 1, name="CA", element="C", residue_name=resn, chain_id=chain, residue_seq=seq,
                insertion_code=None, position=(float(i), 0.0, 0.0), is_hetero=False, vdw_radius=1.7)


# assembly

def test_assemble_orders_by_size():
    spheres = [sphere((i, 0, 0), (i, i + 1, i + 2, i + 3)) for i in range(9)]
    lab = ClusterLabeling(np.array([1, 0, 1, 0, 0, 0, 1, 0, NOISE]))
    pockets = assemble_pockets(lab, spheres)
    assert [(p.id, len(p.spheres), p.cluster_id) for p in pockets] == [(1, 5, 0), (2, 3, 1)]
    assert pockets[1].centroid == pytest.approx((8 / 3, 0, 0))
    assert pockets[1].lining_atoms == frozenset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9})


def test_assemble_ties_by_cluster_id():
    spheres = [sphere((i, 0, 0)) for i in range(4)]
    pockets = assemble_pockets(ClusterLabeling(np.array([1, 1, 0, 0])), spheres)
    assert [p.cluster_id for p in pockets] == [0, 1]


def test_assemble_all_noise():
    assert assemble_pockets(ClusterLabeling(np.array([NOISE] * 3)), [sphere((0, 0, 0))] * 3) == []


# binding-site criteria

@pytest.mark.parametrize("z,expected", [(3.9, True), (4.0, True), (4.1, False)])
def test_pocketpicker_boundary(z, expected):
    p = pocket_from([(0, 0, 0)])
    assert pocketpicker_match(p, ligand([(0, 0, z), (0, 0, 10)]), 4.0) is expected


def test_mutual_overlap_fractions():
    p = pocket_from([(0, 0, 0)])
    two_of_four = ligand([(0, 0, 1), (0, 3.0, 0), (10, 0, 0), (11, 0, 0)])
    one_of_four = ligand([(0, 0, 1), (3.01, 0, 0), (10, 0, 0), (11, 0, 0)])
    assert mutual_overlap_match(p, two_of_four, 3.0, 0.5)
    assert not mutual_overlap_match(p, one_of_four, 3.0, 0.5)
    assert mutual_overlap_match(p, ligand([(2.9, 0, 0)]), 3.0, 0.5)


def test_mutual_overlap_counts_any_sphere():
    p = pocket_from([(0, 0, 0), (20, 0, 0)])
    assert mutual_overlap_match(p, ligand([(1, 0, 0), (19, 0, 0)]), 3.0, 1.0)


def test_modes_combine_criteria():
    # centroid near the ligand, sphere centres far from it
    lig = ligand([(0, 0, 1)])
    expected = {CriteriaMode.POCKETPICKER: True, CriteriaMode.MUTUAL_OVERLAP: False,
                CriteriaMode.EITHER: True, CriteriaMode.BOTH: False}
    for mode, want in expected.items():
        q = pocket_from([(-6, 0, 0), (6, 0, 0)])
        _, active, non = classify_sites([q], [lig], SiteCriteria(mode=mode))
        assert q.is_active is want
        assert (lig.key in active) is want and (lig.key in non) is not want


def test_shared_site_and_non_binding_site():
    p1 = pocket_from([(0, 0, 0)], pid=1)
    p2 = pocket_from([(30, 0, 0)], pid=2)
    a = ligand([(0, 0, 1)], ("ATP", "A", 1))
    b = ligand([(1, 0, 0)], ("MG", "A", 2))
    _, active, non = classify_sites([p1, p2], [a, b], SiteCriteria())
    assert p1.matched_ligands == [a.key, b.key]
    assert not p2.is_active
    assert active == {a.key, b.key} and non == set()


def test_no_ligands():
    p = pocket_from([(0, 0, 0)])
    _, active, non = classify_sites([p], [], SiteCriteria())
    assert not p.is_active and active == set() and non == set()


@pytest.mark.parametrize("kwargs", [dict(pp_dist=0), dict(mo_dist=-1), dict(mo_fraction=0),
                                    dict(mo_fraction=1.5), dict(mode="sometimes")])
def test_invalid_criteria(kwargs):
    with pytest.raises(ValueError):
        SiteCriteria(**kwargs)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(CriteriaMode)))
def test_matches_recomputable_from_coordinates(seed, mode):
    rng = np.random.default_rng(seed)
    pockets = [pocket_from(rng.uniform(0, 15, (int(rng.integers(1, 6)), 3)), pid=i + 1) for i in range(3)]
    ligs = [ligand(rng.uniform(0, 15, (int(rng.integers(1, 5)), 3)), ("L", "A", i)) for i in range(3)]
    crit = SiteCriteria(mode=mode)
    classify_sites(pockets, ligs, crit)
    for p in pockets:
        for lig in ligs:
            c = np.asarray(p.centroid)
            pp = min(np.linalg.norm(np.asarray(a.position) - c) for a in lig.atoms) <= 4.0
            near = sum(min(np.linalg.norm(np.asarray(a.position) - np.asarray(s.center)) for s in p.spheres)
                       <= 3.0 for a in lig.atoms)
            mo = near >= 0.5 * len(lig.atoms)
            want = {CriteriaMode.POCKETPICKER: pp, CriteriaMode.MUTUAL_OVERLAP: mo,
                    CriteriaMode.EITHER: pp or mo, CriteriaMode.BOTH: pp and mo}[mode]
            assert (lig.key in p.matched_ligands) == want


# descriptors

def test_density_examples():
    assert compute_density(pocket_from([(0, 0, 0), (4, 0, 0)])) == pytest.approx(4.0)
    assert compute_density(pocket_from([(0, 0, 0), (1, 0, 0), (2, 0, 0)])) == pytest.approx(4 / 3)
    assert compute_density(pocket_from([(0, 0, 0)])) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 200))
def test_density_matches_pairwise_mean(seed, n):
    pts = np.random.default_rng(seed).uniform(-10, 10, (n, 3))
    assert compute_density(pocket_from(pts)) == pytest.approx(pairwise_mean_distance(pts), abs=1e-9)


@pytest.mark.parametrize("residues,expected", [
    (["SER", "ASP", "LEU"], (2, -1)),
    (["ALA", "VAL", "ALA", "VAL"], (0, 0)),
    (["LYS", "ARG", "GLU"], (3, 1)),
    (["HEM", "MSE"], (0, 0)),
])
def test_polarity_charge(residues, expected):
    atoms = [residue_atom(i, r, i + 1) for i, r in enumerate(residues)]
    p = pocket_from([(0, 0, 0)], atoms=[tuple(range(len(atoms)))])
    assert compute_polarity_charge(p, atoms) == expected


def test_polarity_counts_residues_not_atoms():
    atoms = [residue_atom(i, "ASP", 5) for i in range(4)] + [residue_atom(4, "ASP", 5, chain="B")]
    p = pocket_from([(0, 0, 0), (1, 0, 0)], atoms=[(0, 1, 2, 3), (1, 2, 3, 4)])
    assert compute_polarity_charge(p, atoms) == (2, -2)


def _binned(values, attr):
    pockets = [pocket_from([(i, 0, 0)]) for i in range(len(values))]
    for p, v in zip(pockets, values):
        setattr(p.descriptors, attr, v)
    bin_descriptors(pockets)
    return pockets


def test_size_bins_extremes():
    assert [p.descriptors.normalized_size_bin for p in _binned([2, 12], "n_spheres")] == [1, 6]


def test_hydrophilicity_bins():
    ps = _binned([0, 2, 4], "polarity_score")
    assert [p.descriptors.hydrophilicity_bin for p in ps] == [1, 3, 5]
    ps = _binned([3, 3, 3], "polarity_score")
    assert [p.descriptors.hydrophilicity_bin for p in ps] == [1, 1, 1]


@given(st.lists(st.integers(0, 1000), min_size=1, max_size=40))
def test_bins_match_ceiling_rule(values):
    ps = _binned(values, "n_spheres")
    lo, hi = min(values), max(values)
    for p, v in zip(ps, values):
        want = 1 if hi == lo else min(6, max(1, int(np.ceil(6 * (v - lo) / (hi - lo) - 1e-12))))
        assert p.descriptors.normalized_size_bin == want


# shape

def test_ray_directions():
    d = ray_directions()
    assert d.shape == (26, 3)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert len({tuple(np.sign(v).astype(int)) for v in d}) == 26


def test_elongation():
    assert elongation([(0, 0, 0)]) == 1.0
    line = [(i, 0, 0) for i in range(5)]
    assert elongation(line) > 1e3
    cube = list(itertools.product([0, 1], repeat=3))
    assert elongation(cube) == pytest.approx(1.0)


def test_count_mouths_linkage():
    pts = [(0, 0, 0), (1, 0, 0), (20, 0, 0), (5, 5, 5)]
    assert count_mouths(pts, [True, True, True, False], 9.0) == 2
    assert count_mouths(pts, [True, True, True, False], 20.0) == 1
    assert count_mouths(pts, [False] * 4, 9.0) == 0
    assert count_mouths([(0, 0, 0), (0, 0, 0)], [True, True], 1.0) == 1


def _cloud(atoms):
    return AtomCloud(atoms, np.full(len(atoms), 1.7), 1.4)


SHAPE_FIXTURES = [
    (channel_fixture, Shape.CHANNEL),
    (tunnel_fixture, Shape.TUNNEL),
    (cleft_fixture, Shape.CLEFT),
    (void_fixture, Shape.VOID),
]


@pytest.mark.parametrize("build,expected", SHAPE_FIXTURES, ids=[s.value for _, s in SHAPE_FIXTURES])
def test_shape_fixtures(build, expected):
    atoms, centers = build()
    assert classify_shape(pocket_from(centers), _cloud(atoms)) is expected


@pytest.mark.parametrize("build", [cleft_fixture, channel_fixture])
def test_exposure_matches_brute_force(build):
    atoms, centers = build()
    flags = exposed_spheres(centers, _cloud(atoms))
    radii = np.full(len(atoms), 3.1)
    assert flags.tolist() == [brute_force_exposed(c, atoms, radii) > 0 for c in centers]


def test_empty_cloud_is_exposed():
    assert exposed_spheres([(0, 0, 0)], AtomCloud(np.zeros((0, 3)), [], 1.4)).tolist() == [True]


def test_shape_from_atom_list_uses_probe():
    atoms_xyz, centers = void_fixture()
    atoms = [Atom(serial=i + 1, name="CA", element="C", residue_name="ALA", chain_id="A",
                  residue_seq=i + 1, insertion_code=None, position=tuple(map(float, xyz)),
                  is_hetero=False, vdw_radius=1.7) for i, xyz in enumerate(atoms_xyz)]
    assert classify_shape(pocket_from(centers), atoms) is Shape.VOID
    # with no probe and tiny radii the shell leaks
    tiny = [Atom(**{**a.__dict__, "vdw_radius": 0.2}) for a in atoms]
    assert classify_shape(pocket_from(centers), tiny, probe=0.0) is not Shape.VOID


@pytest.mark.parametrize("build,expected", SHAPE_FIXTURES, ids=[s.value for _, s in SHAPE_FIXTURES])
def test_shape_stable_under_rigid_motion(build, expected):
    atoms, centers = build()
    rng = np.random.default_rng(42)
    trials = 40
    same = 0
    for k in range(trials):
        rot = Rotation.random(random_state=1000 + k).as_matrix()
        shift = rng.uniform(-30, 30, 3)
        moved = pocket_from(centers @ rot.T + shift)
        if classify_shape(moved, _cloud(atoms @ rot.T + shift)) is expected:
            same += 1
        # rotating the ray grid with the structure must agree exactly
        assert classify_shape(moved, _cloud(atoms @ rot.T + shift), rotation=rot) is expected
    assert same / trials >= 0.95
