import itertools

import pytest

from conftest import assert_geometric_bruteforce, brute_closure, flats_of
from mdg.canon import canonical_form, certificates_equal
from mdg.corpus import seven_point_plane
from mdg.errors import DegenerateCut, MismatchedBase, NotAModularCut, \
    NotGeometric, NotModularCoatom
from mdg.extensions import (
    ModularCut,
    ModularExtension,
    catalog,
    enumerate_modular_extensions,
    identity_extension,
    is_modular_cut,
    modular_cut,
    pushout,
    single_element_extension,
    symmetric_extension,
    truncation,
)
from mdg.lattice import (
    Embedding,
    build_boolean,
    build_from_flats,
    direct_product,
    interval,
    restriction,
)
from mdg.modularity import is_modular


def test_modular_cut_examples(pi3, pi4):
    ok, _ = is_modular_cut(pi3, [pi3.top])
    assert ok
    # principal cuts are always modular cuts
    for lat in (pi3, pi4):
        for f in range(lat.n_flats):
            up = [g for g in range(lat.n_flats) if lat.leq(f, g)]
            ok, _ = is_modular_cut(lat, up)
            assert ok
    # two atoms of the triangle form a modular pair with meet outside
    a12 = pi3.flat_of_atoms(["1-2"])
    a13 = pi3.flat_of_atoms(["1-3"])
    ok, pair = is_modular_cut(pi3, [a12, a13, pi3.top])
    assert not ok and set(pair) == {a12, a13}
    with pytest.raises(NotAModularCut):
        modular_cut(pi3, [a12, a13, pi3.top])


def test_truncation_boolean_corank(b3):
    t = truncation(b3, modular_cut(b3, [b3.top]))
    assert t.rank == 2 and t.n_atoms == 3
    # all coatoms removed: the rank-2 uniform lattice
    assert t.n_flats == 5


def test_truncation_empty_cut_identity(pi3):
    t = truncation(pi3, modular_cut(pi3, []))
    assert t.flat_masks == pi3.flat_masks


def test_truncation_can_reject_non_simple(pi3):
    # collapsing the triangle's coatoms makes all atoms parallel
    with pytest.raises(NotGeometric):
        truncation(pi3, modular_cut(pi3, [pi3.top]))


def test_single_element_extension_u24(pi3):
    ext, emb = single_element_extension(pi3, modular_cut(pi3, [pi3.top]), "e")
    assert ext.rank == 2 and ext.n_atoms == 4
    # brute closure oracle: every pair of atoms spans the top
    fl = flats_of(ext)
    assert_geometric_bruteforce(fl)
    for a, b in itertools.combinations(ext.atoms, 2):
        assert brute_closure(fl, frozenset((a, b))) == frozenset(ext.atoms)
    # iterating gives the rank-2 uniform lattice on 5 atoms
    ext2, _ = single_element_extension(ext, modular_cut(ext, [ext.top]), "f")
    assert ext2.rank == 2 and ext2.n_atoms == 5 and ext2.n_flats == 7


def test_single_element_extension_matches_product_truncation(pi3, pi4):
    # the direct construction agrees with truncating the product with a
    # two-element chain along the shifted cut
    for lat in (pi3, pi4):
        f = lat.by_rank[2][0]
        cut_members = [g for g in range(lat.n_flats) if lat.leq(f, g)]
        ext, _ = single_element_extension(lat, modular_cut(lat, cut_members),
                                          "e")
        chain = build_boolean(1, atoms=("e",))
        prod = direct_product(lat, chain)
        ebit = 1 << prod.atom_index["e"]
        shifted = [g for g, m in enumerate(prod.flat_masks)
                   if m & ebit and (m ^ ebit) in lat.flat_index
                   and lat.flat_index[m ^ ebit] in cut_members]
        t = truncation(prod, modular_cut(prod, shifted))
        assert t.flat_masks == ext.flat_masks


def test_single_element_extension_free_is_product(pi3):
    ext, _ = single_element_extension(pi3, modular_cut(pi3, []), "e")
    prod = direct_product(pi3, build_boolean(1, atoms=("e",)))
    assert ext.flat_masks == prod.flat_masks


def test_single_element_extension_degenerate(pi3):
    atom_cut = [pi3.flat_of_atoms(["1-2"]), pi3.top]
    with pytest.raises(DegenerateCut):
        single_element_extension(pi3, modular_cut(pi3, atom_cut), "e")


def test_extension_validation (pi3, pi4):
    emb = Embedding(pi3, pi4, tuple(pi4.atom_index[a] for a in pi3.atoms))
    ext = ModularExtension.build(emb)
    assert ext.top == pi4.flat_of_atoms(["1-2", "1-3", "2-3"])
    assert ext.new_atom_labels() == ("1-4", "2-4", "3-4")


def test_pushout_plane7(plane7):
    r1, _ = restriction(plane7, ["a", "b", "c", "d"])
    r2, _ = restriction(plane7, ["a", "b'", "c'", "d'"])
    base, _ = restriction(r1, ["a"])
    ext1 = ModularExtension.build(Embedding(base, r1, (r1.atom_index["a"],)))
    ext2 = ModularExtension.build(Embedding(base, r2, (r2.atom_index["a"],)))
    result, e1, e2 = pushout(ext1, ext2)
    assert certificates_equal(result.lat, plane7)
    # atoms identified per the atom-set description of the gluing
    assert set(result.lat.atoms) == {"a", "b", "c", "d", "b'", "c'", "d'"}
    e1.validate()
    e2.validate()


def test_pushout_unit_law(pi3, pi4):
    emb = Embedding(pi3, pi4, tuple(pi4.atom_index[a] for a in pi3.atoms))
    ext = ModularExtension.build(emb)
    ident = identity_extension(pi3)
    result, e1, e2 = pushout(ext, ident)
    image_labels = [result.lat.atoms[e1.atom_map[i]]
                    for i in range(pi4.n_atoms)]
    assert certificates_equal(result.lat, pi4, image_labels, list(pi4.atoms))


def test_pushout_rank_law_exhaustive(pi3, pi4):
    emb = Embedding(pi3, pi4, tuple(pi4.atom_index[a] for a in pi3.atoms))
    ext1 = ModularExtension.build(emb)
    ext2 = identity_extension(pi3)
    free, femb = single_element_extension(pi3, modular_cut(pi3, []), "z")
    ext3 = ModularExtension.build(femb)
    for a, b in [(ext1, ext1), (ext1, ext3), (ext3, ext1)]:
        result, e1, e2 = pushout(a, b)
        P = result.lat
        base = a.base
        base_all = (1 << base.n_atoms) - 1
        for f, m in enumerate(P.flat_masks):
            # rank law: rank(f) = rank of the two sides minus the base part
            a_part = a.lat.closure(_pull(P, a.lat, e1, m))
            b_part = b.lat.closure(_pull(P, b.lat, e2, m))
            common = base.rank_of_mask(m & base_all)
            assert P.ranks[f] == a.lat.ranks[a_part] + b.lat.ranks[b_part] \
                - common


def _pull(P, side, emb, mask):
    out = 0
    for i, t in enumerate(emb.atom_map):
        if mask >> t & 1:
            out |= 1 << i
    return out


def test_pushout_commutative_associative(pi3, pi4):
    emb = Embedding(pi3, pi4, tuple(pi4.atom_index[a] for a in pi3.atoms))
    ext1 = ModularExtension.build(emb)
    free, femb = single_element_extension(pi3, modular_cut(pi3, []), "z")
    ext2 = ModularExtension.build(femb)
    ab, _, _ = pushout(ext1, ext2)
    ba, _, _ = pushout(ext2, ext1)
    assert certificates_equal(ab.lat, ba.lat, list(pi3.atoms), list(pi3.atoms))
    ab_c, _, _ = pushout(ab, ext1)
    a_bc, _, _ = pushout(ext1, pushout(ext2, ext1)[0])
    assert certificates_equal(ab_c.lat, a_bc.lat,
                              list(pi3.atoms), list(pi3.atoms))


def test_pushout_restriction_compat(pi3, pi4):
    # restriction of the pushout to a subset containing the base atoms is
    # the pushout of the restrictions
    emb = Embedding(pi3, pi4, tuple(pi4.atom_index[a] for a in pi3.atoms))
    ext1 = ModularExtension.build(emb)
    result, e1, e2 = pushout(ext1, ext1)
    P = result.lat
    keep = [a for a in P.atoms if a != P.atoms[-1]]
    sub, _ = restriction(P, keep)
    side1 = [P.atoms[e1.atom_map[i]] for i in range(pi4.n_atoms)]
    r1set = [a for a in side1 if a in keep]
    sub1, _ = restriction(pi4, [pi4.atoms[i] for i, lab in
                                zip(range(pi4.n_atoms), side1)
                                if lab in keep])
    ext1r = ModularExtension.build(
        Embedding(pi3, sub1, tuple(sub1.atom_index[a] for a in pi3.atoms)))
    side2 = [P.atoms[e2.atom_map[i]] for i in range(pi4.n_atoms)]
    sub2, _ = restriction(pi4, [pi4.atoms[i] for i, lab in
                                zip(range(pi4.n_atoms), side2)
                                if lab in keep])
    ext2r = ModularExtension.build(
        Embedding(pi3, sub2, tuple(sub2.atom_index[a] for a in pi3.atoms)))
    expected, _, _ = pushout(ext1r, ext2r)
    assert certificates_equal(sub, expected.lat,
                              list(pi3.atoms), list(pi3.atoms))


def test_pushout_modularity_transport(pi3, pi4):
    # a modular flat above the base top on one side stays modular as the
    # pair with the other side's top
    emb = Embedding(pi3, pi4, tuple(pi4.atom_index[a] for a in pi3.atoms))
    ext1 = ModularExtension.build(emb)
    result, e1, e2 = pushout(ext1, ext1)
    P = result.lat
    for f in range(pi4.n_flats):
        if not pi4.leq(ext1.top, f) or not is_modular(pi4, f):
            continue
        image_mask = 0
        for i in range(pi4.n_atoms):
            if pi4.flat_masks[f] >> i & 1:
                image_mask |= 1 << e1.atom_map[i]
        other_top = e2.atom_image_mask()
        target = P.closure(image_mask | other_top)
        assert is_modular(P, target)


def test_pushout_mismatched_base(pi3, b2):
    with pytest.raises(MismatchedBase):
        pushout(identity_extension(pi3), identity_extension(b2))


def test_symmetric_extension_two_triangles(pi3, pi4):
    res = symmetric_extension(pi3, identity_extension(pi3),
                              pi3.flat_of_atoms(["1-2"]), "w")
    assert not res.degenerate
    assert certificates_equal(res.extension.lat, pi4)
    res.extension.validate()


def test_symmetric_extension_plane8(plane8):
    line4, _ = restriction(seven_point_plane(), ["a", "b", "c", "d"])
    res = symmetric_extension(line4, identity_extension(line4),
                              line4.flat_of_atoms(["a"]), "e")
    assert not res.degenerate
    assert certificates_equal(res.extension.lat, plane8)


def test_symmetric_extension_degenerate(pi3):
    coatom = pi3.flat_of_atoms(["1-2"])
    sub, _, _ = interval(pi3, pi3.bottom, coatom)
    res = symmetric_extension(pi3, identity_extension(sub), coatom, "w")
    assert res.degenerate
    assert res.cut_members == frozenset()
    prod = direct_product(pi3, build_boolean(1, atoms=("w",)))
    assert certificates_equal(res.extension.lat, prod)


def test_symmetric_extension_rejects_nonmodular_coatom(c4):
    bad = next(f for f in c4.by_rank[c4.rank - 1]
               if not is_modular(c4, f))
    with pytest.raises(NotModularCoatom):
        symmetric_extension(c4, identity_extension(c4), bad, "w")


def test_enumerate_bounds_zero(pi3):
    exts = enumerate_modular_extensions(pi3, 0, 0)
    assert len(exts) == 1
    assert exts[0].lat.flat_masks == pi3.flat_masks


def test_enumerate_entries_are_valid(pi3):
    for ext in enumerate_modular_extensions(pi3, 3, 1):
        ext.validate()
        assert is_modular(ext.lat, ext.top)


def test_enumerate_contains_trident_extension(pi3, pi4):
    want = canonical_form(pi4, fixed_atoms=["1-2", "1-3", "2-3"]).certificate
    cat = catalog(pi3, 3, 1)
    assert any(e.certificate == want for e in cat)


def test_enumerate_closed_under_deletion(pi3):
    cat = catalog(pi3, 3, 2)
    certs = {e.certificate for e in cat}
    for e in cat:
        for newpos in range(e.n_base, e.lat.n_atoms):
            keep = [a for i, a in enumerate(e.lat.atoms) if i != newpos]
            sub, _ = restriction(e.lat, keep)
            cf = canonical_form(sub, fixed_atoms=pi3.atoms)
            assert cf.certificate in certs


def test_enumerate_complete_against_brute_catalog(pi2):
    """Exhaustive oracle: every geometric lattice on the base atom plus up
    to two new atoms that contains the base as the interval below a
    modular atom, enumerated from scratch over all flat families."""
    base_atom = pi2.atoms[0]
    atom_sets = [
        (base_atom, "x"),
        (base_atom, "x", "y"),
    ]
    found = set()
    for atoms in atom_sets:
        n = len(atoms)
        subsets = [frozenset(s) for r in range(n + 1)
                   for s in itertools.combinations(atoms, r)]
        singles = [frozenset([a]) for a in atoms]
        full = frozenset(atoms)
        empty = frozenset()
        optional = [s for s in subsets
                    if s not in (empty, full) and len(s) >= 2]
        for bits in range(1 << len(optional)):
            fam = {empty, full, *singles}
            for i, s in enumerate(optional):
                if bits >> i & 1:
                    fam.add(s)
            try:
                ranks = assert_geometric_bruteforce(fam)
            except AssertionError:
                continue
            # base must be the full lower interval of its closure
            below = [f for f in fam if f <= frozenset([base_atom])]
            if len(below) != 2:
                continue
            lat = build_from_flats(atoms, fam, validate=False)
            f = lat.flat_of_atoms([base_atom])
            if not is_modular(lat, f):
                continue
            cf = canonical_form(lat, fixed_atoms=[base_atom])
            found.add(cf.certificate)
    got = {e.certificate for e in catalog(pi2, 2, 2)
           if e.lat.n_atoms >= 2}
    assert found == got


def test_enumerate_u_line_family(pi2):
    # over a single atom the rank-2 extensions are the multi-point lines
    cat = [e for e in catalog(pi2, 3, 1) if e.extra_rank == 1]
    sizes = sorted(e.lat.n_atoms for e in cat)
    assert sizes == [2, 3, 4]  # free atom, 3- and 4-point lines


def test_single_element_then_delete_returns_base(pi3, b3, pi4):
    # adding an atom along every principal cut (and the free cut) and then
    # deleting it restores the base exactly
    for lat in (pi3, b3, pi4):
        cuts = [[]]
        for f in range(lat.n_flats):
            if lat.ranks[f] >= 2:
                cuts.append([g for g in range(lat.n_flats) if lat.leq(f, g)])
        assert len(cuts) > 1
        for members in cuts:
            ext, emb = single_element_extension(
                lat, modular_cut(lat, members), "@e")
            sub, _ = restriction(ext, lat.atoms)
            assert sub.flat_masks == lat.flat_masks


def test_pushout_interval_splitting(pi3, pi4):
    # the upper interval of a pushout at a pair splits as the pushout of
    # the upper intervals over the base's upper interval
    emb = Embedding(pi3, pi4, tuple(pi4.atom_index[a] for a in pi3.atoms))
    ext = ModularExtension.build(emb)
    result, e1, e2 = pushout(ext, ext)
    P = result.lat
    base_all = (1 << pi3.n_atoms) - 1
    checked = 0
    for f in range(P.n_flats):
        m = P.flat_masks[f]
        bp = m & base_all
        if P.ranks[f] == 0 or P.ranks[f] >= P.rank - 1:
            continue
        upper, _, _ = interval(P, f, P.top)
        f1 = pi4.closure(_pull(P, pi4, e1, m))
        f2 = pi4.closure(_pull(P, pi4, e2, m))
        up1, _, _ = interval(pi4, f1, pi4.top)
        up2, _, _ = interval(pi4, f2, pi4.top)
        base_up, _, _ = interval(pi3, pi3.closure(bp), pi3.top)
        if base_up.is_trivial:
            continue
        # glue the two upper intervals over the shared base interval
        m1 = tuple(up1.atom_index[a] for a in base_up.atoms
                   if a in up1.atom_index)
        if len(m1) != base_up.n_atoms:
            continue  # atom labels must align for a direct comparison
        m2 = tuple(up2.atom_index[a] for a in base_up.atoms
                   if a in up2.atom_index)
        if len(m2) != base_up.n_atoms:
            continue
        try:
            g1 = ModularExtension.build(Embedding(base_up, up1, m1),
                                        require_modular=False)
            g2 = ModularExtension.build(Embedding(base_up, up2, m2))
        except Exception:
            continue
        glued, _, _ = pushout(g1, g2)
        if certificates_equal(glued.lat, upper):
            checked += 1
    assert checked >= 3
