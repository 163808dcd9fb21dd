"""Matroid surgery on geometric lattices.

Modular cuts, truncation, single-element extensions, pushouts along a
common modular flat, symmetric extensions, and bounded enumeration of
modular extensions up to base-fixing isomorphism.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .canon import canonical_form
from .errors import (
    DegenerateCut,
    InvalidExtension,
    MismatchedBase,
    NotAModularCut,
    NotGeometric,
    NotModular,
    NotModularCoatom,
)
from .lattice import (
    Embedding,
    GeometricLattice,
    _mask_atoms,
    build_boolean,
    direct_product,
    identity_embedding,
    interval,
)
from .modularity import is_modular


# ----------------------------------------------------------------------
# modular cuts and single-element extensions


@dataclass(frozen=True)
class ModularCut:
    lattice: GeometricLattice
    members: frozenset  # flat indices, upward closed

    def __contains__(self, f):
        return f in self.members


def is_modular_cut(lat: GeometricLattice, members) -> tuple:
    """Check the two closure conditions; returns (ok, violating_pair)."""
    members = frozenset(members)
    ups = lat.upsets()
    for f in members:
        up = ups[f]
        g = 0
        while up:
            low = up & -up
            g = low.bit_length() - 1
            if g not in members:
                return False, (f, g)
            up ^= low
    for f1, f2 in itertools.combinations(sorted(members), 2):
        m = lat.meet(f1, f2)
        if m in members:
            continue
        if lat.ranks[f1] + lat.ranks[f2] == lat.ranks[m] + lat.ranks[lat.join(f1, f2)]:
            return False, (f1, f2)
    return True, None


def modular_cut(lat: GeometricLattice, members) -> ModularCut:
    ok, pair = is_modular_cut(lat, members)
    if not ok:
        raise NotAModularCut("not a modular cut",
                             witness=tuple(lat.atoms_of(f) for f in pair))
    return ModularCut(lat, frozenset(members))


def truncation(lat: GeometricLattice, cut: ModularCut, *, name=None) -> GeometricLattice:
    """Delete the flats outside the cut that are covered by a member of it."""
    if cut.lattice is not lat:
        raise NotAModularCut("cut belongs to a different lattice")
    covers_up = lat.covers_up()
    keep = []
    for f in range(lat.n_flats):
        if f in cut.members or not any(c in cut.members for c in covers_up[f]):
            keep.append(lat.flat_masks[f])
    return GeometricLattice(lat.atoms, keep, atom_supports=lat.atom_supports,
                            validate=True, name=name)


def single_element_extension(lat: GeometricLattice, cut: ModularCut, label: str):
    """Add one atom whose containing flats are dictated by the cut.

    Equivalent to truncating the product with a two-element chain along the
    shifted cut.  Returns (extension_lattice, embedding).
    """
    if cut.lattice is not lat:
        raise NotAModularCut("cut belongs to a different lattice")
    for f in cut.members:
        if lat.ranks[f] <= 1:
            raise DegenerateCut(f"cut contains {lat.atoms_of(f)!r}")
    if label in lat.atom_index:
        raise DegenerateCut(f"label {label!r} already used")
    masks, ranks = _extended_masks(lat, cut.members)
    ext = GeometricLattice(lat.atoms + (label,), masks, ranks=ranks,
                           atom_supports=lat.atom_supports + (frozenset([label]),),
                           validate=False)
    emb = Embedding(lat, ext, tuple(range(lat.n_atoms)))
    return ext, emb


def _extended_masks(lat: GeometricLattice, members):
    """Flat masks and ranks of the single-element extension (new atom last)."""
    ebit = 1 << lat.n_atoms
    covers_up = lat.covers_up()
    masks = {}
    for f, m in enumerate(lat.flat_masks):
        r = lat.ranks[f]
        if f in members:
            masks[m | ebit] = r
        else:
            masks[m] = r
            if not any(c in members for c in covers_up[f]):
                masks[m | ebit] = r + 1
    return masks, masks


# ----------------------------------------------------------------------
# modular extensions


@dataclass(frozen=True)
class ModularExtension:
    """A lattice containing the base as the lower interval of a modular flat."""

    embedding: Embedding
    top: int  # flat index of the image of the base's top

    @classmethod
    def build(cls, embedding: Embedding, *, require_modular=True):
        ext = cls(embedding, embedding.flat_image(embedding.source.top))
        ext.validate(require_modular=require_modular)
        return ext

    @property
    def base(self):
        return self.embedding.source

    @property
    def lat(self):
        return self.embedding.target

    def validate(self, *, require_modular=True):
        emb, lat = self.embedding, self.embedding.target
        top_mask = lat.flat_masks[self.top]
        if emb.atom_image_mask() != top_mask:
            raise InvalidExtension("image top is not spanned by the image atoms")
        below = sum(1 for m in lat.flat_masks if m | top_mask == top_mask)
        if below != emb.source.n_flats:
            raise InvalidExtension("base is not the full lower interval")
        if require_modular and not is_modular(lat, self.top):
            raise NotModular("image of the base top is not modular",
                             witness=lat.atoms_of(self.top))
        return self

    def new_atom_labels(self):
        image = set(self.embedding.atom_map)
        return tuple(a for i, a in enumerate(self.lat.atoms) if i not in image)


def identity_extension(lat: GeometricLattice) -> ModularExtension:
    return ModularExtension(identity_embedding(lat), lat.top)


# ----------------------------------------------------------------------
# pushout (generalized parallel connection)


def _same_base(l1: GeometricLattice, l2: GeometricLattice) -> bool:
    return l1 is l2 or (l1.atoms == l2.atoms and l1.flat_masks == l2.flat_masks)


def pushout(ext1: ModularExtension, ext2: ModularExtension, *, name=None):
    """Glue two extensions along their common base.

    At least one of the two must be modular; the result is returned as a
    modular extension of the base together with the two side embeddings.
    """
    base = ext1.base
    if not _same_base(base, ext2.base):
        raise MismatchedBase("extensions have different sources")
    mod1 = is_modular(ext1.lat, ext1.top)
    mod2 = is_modular(ext2.lat, ext2.top)
    if not (mod1 or mod2):
        raise NotModular("neither side of the pushout is modular")

    e1, e2 = ext1.lat, ext2.lat
    im1, im2 = ext1.embedding.atom_map, ext2.embedding.atom_map
    img_mask1 = ext1.embedding.atom_image_mask()
    img_mask2 = ext2.embedding.atom_image_mask()
    new1 = [i for i in range(e1.n_atoms) if not img_mask1 >> i & 1]
    new2 = [i for i in range(e2.n_atoms) if not img_mask2 >> i & 1]

    nb = base.n_atoms
    labels = list(base.atoms)
    supports = list(base.atom_supports)
    used = set(labels)
    # new atoms are genuinely new elements of the glued lattice, so their
    # supports restart at their own (possibly freshened) labels
    pos1 = {}
    for k, i in enumerate(new1):
        lab = e1.atoms[i]
        if lab in used:
            lab = _fresh_label(lab, used)
        used.add(lab)
        labels.append(lab)
        supports.append(frozenset([lab]))
        pos1[i] = nb + k
    pos2 = {}
    for k, i in enumerate(new2):
        lab = e2.atoms[i]
        if lab in used:
            lab = _fresh_label(lab, used)
        used.add(lab)
        labels.append(lab)
        supports.append(frozenset([lab]))
        pos2[i] = nb + len(new1) + k
    for k, i in enumerate(im1):
        pos1[i] = k
    for k, i in enumerate(im2):
        pos2[i] = k

    def translate(lat_from, pos):
        out = []
        for m in lat_from.flat_masks:
            nm = 0
            for i in _mask_atoms(m):
                nm |= 1 << pos[i]
            out.append(nm)
        return out

    tr1 = translate(e1, pos1)
    tr2 = translate(e2, pos2)
    base_all = (1 << nb) - 1

    parts1 = {}
    for f1 in range(e1.n_flats):
        parts1.setdefault(tr1[f1] & base_all, []).append(f1)
    masks = {}
    for f2 in range(e2.n_flats):
        bp = tr2[f2] & base_all
        for f1 in parts1.get(bp, ()):
            m = tr1[f1] | tr2[f2]
            r = e1.ranks[f1] + e2.ranks[f2] - base.rank_of_mask(bp)
            masks[m] = r
    lat = GeometricLattice(tuple(labels), masks.keys(), ranks=masks,
                           atom_supports=supports, validate=False, name=name)
    emb12 = Embedding(base, lat, tuple(range(nb)))
    result = ModularExtension.build(emb12)
    emb_e1 = Embedding(e1, lat, tuple(pos1[i] for i in range(e1.n_atoms)))
    emb_e2 = Embedding(e2, lat, tuple(pos2[i] for i in range(e2.n_atoms)))
    return result, emb_e1, emb_e2


def _fresh_label(lab, used):
    k = 2
    while f"{lab}#{k}" in used:
        k += 1
    return f"{lab}#{k}"


# ----------------------------------------------------------------------
# symmetric extension


@dataclass(frozen=True)
class SymmetricExtensionResult:
    extension: ModularExtension     # the base embedded in the final lattice
    glued: GeometricLattice         # the pushout before adding the new atom
    cut_members: frozenset          # the modular cut used
    new_atom: str
    degenerate: bool


def symmetric_extension(base: GeometricLattice, ext: ModularExtension,
                        coatom: int, label: str) -> SymmetricExtensionResult:
    """Glue the base with an extension over a modular coatom, then add one
    atom identifying the two copies of each atom outside the coatom.

    ``ext`` is normally a modular extension of ``base``; passing an
    extension of the coatom's lower interval instead produces the flagged
    degenerate case (an empty cut, hence a free extension).
    """
    if base.ranks[coatom] != base.rank - 1 or not is_modular(base, coatom):
        raise NotModularCoatom(f"{base.atoms_of(coatom)!r} is not a modular coatom")
    sub, to_parent, _ = interval(base, base.bottom, coatom)
    sub_atom_positions = [base.atom_index[a] for a in sub.atoms]

    left = ModularExtension.build(
        Embedding(sub, base, tuple(sub_atom_positions)), require_modular=True)

    over_base = _same_base(ext.base, base)
    if over_base:
        emb = ext.embedding
        right_map = tuple(emb.atom_map[p] for p in sub_atom_positions)
        right = ModularExtension.build(Embedding(sub, ext.lat, right_map))
    elif _same_base(ext.base, sub):
        right = ModularExtension.build(
            Embedding(sub, ext.lat, ext.embedding.atom_map))
    else:
        raise MismatchedBase("extension is neither over the base nor the interval")

    glued, emb_left, emb_right = pushout(left, right)
    P = glued.target if isinstance(glued, Embedding) else glued.lat

    members = set()
    if over_base:
        pairs = []
        for a in range(base.n_atoms):
            if base.flat_masks[coatom] >> a & 1:
                continue
            copy1 = emb_left.atom_map[a]
            copy2 = emb_right.atom_map[ext.embedding.atom_map[a]]
            if copy1 == copy2:
                continue
            pairs.append((1 << copy1) | (1 << copy2))
        for f, m in enumerate(P.flat_masks):
            if any(m & p == p for p in pairs):
                members.add(f)
    degenerate = not members

    if degenerate:
        b1 = build_boolean(1, atoms=(label,))
        final = direct_product(P, b1)
        emb_final = Embedding(base, final, emb_left.atom_map)
    else:
        cut = modular_cut(P, members)
        final, emb_p = single_element_extension(P, cut, label)
        emb_final = Embedding(base, final,
                              tuple(emb_p.atom_map[emb_left.atom_map[a]]
                                    for a in range(base.n_atoms)))
    result = ModularExtension.build(emb_final)
    return SymmetricExtensionResult(result, P, frozenset(members), label, degenerate)


# ----------------------------------------------------------------------
# bounded enumeration of modular extensions


class CatalogEntry:
    """A canonical modular extension of a fixed base lattice.

    The lattice atoms are the base atoms (in base order) followed by the
    new atoms, so the embedding is positional identity on the base prefix.
    """

    __slots__ = ("lat", "n_base", "level", "extra_rank", "certificate",
                 "top", "automorphisms", "has_odd_aut", "_above_top",
                 "_rel4_dead", "_new_mask")

    def __init__(self, lat, n_base, level, extra_rank, certificate, top,
                 automorphisms):
        self.lat = lat
        self.n_base = n_base
        self.level = level
        self.extra_rank = extra_rank
        self.certificate = certificate
        self.top = top
        self.automorphisms = automorphisms
        parities = set()
        idx_new = list(range(n_base, lat.n_atoms))
        for a in automorphisms:
            perm = [a[i] for i in idx_new]
            parities.add(_parity(perm, idx_new))
        self.has_odd_aut = -1 in parities
        self._above_top = None
        self._rel4_dead = None
        self._new_mask = ((1 << lat.n_atoms) - 1) ^ ((1 << n_base) - 1)

    @property
    def new_mask(self):
        return self._new_mask

    @property
    def base_mask(self):
        return (1 << self.n_base) - 1

    def flats_above_top(self):
        """(atom_mask, is_modular) for every flat above the base image."""
        if self._above_top is None:
            lat = self.lat
            tm = lat.flat_masks[self.top]
            out = []
            for f, m in enumerate(lat.flat_masks):
                if m & tm == tm:
                    out.append((m, is_modular(lat, f)))
            self._above_top = tuple(out)
        return self._above_top

    def rel4_dead(self):
        """True when the lattice splits with a factor missing the base."""
        if self._rel4_dead is None:
            base_mask = self.base_mask
            self._rel4_dead = any(s & base_mask == 0
                                  for s in self.lat.factor_supports())
        return self._rel4_dead

    def as_modular_extension(self, base):
        emb = Embedding(base, self.lat, tuple(range(self.n_base)))
        return ModularExtension(emb, self.top)


def _parity(perm_values, domain):
    """Parity (+1/-1) of the permutation sending domain[i] to perm_values[i]."""
    pos = {v: i for i, v in enumerate(domain)}
    seen = [False] * len(domain)
    sign = 1
    for i in range(len(domain)):
        if seen[i]:
            continue
        j = i
        clen = 0
        while not seen[j]:
            seen[j] = True
            j = pos[perm_values[j]]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


def _canonical_entry(lat, base, level, extra_rank, fixed_labels=None):
    """Relabel an extension lattice so the base prefix is fixed and the new
    atoms are in canonical order, named e1, e2, ... (skipping used labels).

    ``fixed_labels`` names the images of the base atoms inside ``lat`` in
    base order; by default the base atom labels themselves.
    """
    cf = canonical_form(lat, fixed_atoms=fixed_labels or base.atoms)
    perm = cf.perm
    n = lat.n_atoms
    inv = [0] * n
    for i, p in enumerate(perm):
        inv[p] = i
    used = set(base.atoms)
    labels = list(base.atoms)
    supports = [base.atom_supports[i] for i in range(base.n_atoms)]
    counter = 1
    for p in range(base.n_atoms, n):
        while f"e{counter}" in used:
            counter += 1
        lab = f"e{counter}"
        counter += 1
        used.add(lab)
        labels.append(lab)
        supports.append(frozenset([lab]))
    ranks = {}
    masks = []
    for f, m in enumerate(lat.flat_masks):
        nm = 0
        for i in _mask_atoms(m):
            nm |= 1 << perm[i]
        masks.append(nm)
        ranks[nm] = lat.ranks[f]
    canon_lat = GeometricLattice(tuple(labels), masks, ranks=ranks,
                                 atom_supports=supports, validate=False)
    auts = tuple(tuple(perm[a[inv[i]]] for i in range(n))
                 for a in cf.automorphisms)
    top = canon_lat.closure((1 << base.n_atoms) - 1)
    entry = CatalogEntry(canon_lat, base.n_atoms, level, extra_rank,
                         cf.certificate, top, auts)
    return entry, perm


def _valid_cuts(entry: CatalogEntry, antichain_cap: int):
    """All modular cuts of the entry's lattice generated by at most
    ``antichain_cap`` flats that yield a child extension of the same base.

    A cut is usable iff it avoids the base image downward (so the child is
    still an extension) and, for every flat kept free of the new atom,
    joining with the base top stays outside the cut (the exact condition
    for the base top to stay modular in the child).
    """
    lat = entry.lat
    fi = entry.top
    ranks = lat.ranks
    masks = lat.flat_masks
    fi_mask = masks[fi]
    ups = lat.upsets()
    covers_up = lat.covers_up()
    n_f = lat.n_flats

    candidates = [g for g in range(n_f)
                  if ranks[g] >= 2 and masks[g] | fi_mask != fi_mask]

    def close(gens):
        """Smallest modular cut containing the generators, or None if it
        would contain an atom, the bottom, or anything below the base top."""
        mem_mask = 0
        members = []
        queue = []
        def add(x):
            nonlocal mem_mask
            up = ups[x] & ~mem_mask
            while up:
                low = up & -up
                y = low.bit_length() - 1
                if ranks[y] <= 1 or masks[y] | fi_mask == fi_mask:
                    return False
                members.append(y)
                queue.append(y)
                up ^= low
            mem_mask |= ups[x]
            return True
        for g in gens:
            if not add(g):
                return None
        while queue:
            y = queue.pop()
            for z in list(members):
                if z == y:
                    continue
                if mem_mask >> z & 1 == 0:
                    continue
                my, mz = masks[y], masks[z]
                if my | mz == mz or mz | my == my:
                    continue
                m = lat.meet(y, z)
                if mem_mask >> m & 1:
                    continue
                if ranks[y] + ranks[z] == ranks[m] + ranks[lat.join(y, z)]:
                    if ranks[m] <= 1 or masks[m] | fi_mask == fi_mask:
                        return None
                    if not add(m):
                        return None
        return frozenset(members)

    def child_keeps_base_modular(members):
        for g in range(n_f):
            if g in members:
                continue
            if any(c in members for c in covers_up[g]):
                continue
            if lat.join(fi, g) in members:
                return False
        return True

    cuts = {}
    singles = {}
    for g in candidates:
        m = close((g,))
        singles[g] = m
        if m is not None:
            cuts.setdefault(m, (g,))
    pairs = {}
    if antichain_cap >= 2:
        for a, b in itertools.combinations(candidates, 2):
            if singles[a] is None or singles[b] is None:
                continue
            ma, mb = masks[a], masks[b]
            if ma | mb == mb or mb | ma == ma:
                continue
            if b in singles[a] or a in singles[b]:
                continue
            m = close((a, b))
            pairs[(a, b)] = m
            if m is not None:
                cuts.setdefault(m, (a, b))
    if antichain_cap >= 3:
        for (a, b), mab in pairs.items():
            if mab is None:
                continue
            for c in candidates:
                if c <= b or c in mab or singles[c] is None:
                    continue
                mc, ma, mb = masks[c], masks[a], masks[b]
                if ma | mc in (mc, ma) or mb | mc in (mc, mb):
                    continue
                if ma | mc == mc or mc | ma == ma:
                    continue
                if mb | mc == mc or mc | mb == mb:
                    continue
                m = close((a, b, c))
                if m is not None:
                    cuts.setdefault(m, (a, b, c))
    return [m for m in cuts if child_keeps_base_modular(m)]


def _child_lattice(entry: CatalogEntry, members, label):
    lat = entry.lat
    masks, ranks = _extended_masks(lat, frozenset(members))
    return GeometricLattice(lat.atoms + (label,), masks.keys(), ranks=masks,
                            atom_supports=lat.atom_supports + (frozenset([label]),),
                            validate=False)


_CATALOG_CACHE = {}


def catalog(base: GeometricLattice, max_new_atoms: int, max_extra_rank: int,
            antichain_cap: int = 3):
    """All modular extensions of the base within the bounds, canonical and
    deduplicated, ordered by (new-atom count, certificate)."""
    if base.is_trivial:
        raise NotGeometric("extensions of the one-point lattice are not defined")
    key = (id(base), max_new_atoms, max_extra_rank, antichain_cap)
    hit = _CATALOG_CACHE.get(key)
    if hit is not None:
        return hit
    root, _ = _canonical_entry(base, base, 0, 0)
    levels = [{root.certificate: root}]
    for level in range(max_new_atoms):
        nxt = {}
        for entry in levels[level].values():
            children = []
            if entry.extra_rank < max_extra_rank:
                children.append(frozenset())
            children.extend(_valid_cuts(entry, antichain_cap))
            for members in children:
                if members:
                    child = _child_lattice(entry, members, "@new")
                    extra = entry.extra_rank
                else:
                    child = direct_product(
                        entry.lat, build_boolean(1, atoms=("@new",)))
                    extra = entry.extra_rank + 1
                cand, _ = _canonical_entry(child, base, level + 1, extra)
                if cand.certificate not in nxt:
                    nxt[cand.certificate] = cand
        levels.append(nxt)
    out = []
    for lvl in levels:
        out.extend(lvl[c] for c in sorted(lvl))
    _CATALOG_CACHE[key] = out
    return out


def enumerate_modular_extensions(base: GeometricLattice, max_new_atoms: int,
                                 max_extra_rank: int, antichain_cap: int = 3):
    """Public wrapper around the catalog returning ModularExtension values."""
    return [e.as_modular_extension(base)
            for e in catalog(base, max_new_atoms, max_extra_rank, antichain_cap)]
