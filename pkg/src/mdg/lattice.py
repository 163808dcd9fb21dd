"""Finite geometric lattices stored as explicit families of flats.

A lattice is kept as a list of atom labels plus the list of its flats,
each flat being a bitmask over atom positions.  Flats are identified by
their index in that list.  Joins are computed by closure (smallest flat
containing a union), meets by intersection of atom sets; both are exact
for geometric lattices.

All lattice values are immutable after construction and safe to share.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import (
    DuplicateAtom,
    DuplicateEdge,
    ForeignFlat,
    NotALattice,
    NotComparable,
    NotGeometric,
    SelfLoop,
)


def _popcount(x: int) -> int:
    return x.bit_count()


def _mask_atoms(mask: int):
    """Yield the set bit positions of ``mask``."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class GeometricLattice:
    """A finite geometric lattice over an ordered list of atom labels."""

    __slots__ = (
        "atoms",
        "atom_index",
        "atom_supports",
        "flat_masks",
        "flat_index",
        "ranks",
        "by_rank",
        "rank",
        "bottom",
        "top",
        "_join_cache",
        "_covers_down",
        "_covers_up",
        "_upsets",
        "_factor_supports",
        "_circuits",
        "_modular_cache",
        "name",
    )

    def __init__(self, atoms, flat_masks, *, ranks=None, atom_supports=None,
                 validate=True, name=None):
        atoms = tuple(atoms)
        if len(set(atoms)) != len(atoms):
            raise DuplicateAtom(f"duplicate atom label in {atoms!r}")
        self.atoms = atoms
        self.atom_index = {a: i for i, a in enumerate(atoms)}
        if atom_supports is None:
            atom_supports = tuple(frozenset([a]) for a in atoms)
        else:
            atom_supports = tuple(frozenset(s) for s in atom_supports)
        self.atom_supports = atom_supports
        self.name = name

        masks = sorted(set(int(m) for m in flat_masks),
                       key=lambda m: (_popcount(m), m))
        self.flat_masks = tuple(masks)
        self.flat_index = {m: i for i, m in enumerate(masks)}
        self._join_cache = {}
        self._covers_down = None
        self._covers_up = None
        self._upsets = None
        self._factor_supports = None
        self._circuits = None
        self._modular_cache = {}

        n = len(atoms)
        full = (1 << n) - 1
        if 0 not in self.flat_index:
            raise NotGeometric("the empty flat (bottom) is missing")
        if full not in self.flat_index:
            maximal = [m for m in masks
                       if not any(m != m2 and m | m2 == m2 for m2 in masks)]
            raise NotALattice("no unique top flat",
                              witness=tuple(self._labels(m) for m in maximal[:2]))
        self.bottom = self.flat_index[0]
        self.top = self.flat_index[full]

        if ranks is not None:
            self.ranks = tuple(ranks[m] for m in masks)
        else:
            self.ranks = self._compute_ranks(validate=validate)
        self.rank = self.ranks[self.top]
        by_rank = [[] for _ in range(self.rank + 1)]
        for i, r in enumerate(self.ranks):
            by_rank[r].append(i)
        self.by_rank = tuple(tuple(level) for level in by_rank)

        if validate:
            self._validate()

    # ------------------------------------------------------------------
    # construction helpers

    def _labels(self, mask: int):
        return tuple(self.atoms[i] for i in _mask_atoms(mask))

    def _compute_ranks(self, validate: bool):
        masks = self.flat_masks
        n_f = len(masks)
        lower = [[] for _ in range(n_f)]
        for i, m in enumerate(masks):
            for j in range(n_f):
                mj = masks[j]
                if mj != m and mj | m == m:
                    lower[i].append(j)
        ranks = [0] * n_f
        order = sorted(range(n_f), key=lambda i: _popcount(masks[i]))
        for i in order:
            if not lower[i]:
                ranks[i] = 0
                continue
            covers = [j for j in lower[i]
                      if not any(k != j and masks[j] | masks[k] == masks[k]
                                 for k in lower[i])]
            values = {ranks[j] for j in covers}
            if validate and len(values) != 1:
                raise NotGeometric("not well-ranked", witness=self._labels(masks[i]))
            ranks[i] = max(values) + 1
        return tuple(ranks)

    def _validate(self):
        masks = self.flat_masks
        index = self.flat_index
        n = len(self.atoms)
        for i in range(n):
            if (1 << i) not in index:
                raise NotGeometric("atom is not a closed flat", witness=self.atoms[i])
            if self.ranks[index[1 << i]] != 1:
                raise NotGeometric("singleton flat has rank != 1", witness=self.atoms[i])
        for a, b in itertools.combinations(range(len(masks)), 2):
            inter = masks[a] & masks[b]
            if inter not in index:
                below = [m for m in masks if m | inter == inter]
                maximal = [m for m in below
                           if not any(m != m2 and m | m2 == m2 for m2 in below)]
                wit = (self._labels(masks[a]), self._labels(masks[b]))
                if len(maximal) != 1:
                    raise NotALattice("pair lacks an infimum", witness=wit)
                raise NotGeometric("flats are not intersection-closed", witness=wit)
        # cover form of semimodularity, equivalent for finite-length lattices
        covers_up = self.covers_up()
        for z in range(len(masks)):
            ups = covers_up[z]
            for x, y in itertools.combinations(ups, 2):
                j = self.join(x, y)
                if self.ranks[j] != self.ranks[z] + 2:
                    raise NotGeometric(
                        "semimodularity fails on a cover pair",
                        witness=(self._labels(masks[x]), self._labels(masks[y])))

    # ------------------------------------------------------------------
    # basic queries

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_flats(self) -> int:
        return len(self.flat_masks)

    @property
    def is_trivial(self) -> bool:
        return len(self.flat_masks) == 1

    def flat_of_atoms(self, labels) -> int:
        """Flat index of an exact atom set given by labels."""
        mask = 0
        for lab in labels:
            if lab not in self.atom_index:
                raise ForeignFlat(f"unknown atom {lab!r}")
            mask |= 1 << self.atom_index[lab]
        if mask not in self.flat_index:
            raise ForeignFlat(f"{sorted(labels)!r} is not a flat")
        return self.flat_index[mask]

    def atoms_of(self, f: int):
        return self._labels(self.flat_masks[f])

    def atom_flat(self, label: str) -> int:
        return self.flat_index[1 << self.atom_index[label]]

    def support_of(self, f: int) -> frozenset:
        """Underlying root-atom support of a flat (used by interval lattices)."""
        out = set()
        for i in _mask_atoms(self.flat_masks[f]):
            out |= self.atom_supports[i]
        return frozenset(out)

    def closure(self, mask: int) -> int:
        idx = self.flat_index.get(mask)
        if idx is not None:
            return idx
        for level in self.by_rank:
            for i in level:
                if self.flat_masks[i] & mask == mask:
                    return i
        raise ForeignFlat("atom mask outside the lattice")

    def join(self, a: int, b: int) -> int:
        if a == b:
            return a
        key = (a, b) if a < b else (b, a)
        cached = self._join_cache.get(key)
        if cached is not None:
            return cached
        u = self.flat_masks[a] | self.flat_masks[b]
        idx = self.flat_index.get(u)
        if idx is None:
            lo = max(self.ranks[a], self.ranks[b]) + 1
            idx = None
            for r in range(lo, self.rank + 1):
                for i in self.by_rank[r]:
                    if self.flat_masks[i] & u == u:
                        idx = i
                        break
                if idx is not None:
                    break
        self._join_cache[key] = idx
        return idx

    def join_atoms(self, mask: int) -> int:
        return self.closure(mask)

    def meet(self, a: int, b: int) -> int:
        inter = self.flat_masks[a] & self.flat_masks[b]
        idx = self.flat_index.get(inter)
        if idx is not None:
            return idx
        # legal lattices are intersection-closed; keep a correct fallback
        below = [i for i, m in enumerate(self.flat_masks) if m | inter == inter]
        best = max(below, key=lambda i: self.ranks[i])
        return best

    def leq(self, a: int, b: int) -> bool:
        return self.flat_masks[a] | self.flat_masks[b] == self.flat_masks[b]

    def covers_down(self):
        if self._covers_down is None:
            self._build_covers()
        return self._covers_down

    def covers_up(self):
        if self._covers_up is None:
            self._build_covers()
        return self._covers_up

    def _build_covers(self):
        n_f = len(self.flat_masks)
        down = [[] for _ in range(n_f)]
        up = [[] for _ in range(n_f)]
        for i in range(n_f):
            mi, ri = self.flat_masks[i], self.ranks[i]
            if ri == 0:
                continue
            for j in self.by_rank[ri - 1]:
                if self.flat_masks[j] & mi == self.flat_masks[j]:
                    down[i].append(j)
                    up[j].append(i)
        self._covers_down = tuple(tuple(x) for x in down)
        self._covers_up = tuple(tuple(x) for x in up)

    def upsets(self):
        """Per flat, the bitmask over flat indices of all flats above it."""
        if self._upsets is None:
            ups = []
            for i, m in enumerate(self.flat_masks):
                acc = 0
                for j, mj in enumerate(self.flat_masks):
                    if mj & m == m:
                        acc |= 1 << j
                ups.append(acc)
            self._upsets = tuple(ups)
        return self._upsets

    # ------------------------------------------------------------------
    # structure

    def factor_supports(self):
        """Atom masks of the irreducible factors (singleton list if irreducible)."""
        if self._factor_supports is not None:
            return self._factor_supports
        full = (1 << self.n_atoms) - 1
        separators = []
        for i, m in enumerate(self.flat_masks):
            if m == 0 or m == full:
                continue
            comp = full & ~m
            j = self.flat_index.get(comp)
            if j is None:
                continue
            if self.ranks[i] + self.ranks[j] == self.rank:
                separators.append(m)
        comps = []
        for a in range(self.n_atoms):
            c = full
            bit = 1 << a
            for s in separators:
                if s & bit:
                    c &= s
            comps.append(c)
        supports = sorted(set(comps))
        if not supports:
            supports = [full] if self.n_atoms else [0]
        self._factor_supports = tuple(supports)
        return self._factor_supports

    def circuits_masks(self):
        """All circuits as atom masks (minimal dependent sets)."""
        if self._circuits is not None:
            return self._circuits
        found = []
        for f, m in enumerate(self.flat_masks):
            r = self.ranks[f]
            members = list(_mask_atoms(m))
            if len(members) < r + 1 or r + 1 < 2:
                continue
            for sub in itertools.combinations(members, r + 1):
                mask = 0
                for x in sub:
                    mask |= 1 << x
                if self.closure(mask) != f:
                    continue
                if all(self.ranks[self.closure(mask & ~(1 << x))] == r
                       for x in sub):
                    found.append(mask)
        self._circuits = tuple(sorted(found, key=lambda m: (_popcount(m), m)))
        return self._circuits

    def rank_of_mask(self, mask: int) -> int:
        return self.ranks[self.closure(mask)]

    def __repr__(self):
        nm = self.name or "lattice"
        return (f"GeometricLattice({nm}: {self.n_atoms} atoms, "
                f"rank {self.rank}, {self.n_flats} flats)")


@dataclass(frozen=True)
class Embedding:
    """An injective, join-compatible, atom-preserving map between lattices.

    Determined by the atom map; images of flats are closures of atom images.
    """

    source: GeometricLattice
    target: GeometricLattice
    atom_map: tuple  # source atom position -> target atom position

    def __post_init__(self):
        if len(set(self.atom_map)) != len(self.atom_map):
            raise DuplicateAtom("embedding atom map is not injective")
        if len(self.atom_map) != self.source.n_atoms:
            raise ForeignFlat("embedding atom map has the wrong length")

    def image_mask(self, fidx: int) -> int:
        m = self.source.flat_masks[fidx]
        out = 0
        for i in _mask_atoms(m):
            out |= 1 << self.atom_map[i]
        return out

    def flat_image(self, fidx: int) -> int:
        return self.target.closure(self.image_mask(fidx))

    def flat_preimage(self, gidx: int) -> int:
        """Preimage of a target flat lying inside the image interval."""
        gm = self.target.flat_masks[gidx]
        m = 0
        for i, t in enumerate(self.atom_map):
            if gm >> t & 1:
                m |= 1 << i
        idx = self.source.flat_index.get(m)
        if idx is None:
            raise ForeignFlat("target flat is not in the embedded image")
        return idx

    def atom_image_mask(self) -> int:
        out = 0
        for t in self.atom_map:
            out |= 1 << t
        return out

    def validate(self):
        src, tgt = self.source, self.target
        for a, b in itertools.combinations(range(src.n_flats), 2):
            j = src.join(a, b)
            if tgt.join(self.flat_image(a), self.flat_image(b)) != self.flat_image(j):
                raise NotGeometric("embedding is not join-compatible",
                                   witness=(src.atoms_of(a), src.atoms_of(b)))
        return self


def identity_embedding(lat: GeometricLattice) -> Embedding:
    return Embedding(lat, lat, tuple(range(lat.n_atoms)))


# ----------------------------------------------------------------------
# builders


def build_from_flats(atoms, flats, *, validate=True, name=None) -> GeometricLattice:
    """Build a lattice from an explicit list of flats given as atom-label sets."""
    atoms = tuple(atoms)
    index = {a: i for i, a in enumerate(atoms)}
    masks = []
    for flat in flats:
        m = 0
        for lab in flat:
            if lab not in index:
                raise ForeignFlat(f"flat mentions unknown atom {lab!r}")
            m |= 1 << index[lab]
        masks.append(m)
    return GeometricLattice(atoms, masks, validate=validate, name=name)


def _set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1:]
        yield [[first]] + part


def build_from_graph(edges, *, name=None) -> GeometricLattice:
    """Geometric lattice of a simple graph; atoms are edges labeled "u-v".

    A flat is an edge set closed under the rule: if it contains a path
    between the endpoints of an edge, it contains that edge.  Flats
    correspond to partitions of the vertex set into connected blocks.
    """
    canon = []
    seen = set()
    vertices = set()
    for u, v in edges:
        u, v = str(u), str(v)
        if u == v:
            raise SelfLoop(f"self loop at {u!r}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise DuplicateEdge(f"duplicate edge {key!r}")
        seen.add(key)
        canon.append(key)
        vertices.update(key)
    atoms = tuple(sorted(f"{u}-{v}" for u, v in canon))
    edge_of_atom = {f"{u}-{v}": (u, v) for u, v in canon}
    adj = {v: set() for v in vertices}
    for u, v in canon:
        adj[u].add(v)
        adj[v].add(u)

    verts = sorted(vertices)
    masks = set()
    ranks = {}
    nv = len(verts)
    for part in _set_partitions(verts):
        ok = True
        for block in part:
            bs = set(block)
            if len(block) == 1:
                continue
            # connectivity of the induced subgraph on the block
            seen_b = {block[0]}
            stack = [block[0]]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y in bs and y not in seen_b:
                        seen_b.add(y)
                        stack.append(y)
            if len(seen_b) != len(block):
                ok = False
                break
        if not ok:
            continue
        blocks = [set(b) for b in part]
        m = 0
        for i, a in enumerate(atoms):
            u, v = edge_of_atom[a]
            if any(u in b and v in b for b in blocks):
                m |= 1 << i
        if m not in masks:
            masks.add(m)
            ranks[m] = nv - len(part)
    lat = GeometricLattice(atoms, sorted(masks), ranks=ranks, validate=False,
                           name=name)
    return lat


def build_partition_lattice(n: int, *, name=None) -> GeometricLattice:
    """Partition lattice of {1..n} as the graphic lattice of the complete graph."""
    if n < 2:
        raise NotGeometric("partition lattice needs n >= 2")
    edges = [(str(i), str(j)) for i in range(1, n + 1)
             for j in range(i + 1, n + 1)]
    return build_from_graph(edges, name=name or f"pi{n}")


def build_boolean(n: int = None, atoms=None, *, name=None) -> GeometricLattice:
    """Boolean lattice: the free matroid, every subset of atoms is a flat."""
    if atoms is None:
        atoms = tuple(f"x{i+1}" for i in range(n))
    atoms = tuple(atoms)
    masks = range(1 << len(atoms))
    ranks = {m: _popcount(m) for m in masks}
    return GeometricLattice(atoms, masks, ranks=ranks, validate=False,
                            name=name or f"b{len(atoms)}")


# ----------------------------------------------------------------------
# operations


def join(lat: GeometricLattice, f1: int, f2: int) -> int:
    _check_flats(lat, f1, f2)
    return lat.join(f1, f2)


def meet(lat: GeometricLattice, f1: int, f2: int) -> int:
    _check_flats(lat, f1, f2)
    return lat.meet(f1, f2)


def rank(lat: GeometricLattice, f: int) -> int:
    _check_flats(lat, f)
    return lat.ranks[f]


def _check_flats(lat, *flats):
    for f in flats:
        if not isinstance(f, int) or not 0 <= f < lat.n_flats:
            raise ForeignFlat(f"flat index {f!r} outside the lattice")


def restriction(lat: GeometricLattice, atom_labels, *, name=None):
    """Sublattice of joins of the given atoms, with the inclusion embedding."""
    chosen = [a for a in lat.atoms if a in set(atom_labels)]
    for a in atom_labels:
        if a not in lat.atom_index:
            raise ForeignFlat(f"unknown atom {a!r}")
    positions = [lat.atom_index[a] for a in chosen]
    sel_mask = 0
    for p in positions:
        sel_mask |= 1 << p
    pos_of = {p: i for i, p in enumerate(positions)}

    masks = {}
    for f, m in enumerate(lat.flat_masks):
        t = m & sel_mask
        nm = 0
        for p in _mask_atoms(t):
            nm |= 1 << pos_of[p]
        r = lat.rank_of_mask(t)
        prev = masks.get(nm)
        if prev is None or r < prev:
            masks[nm] = r
    sub = GeometricLattice(tuple(chosen), masks.keys(), ranks=masks,
                           atom_supports=tuple(lat.atom_supports[p] for p in positions),
                           validate=False, name=name)
    emb = Embedding(sub, lat, tuple(positions))
    return sub, emb


def interval(lat: GeometricLattice, f1: int, f2: int):
    """The interval [f1, f2] as a geometric lattice.

    Returns (sub, to_parent, from_parent): `to_parent[i]` is the parent flat
    of interval flat i, `from_parent` maps parent flat indices back.
    Interval atoms are the covers of f1 inside the interval; an atom is
    labeled by its root-atom support above f1 (a bare atom label when the
    difference is a single root atom).
    """
    _check_flats(lat, f1, f2)
    if not lat.leq(f1, f2):
        raise NotComparable("interval endpoints are not comparable")
    m1, m2 = lat.flat_masks[f1], lat.flat_masks[f2]
    members = [f for f, m in enumerate(lat.flat_masks)
               if m & m1 == m1 and m | m2 == m2]
    r1 = lat.ranks[f1]
    atoms_parent = [f for f in members if lat.ranks[f] == r1 + 1]
    atoms_parent.sort(key=lambda f: lat.flat_masks[f])
    bottom_support = lat.support_of(f1)

    labels = []
    supports = []
    for f in atoms_parent:
        diff = lat.support_of(f) - bottom_support
        lab = ",".join(sorted(diff))
        if len(diff) > 1:
            lab = f"({lab})"
        labels.append(lab)
        supports.append(diff)
    order = sorted(range(len(labels)), key=lambda i: labels[i])
    atoms_parent = [atoms_parent[i] for i in order]
    labels = [labels[i] for i in order]
    supports = [supports[i] for i in order]

    masks = {}
    ranks = {}
    to_parent = {}
    for f in members:
        fm = lat.flat_masks[f]
        nm = 0
        for i, af in enumerate(atoms_parent):
            if lat.flat_masks[af] | fm == fm:
                nm |= 1 << i
        masks[nm] = f
        ranks[nm] = lat.ranks[f] - r1
    sub = GeometricLattice(tuple(labels), masks.keys(), ranks=ranks,
                           atom_supports=supports, validate=False)
    to_parent_list = [masks[sub.flat_masks[i]] for i in range(sub.n_flats)]
    from_parent = {p: i for i, p in enumerate(to_parent_list)}
    return sub, to_parent_list, from_parent


def direct_product(l1: GeometricLattice, l2: GeometricLattice, *, name=None):
    if set(l1.atoms) & set(l2.atoms):
        raise DuplicateAtom("factors share atom labels")
    n1 = l1.n_atoms
    masks = {}
    for a, ma in enumerate(l1.flat_masks):
        ra = l1.ranks[a]
        for b, mb in enumerate(l2.flat_masks):
            masks[ma | (mb << n1)] = ra + l2.ranks[b]
    return GeometricLattice(l1.atoms + l2.atoms, masks.keys(), ranks=masks,
                            atom_supports=l1.atom_supports + l2.atom_supports,
                            validate=False, name=name)


def irreducible_factors(lat: GeometricLattice):
    """Unique factorization into irreducible lattices.

    Returns (factors, atom_partition) where atom_partition lists, per factor,
    the tuple of atom labels supporting it.
    """
    if lat.is_trivial:
        raise NotGeometric("the one-point lattice has no factorization")
    supports = lat.factor_supports()
    factors = []
    partition = []
    for s in supports:
        labels = [lat.atoms[i] for i in _mask_atoms(s)]
        sub, _ = restriction(lat, labels)
        factors.append(sub)
        partition.append(tuple(labels))
        # rank additivity certificate of the split
        assert lat.rank_of_mask(s) + lat.rank_of_mask(((1 << lat.n_atoms) - 1) & ~s) \
            == lat.rank or len(supports) == 1
    return factors, partition


def circuits(lat: GeometricLattice):
    """All circuits as sorted tuples of atom labels."""
    return [tuple(sorted(lat._labels(m))) for m in lat.circuits_masks()]
