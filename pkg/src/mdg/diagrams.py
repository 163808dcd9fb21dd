"""The differential graded algebra of modular diagrams over a base lattice.

A diagram is a modular extension of the base together with an ordered word
of its atoms.  Diagrams are stored normalized: the extension is restricted
to the atoms appearing in the base image or the word, relabeled
canonically with the base atoms pinned, and the word is sorted with a
sign.  The vanishing rules applied during normalization are: repeated
letters; the word and base not spanning the top; the extension splitting
off a factor missing the base; a modular flat above the base image with
exactly two word atoms outside it; a flat above the base image with
exactly one word atom outside it; an automorphism of the extension fixing
the base and acting oddly on the new atoms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    ImproperFlat,
    MismatchedBase,
    NotContractible,
    NotGeometric,
    NotIso,
)
from .extensions import CatalogEntry, ModularExtension, _canonical_entry, catalog
from .lattice import Embedding, GeometricLattice, _mask_atoms, interval, restriction
from .os_algebra import OSElement, reduce_to_nbc, _word_sign


ZERO = None  # sentinel for normalized-to-zero


def _lattice_sig(lat: GeometricLattice):
    return (lat.atoms, lat.flat_masks)


@dataclass(frozen=True)
class Diagram:
    """A normalized nonzero modular diagram (canonical representative)."""

    base_sig_hash: int
    entry: CatalogEntry
    word: tuple        # sorted canonical atom positions
    degree: int
    grading: int       # flat index in the base lattice

    @property
    def key(self):
        return (self.entry.certificate, self.word)

    def __hash__(self):
        return hash((self.base_sig_hash, self.entry.certificate, self.word))

    def __eq__(self, other):
        return (isinstance(other, Diagram)
                and self.base_sig_hash == other.base_sig_hash
                and self.entry.certificate == other.entry.certificate
                and self.word == other.word)

    def word_labels(self):
        return tuple(self.entry.lat.atoms[i] for i in self.word)

    def describe(self):
        lat = self.entry.lat
        return {
            "atoms": list(lat.atoms),
            "new_atoms": list(lat.atoms[self.entry.n_base:]),
            "word": list(self.word_labels()),
            "degree": self.degree,
        }


class DiagramVector:
    """A rational combination of normalized diagrams over one base."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra, coeffs=None):
        self.algebra = algebra
        self.coeffs = dict(coeffs or {})

    def add_term(self, sign, diagram, coeff=1):
        if diagram is ZERO or sign == 0:
            return self
        c = self.coeffs.get(diagram, Fraction(0)) + Fraction(sign) * Fraction(coeff)
        if c:
            self.coeffs[diagram] = c
        else:
            self.coeffs.pop(diagram, None)
        return self

    def __add__(self, other):
        out = DiagramVector(self.algebra, self.coeffs)
        for d, c in other.coeffs.items():
            out.add_term(1, d, c)
        return out

    def scale(self, c):
        c = Fraction(c)
        return DiagramVector(self.algebra,
                             {d: v * c for d, v in self.coeffs.items() if v * c})

    def __sub__(self, other):
        return self + other.scale(-1)

    @property
    def is_zero(self):
        return not self.coeffs

    def blocks(self):
        """Split into homogeneous (grading, degree) components."""
        out = {}
        for d, c in self.coeffs.items():
            key = (d.grading, d.degree)
            out.setdefault(key, DiagramVector(self.algebra)).add_term(1, d, c)
        return out

    def __eq__(self, other):
        return isinstance(other, DiagramVector) and self.coeffs == other.coeffs

    def __repr__(self):
        terms = [f"{c}*{d.describe()['word']}" for d, c in self.coeffs.items()]
        return "DiagramVector(" + " + ".join(terms) + ")"


class TensorVector:
    """Rational combination of pairs of diagrams over two interval bases."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        self.coeffs = dict(coeffs or {})

    def add_term(self, coeff, low, high):
        if low is ZERO or high is ZERO or coeff == 0:
            return self
        key = (low, high)
        c = self.coeffs.get(key, Fraction(0)) + Fraction(coeff)
        if c:
            self.coeffs[key] = c
        else:
            self.coeffs.pop(key, None)
        return self

    @property
    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        return isinstance(other, TensorVector) and self.coeffs == other.coeffs


_ALGEBRAS = {}


def algebra_for(base: GeometricLattice) -> "DiagramAlgebra":
    sig = _lattice_sig(base)
    alg = _ALGEBRAS.get(sig)
    if alg is None:
        alg = DiagramAlgebra(base)
        _ALGEBRAS[sig] = alg
    return alg


class DiagramAlgebra:
    """All diagram-level operations over a fixed nontrivial base lattice."""

    def __init__(self, base: GeometricLattice):
        if base.is_trivial:
            raise NotGeometric("modular diagrams of the one-point lattice "
                               "are not defined")
        self.base = base
        self.base_sig_hash = hash(_lattice_sig(base))
        self._entries = {}          # certificate -> CatalogEntry
        self._raw_canon = {}        # raw structural key -> certificate
        self._contract_cache = {}   # (cert, atom pos) -> contraction machinery
        self._pushout_cache = {}    # (cert1, cert2) -> pushout machinery
        self._interval_cache = {}   # flat idx -> (lower ctx data, upper ctx data)
        self._entry_atom_flats = {} # cert -> per-atom flat index
        self._diagram_blocks = {}   # bounds -> {(grading, degree): [Diagram]}

    # ------------------------------------------------------------------
    # normalization

    def _register_entry(self, entry: CatalogEntry) -> CatalogEntry:
        return self._entries.setdefault(entry.certificate, entry)

    def _entry_for(self, lat, fixed_labels):
        """Canonical entry for a raw extension plus the relabeling into it."""
        raw_key = (lat.atoms, lat.flat_masks, tuple(fixed_labels))
        hit = self._raw_canon.get(raw_key)
        if hit is not None:
            cert, perm = hit
            return self._entries[cert], perm
        entry, perm = _canonical_entry(lat, self.base,
                                       lat.n_atoms - self.base.n_atoms,
                                       lat.rank - self.base.rank,
                                       fixed_labels=fixed_labels)
        entry = self._register_entry(entry)
        self._raw_canon[raw_key] = (entry.certificate, perm)
        return entry, perm

    def atom_flats(self, entry: CatalogEntry):
        af = self._entry_atom_flats.get(entry.certificate)
        if af is None:
            lat = entry.lat
            af = tuple(lat.flat_index[1 << i] for i in range(lat.n_atoms))
            self._entry_atom_flats[entry.certificate] = af
        return af

    def normalize_raw(self, lat, atom_map, word_positions):
        """Normalize (lattice, base atom map, word); returns (sign, Diagram)
        or (0, ZERO)."""
        if len(set(word_positions)) != len(word_positions):
            return 0, ZERO
        base_img = 0
        for p in atom_map:
            base_img |= 1 << p
        word_mask = 0
        for p in word_positions:
            word_mask |= 1 << p
        span = lat.closure(base_img | word_mask)
        if lat.ranks[span] < lat.rank:
            return 0, ZERO  # word and base do not span the top
        needed = base_img | word_mask
        if needed != (1 << lat.n_atoms) - 1:
            keep = [lat.atoms[i] for i in _mask_atoms(needed)]
            sub, emb = restriction(lat, keep)
            back = {p: i for i, p in enumerate(emb.atom_map)}
            lat = sub
            atom_map = tuple(back[p] for p in atom_map)
            word_positions = tuple(back[p] for p in word_positions)
            base_img = 0
            for p in atom_map:
                base_img |= 1 << p
            word_mask = 0
            for p in word_positions:
                word_mask |= 1 << p
        # cheap vanishing scans before the canonical search
        if any(s & base_img == 0 for s in lat.factor_supports()):
            return 0, ZERO  # a factor misses the base image
        from .modularity import is_modular
        f_top = lat.closure(base_img)
        top_mask = lat.flat_masks[f_top]
        for f, m in enumerate(lat.flat_masks):
            if m & top_mask != top_mask:
                continue
            n_out = (word_mask & ~m).bit_count()
            if n_out == 1:
                return 0, ZERO  # lone word atom above a flat over the base
            if n_out == 2 and is_modular(lat, f):
                return 0, ZERO  # two word atoms outside a modular flat
        fixed_labels = [lat.atoms[p] for p in atom_map]
        entry, perm = self._entry_for(lat, fixed_labels)
        if entry.has_odd_aut:
            return 0, ZERO
        word_canon = tuple(perm[p] for p in word_positions)
        return self._finish(entry, word_canon)

    def _finish(self, entry: CatalogEntry, word_canon):
        """Word sorting and degree/grading for a surviving canonical word."""
        word_mask = 0
        for p in word_canon:
            word_mask |= 1 << p
        sorted_word, sign = _word_sign(word_canon)
        assert sign != 0
        lat = entry.lat
        vj = lat.closure(word_mask)
        top_mask = lat.flat_masks[entry.top]
        meet_mask = lat.flat_masks[vj] & top_mask
        grading = self.base.flat_index[meet_mask & ((1 << entry.n_base) - 1)]
        degree = len(sorted_word) - 2 * (lat.ranks[vj]
                                         - lat.ranks[lat.flat_index[meet_mask]])
        diagram = Diagram(self.base_sig_hash, entry, sorted_word, degree, grading)
        return sign, diagram

    def normalize(self, ext: ModularExtension, word_labels):
        """Public entry point: validate the extension, then normalize."""
        if not _same_lattice(ext.base, self.base):
            raise MismatchedBase("extension is over a different base")
        ext.validate()
        lat = ext.lat
        word = tuple(lat.atom_index[w] for w in word_labels)
        return self.normalize_raw(lat, ext.embedding.atom_map, word)

    def unit(self) -> Diagram:
        sign, diag = self.normalize_raw(self.base,
                                        tuple(range(self.base.n_atoms)), ())
        assert sign == 1
        return diag

    def atom_diagram(self, label) -> Diagram:
        sign, diag = self.normalize_raw(self.base,
                                        tuple(range(self.base.n_atoms)),
                                        (self.base.atom_index[label],))
        assert sign == 1 and diag is not ZERO
        return diag

    # ------------------------------------------------------------------
    # contraction and differential

    def contractible_positions(self, diag: Diagram):
        """Positions in the stored word whose atoms are contractible.

        In a normalized nonzero diagram no word atom is a lone atom above
        any flat over the base image, so contractible means exactly: not
        below the base image.
        """
        return [k for k, p in enumerate(diag.word) if p >= diag.entry.n_base]

    def is_bridge(self, diag: Diagram, label) -> bool:
        lat = diag.entry.lat
        p = lat.atom_index[label]
        word_mask = 0
        for q in diag.word:
            word_mask |= 1 << q
        if not word_mask >> p & 1:
            raise NotContractible(f"{label!r} is not in the word")
        for fmask, _ in diag.entry.flats_above_top():
            outside = word_mask & ~fmask
            if outside == 1 << p:
                return True
        return False

    def _contract_machinery(self, entry: CatalogEntry, p: int):
        key = (entry.certificate, p)
        hit = self._contract_cache.get(key)
        if hit is not None:
            return hit
        lat = entry.lat
        af = self.atom_flats(entry)
        sub, to_parent, from_parent = interval(lat, af[p], lat.top)
        atom_pos = [None] * lat.n_atoms
        for x in range(lat.n_atoms):
            if x == p:
                continue
            j = lat.join(af[p], af[x])
            s = from_parent[j]
            atom_pos[x] = next(_mask_atoms(sub.flat_masks[s]))
        machinery = (sub, tuple(atom_pos))
        self._contract_cache[key] = machinery
        return machinery

    def contract(self, diag: Diagram, position: int):
        """Contract the word atom at the given (0-based) stored position."""
        word = diag.word
        if not 0 <= position < len(word):
            raise NotContractible(f"no word position {position}")
        p = word[position]
        if p < diag.entry.n_base:
            raise NotContractible("atom lies below the base image")
        sub, atom_pos = self._contract_machinery(diag.entry, p)
        n_base = diag.entry.n_base
        atom_map = tuple(atom_pos[i] for i in range(n_base))
        new_word = tuple(atom_pos[q] for q in word if q != p)
        return self.normalize_raw(sub, atom_map, new_word)

    def differential_diagram(self, diag: Diagram) -> DiagramVector:
        out = DiagramVector(self)
        for k in self.contractible_positions(diag):
            sign, res = self.contract(diag, k)
            out.add_term(sign * (-1) ** k, res)
        return out

    def differential(self, vec: DiagramVector) -> DiagramVector:
        out = DiagramVector(self)
        for d, c in vec.coeffs.items():
            for d2, c2 in self.differential_diagram(d).coeffs.items():
                out.add_term(1, d2, c * c2)
        return out

    # ------------------------------------------------------------------
    # product

    def _pushout_machinery(self, e1: CatalogEntry, e2: CatalogEntry):
        key = (e1.certificate, e2.certificate)
        hit = self._pushout_cache.get(key)
        if hit is not None:
            return hit
        base = self.base
        nb = base.n_atoms
        l1, l2 = e1.lat, e2.lat
        n1 = l1.n_atoms - nb
        labels = list(base.atoms)
        labels += [f"p{k+1}" for k in range(n1 + (l2.n_atoms - nb))]
        base_all = (1 << nb) - 1
        shift = l2.n_atoms - nb

        parts1 = {}
        for f1, m1 in enumerate(l1.flat_masks):
            parts1.setdefault(m1 & base_all, []).append((f1, m1))
        masks = {}
        for f2, m2 in enumerate(l2.flat_masks):
            bp = m2 & base_all
            hi2 = (m2 >> nb) << (nb + n1)
            r2 = l2.ranks[f2]
            base_rank = base.rank_of_mask(bp)
            for f1, m1 in parts1.get(bp, ()):
                masks[m1 | hi2] = l1.ranks[f1] + r2 - base_rank
        lat = GeometricLattice(tuple(labels), masks.keys(), ranks=masks,
                               validate=False)
        machinery = (lat, nb, n1)
        self._pushout_cache[key] = machinery
        return machinery

    def product(self, d1: Diagram, d2: Diagram) -> DiagramVector:
        lat, nb, n1 = self._pushout_machinery(d1.entry, d2.entry)
        word1 = d1.word
        word2 = tuple(p if p < nb else p + n1 for p in d2.word)
        sign, res = self.normalize_raw(lat, tuple(range(nb)), word1 + word2)
        return DiagramVector(self).add_term(sign, res)

    def product_vectors(self, v1: DiagramVector, v2: DiagramVector) -> DiagramVector:
        out = DiagramVector(self)
        for a, ca in v1.coeffs.items():
            for b, cb in v2.coeffs.items():
                for d, c in self.product(a, b).coeffs.items():
                    out.add_term(1, d, ca * cb * c)
        return out

    # ------------------------------------------------------------------
    # comparison morphism into the Orlik-Solomon algebra

    def to_os(self, diag_or_vec) -> OSElement:
        if isinstance(diag_or_vec, Diagram):
            vec = DiagramVector(self).add_term(1, diag_or_vec)
        else:
            vec = diag_or_vec
        out = OSElement.zero(self.base)
        for d, c in vec.coeffs.items():
            if any(p >= d.entry.n_base for p in d.word):
                continue  # some word atom is contractible: maps to zero
            labels = [self.base.atoms[p] for p in d.word]
            out = out + reduce_to_nbc(self.base, labels).scale(c)
        return out

    # ------------------------------------------------------------------
    # cooperadic coproduct

    def interval_data(self, flat: int):
        hit = self._interval_cache.get(flat)
        if hit is None:
            lower = interval(self.base, self.base.bottom, flat)
            upper = interval(self.base, flat, self.base.top)
            hit = (lower, upper)
            self._interval_cache[flat] = hit
        return hit

    def coproduct(self, diag: Diagram, flat: int) -> TensorVector:
        """Split along a proper base flat into lower/upper diagram pairs."""
        base = self.base
        if flat in (base.bottom, base.top):
            raise ImproperFlat("coproduct requires a proper flat")
        (lowL, _, _), (upL, up_to, up_from) = self.interval_data(flat)
        low_alg = algebra_for(lowL)
        up_alg = algebra_for(upL)
        lat = diag.entry.lat
        nb = diag.entry.n_base
        base_all = (1 << nb) - 1
        f_mask = base.flat_masks[flat]
        af = self.atom_flats(diag.entry)
        out = TensorVector()
        word = diag.word
        for f, m in enumerate(lat.flat_masks):
            if m & base_all != f_mask:
                continue
            inside = [p for p in word if m >> p & 1]
            outside = [p for p in word if not m >> p & 1]
            inversions = 0
            seen_out = 0
            for p in word:
                if m >> p & 1:
                    inversions += seen_out
                else:
                    seen_out += 1
            eps = -1 if inversions % 2 else 1

            # lower factor: interval below f, base = interval below flat
            sub_lo, _, from_lo = self._entry_interval(diag.entry, None, f)
            lo_map = []
            for a in lowL.atoms:
                p = lat.atom_index[a]
                lo_map.append(next(_mask_atoms(
                    sub_lo.flat_masks[from_lo[af[p]]])))
            lo_word = tuple(next(_mask_atoms(sub_lo.flat_masks[from_lo[af[p]]]))
                            for p in inside)
            s_lo, d_lo = low_alg.normalize_raw(sub_lo, tuple(lo_map), lo_word)
            if d_lo is ZERO:
                continue

            # upper factor: interval above f, base = interval above flat
            sub_up, _, from_up = self._entry_interval(diag.entry, f, None)
            up_map = []
            ok = True
            for c in range(upL.n_atoms):
                parent_flat = up_to[upL.flat_index[1 << c]]
                img = lat.flat_index.get(base.flat_masks[parent_flat] & base_all)
                target = lat.join(f, lat.flat_index[base.flat_masks[parent_flat]])
                s = from_up.get(target)
                if s is None or sub_up.ranks[s] != 1:
                    ok = False
                    break
                up_map.append(next(_mask_atoms(sub_up.flat_masks[s])))
            if not ok:
                continue
            up_word = []
            for p in outside:
                s = from_up[lat.join(f, af[p])]
                up_word.append(next(_mask_atoms(sub_up.flat_masks[s])))
            s_up, d_up = up_alg.normalize_raw(sub_up, tuple(up_map),
                                              tuple(up_word))
            if d_up is ZERO:
                continue
            out.add_term(eps * s_lo * s_up, d_lo, d_up)
        return out

    def _entry_interval(self, entry: CatalogEntry, lo, hi):
        """Cached interval sublattice of an entry's lattice."""
        lat = entry.lat
        lo = entry.lat.bottom if lo is None else lo
        hi = entry.lat.top if hi is None else hi
        key = (entry.certificate, lo, hi)
        hitv = self._contract_cache.get(key)
        if hitv is None:
            hitv = interval(lat, lo, hi)
            self._contract_cache[key] = hitv
        return hitv

    # ------------------------------------------------------------------
    # relabeling and grading components

    def relabel(self, iso: Embedding, diag: Diagram):
        """Pull a diagram over the iso's target back to this base.

        ``iso`` maps this algebra's base isomorphically onto the base of
        the diagram.
        """
        if not _same_lattice(iso.source, self.base):
            raise NotIso("isomorphism source is not this base")
        tgt = iso.target
        if tgt.n_atoms != self.base.n_atoms or tgt.n_flats != self.base.n_flats:
            raise NotIso("not an isomorphism")
        atom_map = tuple(iso.atom_map[i] for i in range(self.base.n_atoms))
        return self.normalize_raw(diag.entry.lat, atom_map, diag.word)

    def grading_restrict(self, diag: Diagram):
        """MD(L, F) -> MD([0,F], top): restrict the extension below the image
        of the grading flat."""
        flat = diag.grading
        (lowL, _, _), _ = self.interval_data(flat)
        low_alg = algebra_for(lowL)
        lat = diag.entry.lat
        base_mask = self.base.flat_masks[flat]
        word_mask = 0
        for p in diag.word:
            word_mask |= 1 << p
        keep = [lat.atoms[i] for i in _mask_atoms(base_mask | word_mask)]
        sub, emb = restriction(lat, keep)
        back = {p: i for i, p in enumerate(emb.atom_map)}
        atom_map = tuple(back[lat.atom_index[a]] for a in lowL.atoms)
        word = tuple(back[p] for p in diag.word)
        return low_alg.normalize_raw(sub, atom_map, word)

    def grading_extend(self, flat: int, low_diag: Diagram):
        """MD([0,F], top) -> MD(L, F): push the extension out along the base."""
        base = self.base
        (lowL, _, _), _ = self.interval_data(flat)
        lat = low_diag.entry.lat
        nb_low = low_diag.entry.n_base
        lpos = [base.atom_index[a] for a in lowL.atoms]
        fmask = base.flat_masks[flat]
        n_new = lat.n_atoms - nb_low

        labels = list(base.atoms) + [f"q{k+1}" for k in range(n_new)]
        masks = {}
        parts = {}
        for g, gm in enumerate(lat.flat_masks):
            bp = 0
            for j in range(nb_low):
                if gm >> j & 1:
                    bp |= 1 << lpos[j]
            parts.setdefault(bp, []).append((g, gm))
        for f, m in enumerate(base.flat_masks):
            bp = m & fmask
            for g, gm in parts.get(bp, ()):
                nm = m | ((gm >> nb_low) << base.n_atoms)
                masks[nm] = base.ranks[f] + lat.ranks[g] \
                    - base.rank_of_mask(bp)
        big = GeometricLattice(tuple(labels), masks.keys(), ranks=masks,
                               validate=False)
        word = tuple(lpos[p] if p < nb_low else base.n_atoms + (p - nb_low)
                     for p in low_diag.word)
        return self.normalize_raw(big, tuple(range(base.n_atoms)), word)

    # ------------------------------------------------------------------
    # bounded bases and cohomology

    def diagrams_within(self, bounds):
        """All normalized diagrams with full-support words over the bounded
        extension catalog, grouped by (grading flat, degree)."""
        hit = self._diagram_blocks.get(bounds)
        if hit is not None:
            return hit
        ba, br, cap = bounds
        blocks = {}
        for raw_entry in catalog(self.base, ba, br, cap):
            entry = self._register_entry(raw_entry)
            n_new = entry.lat.n_atoms - entry.n_base
            if entry.has_odd_aut or entry.rel4_dead():
                continue
            if n_new in (1, 2):
                # a full-support word leaves 1 or 2 atoms outside the base
                # top, which always vanishes against it
                continue
            lat = entry.lat
            nb = entry.n_base
            new_mask = entry.new_mask
            above = entry.flats_above_top()
            top_mask = lat.flat_masks[entry.top]
            for smask in range(1 << nb):
                word_mask = new_mask | smask
                span = lat.closure(word_mask | top_mask)
                if lat.ranks[span] < lat.rank:
                    continue
                dead = False
                for fmask, fmod in above:
                    outside = word_mask & ~fmask
                    n_out = outside.bit_count()
                    if n_out == 1 or (n_out == 2 and fmod):
                        dead = True
                        break
                if dead:
                    continue
                vj = lat.closure(word_mask)
                meet_mask = lat.flat_masks[vj] & top_mask
                grading = self.base.flat_index[meet_mask]
                degree = (word_mask.bit_count()
                          - 2 * (lat.ranks[vj]
                                 - lat.ranks[lat.flat_index[meet_mask]]))
                word = tuple(_mask_atoms(word_mask))
                diag = Diagram(self.base_sig_hash, entry, word, degree, grading)
                blocks.setdefault((grading, degree), []).append(diag)
        for k in blocks:
            blocks[k].sort(key=lambda d: d.key)
        self._diagram_blocks[bounds] = blocks
        return blocks

    def basis(self, grading: int, degree: int, bounds):
        return list(self.diagrams_within(bounds).get((grading, degree), []))

    def cohomology_block(self, grading: int, bounds):
        """Truncated cohomology of the fixed-grading subcomplex.

        The enumerated basis is closed under the differential on the fly:
        any diagram reached by contraction stays within the bounds, so a
        missing target is appended (and counted) rather than dropped.
        """
        blocks = {deg: list(diags)
                  for (g, deg), diags in self.diagrams_within(bounds).items()
                  if g == grading}
        if not blocks:
            return CohomologyBlock(grading, bounds, {}, {}, {}, 0, {})
        healed = 0
        degrees = sorted(blocks)
        index = {deg: {d: i for i, d in enumerate(ds)}
                 for deg, ds in blocks.items()}
        matrices = {}
        k = degrees[0]
        while k <= max(degrees):
            cols = blocks.get(k, [])
            entries = {}
            for ci, diag in enumerate(cols):
                img = self.differential_diagram(diag)
                for d2, c in img.coeffs.items():
                    assert d2.degree == k + 1 and d2.grading == grading
                    row_index = index.setdefault(k + 1, {})
                    ri = row_index.get(d2)
                    if ri is None:
                        ri = len(row_index)
                        row_index[d2] = ri
                        blocks.setdefault(k + 1, []).append(d2)
                        healed += 1
                    entries[(ri, ci)] = entries.get((ri, ci), 0) + c
            matrices[k] = entries
            degrees = sorted(blocks)
            k += 1
        from .linalg import RationalMatrix, rank as matrix_rank
        dims = {deg: len(ds) for deg, ds in blocks.items()}
        ranks = {}
        for k, entries in matrices.items():
            m = RationalMatrix(dims.get(k + 1, 0), dims[k])
            for (r, c), v in entries.items():
                if v:
                    m.set(r, c, v)
            ranks[k] = matrix_rank(m)
        from .linalg import betti_from_ranks
        betti = betti_from_ranks(dims, ranks)
        return CohomologyBlock(grading, bounds, dims, ranks, betti, healed,
                               matrices)


@dataclass(frozen=True)
class CohomologyBlock:
    grading: int
    bounds: tuple
    dims: dict
    ranks: dict
    betti: dict
    healed: int
    matrices: dict

    def nonzero_betti(self):
        return {k: v for k, v in self.betti.items() if v}


def cohomology(base: GeometricLattice, grading: int, max_new_atoms: int,
               max_extra_rank: int, antichain_cap: int = 3):
    """Truncated Betti numbers at the given bounds and at one extra atom,
    with a per-degree stabilization report."""
    alg = algebra_for(base)
    lo = alg.cohomology_block(grading, (max_new_atoms, max_extra_rank,
                                        antichain_cap))
    hi = alg.cohomology_block(grading, (max_new_atoms + 1, max_extra_rank,
                                        antichain_cap))
    degrees = sorted(set(lo.betti) | set(hi.betti))
    stable = {k: lo.betti.get(k, 0) == hi.betti.get(k, 0) for k in degrees}
    return lo, hi, stable


def _same_lattice(l1, l2):
    return l1 is l2 or _lattice_sig(l1) == _lattice_sig(l2)


# ----------------------------------------------------------------------
# public helpers mirroring the operation surface


def normalize(ext: ModularExtension, word_labels):
    return algebra_for(ext.base).normalize(ext, word_labels)


def contractible_atoms(diag: Diagram, base: GeometricLattice):
    alg = algebra_for(base)
    return [diag.entry.lat.atoms[diag.word[k]]
            for k in alg.contractible_positions(diag)]


def differential(base: GeometricLattice, vec) -> DiagramVector:
    alg = algebra_for(base)
    if isinstance(vec, Diagram):
        vec = DiagramVector(alg).add_term(1, vec)
    return alg.differential(vec)


def product(base: GeometricLattice, d1, d2) -> DiagramVector:
    alg = algebra_for(base)
    if isinstance(d1, Diagram):
        d1 = DiagramVector(alg).add_term(1, d1)
    if isinstance(d2, Diagram):
        d2 = DiagramVector(alg).add_term(1, d2)
    return alg.product_vectors(d1, d2)


def I_morphism(base: GeometricLattice, diag_or_vec) -> OSElement:
    return algebra_for(base).to_os(diag_or_vec)


def coproduct(base: GeometricLattice, diag: Diagram, flat: int) -> TensorVector:
    return algebra_for(base).coproduct(diag, flat)


def md_relabel(iso: Embedding, base: GeometricLattice):
    """Pullback map on diagrams along an isomorphism out of ``base``."""
    alg = algebra_for(base)

    def mapper(diag):
        return alg.relabel(iso, diag)
    return mapper


def grading_component_iso(base: GeometricLattice, flat: int):
    """Mutually inverse maps between the fixed-grading component and the
    top component over the lower interval."""
    alg = algebra_for(base)

    def forward(diag):
        return alg.grading_restrict(diag)

    def backward(low_diag):
        return alg.grading_extend(flat, low_diag)
    return forward, backward


def basis(base: GeometricLattice, grading: int, degree: int,
          max_new_atoms: int, max_extra_rank: int, antichain_cap: int = 3):
    return algebra_for(base).basis(grading, degree,
                                   (max_new_atoms, max_extra_rank,
                                    antichain_cap))
