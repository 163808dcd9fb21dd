"""The Orlik-Solomon algebra of a geometric lattice.

Elements are rational combinations of monomials avoiding broken circuits
(a broken circuit is a circuit minus its least atom in the lattice's atom
order).  Words reduce to this basis by straightening along circuit
boundaries; sign conventions order circuit products increasingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ImproperFlat, LatticeMismatch, SpecParse
from .lattice import GeometricLattice, _mask_atoms, interval


class OSContext:
    """Per-lattice machinery: circuits, broken circuits, nbc basis, reductions."""

    def __init__(self, lat: GeometricLattice):
        self.lat = lat
        circuits = lat.circuits_masks()
        self.broken = []
        self.circuit_of_broken = {}
        for c in circuits:
            least = c & -c
            b = c ^ least
            self.broken.append(b)
            self.circuit_of_broken[b] = c
        self.broken.sort(key=lambda m: (m.bit_count(), _atom_tuple(m)))
        self._reduce_memo = {}
        self._nbc = None

    def is_nbc(self, mask: int) -> bool:
        return all(mask & b != b for b in self.broken)

    def nbc_masks(self):
        if self._nbc is None:
            out = [[] for _ in range(self.lat.rank + 1)]
            full = 1 << self.lat.n_atoms
            for m in range(full):
                if self.is_nbc(m):
                    out[m.bit_count()].append(m)
            self._nbc = tuple(tuple(level) for level in out)
        return self._nbc

    def reduce_set(self, mask: int):
        """Class of the increasing monomial on ``mask`` in the nbc basis."""
        memo = self._reduce_memo.get(mask)
        if memo is not None:
            return memo
        containing = [b for b in self.broken if mask & b == b]
        if not containing:
            result = {mask: 1}
        else:
            b = containing[0]  # least broken circuit first
            circuit = self.circuit_of_broken[b]
            rest = mask ^ b
            atoms_c = _atom_list(circuit)
            # e_mask = unmerge * e_b ∧ e_rest, then straighten e_b along the
            # circuit boundary and re-sort each term
            unmerge = _merge_sign(b, rest)
            result = {}
            for j in range(1, len(atoms_c)):
                # dropping the (j+1)-th smallest atom carries sign (-1)^(j+1)
                dropped = circuit ^ (1 << atoms_c[j])
                sign = 1 if j % 2 else -1
                if dropped & rest:
                    continue
                merged = dropped | rest
                msign = _merge_sign(dropped, rest)
                for m2, c2 in self.reduce_set(merged).items():
                    result[m2] = result.get(m2, 0) + unmerge * sign * msign * c2
            result = {m: c for m, c in result.items() if c}
        self._reduce_memo[mask] = result
        return result


def _atom_list(mask: int):
    return list(_mask_atoms(mask))


def _atom_tuple(mask: int):
    return tuple(_mask_atoms(mask))


def _merge_sign(first: int, second: int) -> int:
    """Sign of sorting the concatenation of two increasing words."""
    inversions = 0
    seconds_seen = 0
    m = first | second
    while m:
        low = m & -m
        if second & low:
            seconds_seen += 1
        else:
            inversions += seconds_seen
        m ^= low
    return -1 if inversions % 2 else 1


def _word_sign(positions) -> tuple:
    """(sorted tuple, sign) for a word of atom positions; sign 0 on repeats."""
    n = len(positions)
    sign = 1
    arr = list(positions)
    for i in range(n):
        for j in range(n - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
            elif arr[j] == arr[j + 1]:
                return tuple(arr), 0
    return tuple(arr), sign


_CONTEXTS = {}


def os_context(lat: GeometricLattice) -> OSContext:
    ctx = _CONTEXTS.get(id(lat))
    if ctx is None:
        ctx = OSContext(lat)
        _CONTEXTS[id(lat)] = ctx
    return ctx


@dataclass(frozen=True)
class OSElement:
    """Rational combination of nbc monomials over a fixed lattice."""

    lattice: GeometricLattice
    coeffs: tuple  # sorted tuple of (mask, Fraction)

    @classmethod
    def from_dict(cls, lat, d):
        items = tuple(sorted((m, Fraction(c)) for m, c in d.items() if c))
        return cls(lat, items)

    @classmethod
    def zero(cls, lat):
        return cls(lat, ())

    @classmethod
    def one(cls, lat):
        return cls.from_dict(lat, {0: 1})

    def as_dict(self):
        return dict(self.coeffs)

    @property
    def is_zero(self):
        return not self.coeffs

    def degrees(self):
        return sorted({m.bit_count() for m, _ in self.coeffs})

    def __add__(self, other):
        if self.lattice is not other.lattice:
            raise LatticeMismatch("operands live over different lattices")
        d = dict(self.coeffs)
        for m, c in other.coeffs:
            d[m] = d.get(m, 0) + c
        return OSElement.from_dict(self.lattice, d)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return OSElement.from_dict(self.lattice,
                                   {m: Fraction(c) * v for m, v in self.coeffs})

    def monomials(self):
        """Human-readable view: list of (atom-label tuple, coefficient)."""
        lat = self.lattice
        return [(tuple(lat.atoms[i] for i in _mask_atoms(m)), c)
                for m, c in self.coeffs]


def reduce_to_nbc(lat: GeometricLattice, word) -> OSElement:
    """Class of the product of generators listed by atom label, in order."""
    positions = [lat.atom_index[w] for w in word]
    sorted_pos, sign = _word_sign(positions)
    if sign == 0:
        return OSElement.zero(lat)
    mask = 0
    for p in sorted_pos:
        mask |= 1 << p
    ctx = os_context(lat)
    return OSElement.from_dict(
        lat, {m: sign * c for m, c in ctx.reduce_set(mask).items()})


def multiply(a: OSElement, b: OSElement) -> OSElement:
    if a.lattice is not b.lattice:
        raise LatticeMismatch("operands live over different lattices")
    lat = a.lattice
    ctx = os_context(lat)
    out = {}
    for m1, c1 in a.coeffs:
        for m2, c2 in b.coeffs:
            if m1 & m2:
                continue
            sign = _merge_sign(m1, m2)
            for m3, c3 in ctx.reduce_set(m1 | m2).items():
                out[m3] = out.get(m3, 0) + sign * c1 * c2 * c3
    return OSElement.from_dict(lat, out)


def nbc_basis(lat: GeometricLattice):
    """nbc monomials per degree as tuples of atom labels."""
    ctx = os_context(lat)
    return [[tuple(lat.atoms[i] for i in _mask_atoms(m)) for m in level]
            for level in ctx.nbc_masks()]


def hilbert_series(lat: GeometricLattice):
    return [len(level) for level in os_context(lat).nbc_masks()]


def os_graded_dims(lat: GeometricLattice):
    """Dimension per flat; nbc monomials are grouped by the flat they span."""
    out = {}
    for level in os_context(lat).nbc_masks():
        for m in level:
            f = lat.closure(m)
            out[f] = out.get(f, 0) + 1
    top_dims = {m.bit_count() for level in os_context(lat).nbc_masks()
                for m in level if lat.closure(m) == lat.top}
    assert top_dims <= {lat.rank}, "top-graded part not concentrated in top degree"
    return out


def os_isomorphism_invariant_dims(lat, orders):
    """Hilbert series recomputed under alternative atom orders (self-check)."""
    out = []
    for order in orders:
        relat = GeometricLattice(
            order,
            [_remap_mask(m, lat, order) for m in lat.flat_masks],
            validate=False)
        out.append(hilbert_series(relat))
    return out


def _remap_mask(mask, lat, order):
    pos = {a: i for i, a in enumerate(order)}
    out = 0
    for i in _mask_atoms(mask):
        out |= 1 << pos[lat.atoms[i]]
    return out


@dataclass(frozen=True)
class HolonomyPresentation:
    """Generators indexed by atoms; one bracket relation per (rank-2 flat,
    atom below it) pair: the atom's generator against the flat's sum."""

    generators: tuple               # atom labels
    relations: tuple                # (atom label, tuple of atom labels in the flat)

    def counts(self):
        return len(self.generators), len(self.relations)


def holonomy_presentation(lat: GeometricLattice) -> HolonomyPresentation:
    gens = lat.atoms
    rels = []
    if lat.rank >= 2:
        for f in lat.by_rank[2]:
            flat_atoms = lat.atoms_of(f)
            for a in flat_atoms:
                rels.append((a, flat_atoms))
    return HolonomyPresentation(gens, tuple(rels))


def koszul_series_check(lat: GeometricLattice, order: int):
    """Necessary numerical condition: the coefficientwise inverse of the
    Hilbert series evaluated at -t must stay nonnegative.

    Returns (passed, coefficients, first_negative_index_or_None).
    """
    if order > 20:
        raise SpecParse("series order capped at 20")
    hilb = hilbert_series(lat)
    h = [Fraction((-1) ** i * hilb[i]) if i < len(hilb) else Fraction(0)
         for i in range(order + 1)]
    a = [Fraction(1)]
    for k in range(1, order + 1):
        a.append(-sum(h[j] * a[k - j] for j in range(1, k + 1)))
    fail = next((i for i, v in enumerate(a) if v < 0), None)
    return fail is None, [int(v) if v.denominator == 1 else v for v in a], fail


def os_coproduct(elem: OSElement, flat: int):
    """Split an element across a proper flat into lower and upper pieces.

    Returns a dict mapping (lower-mask, upper-mask) over the two interval
    lattices to coefficients, together with the interval lattices.
    A generator below the flat goes to the lower side; any other generator
    maps to its join with the flat on the upper side.
    """
    lat = elem.lattice
    if flat in (lat.bottom, lat.top):
        raise ImproperFlat("coproduct needs a proper flat")
    lower, low_to_parent, low_from_parent = interval(lat, lat.bottom, flat)
    upper, up_to_parent, up_from_parent = interval(lat, flat, lat.top)
    fmask = lat.flat_masks[flat]
    low_ctx = os_context(lower)
    up_ctx = os_context(upper)
    out = {}
    for m, c in elem.coeffs:
        low_positions = []
        up_positions = []
        unshuffle = 1
        for i in _mask_atoms(m):
            if fmask >> i & 1:
                low_positions.append(lower.atom_index[lat.atoms[i]])
                if len(up_positions) % 2:
                    unshuffle = -unshuffle
            else:
                j = lat.join(flat, lat.atom_flat(lat.atoms[i]))
                ia = up_from_parent.get(j)
                assert ia is not None and upper.ranks[ia] == 1
                up_positions.append(next(_mask_atoms(upper.flat_masks[ia])))
        lsorted, lsign = _word_sign(low_positions)
        usorted, usign = _word_sign(up_positions)
        if lsign == 0 or usign == 0:
            continue
        lmask = 0
        for p in lsorted:
            lmask |= 1 << p
        umask = 0
        for p in usorted:
            umask |= 1 << p
        total = c * unshuffle * lsign * usign
        for lm2, c2 in low_ctx.reduce_set(lmask).items():
            for um2, c3 in up_ctx.reduce_set(umask).items():
                key = (lm2, um2)
                out[key] = out.get(key, 0) + total * c2 * c3
    out = {k: v for k, v in out.items() if v}
    return out, lower, upper
