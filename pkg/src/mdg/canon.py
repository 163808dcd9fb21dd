"""Canonical relabeling of geometric lattices with optional pinned atoms.

Two lattices are isomorphic fixing the pinned atoms pointwise (by list
position) iff their certificates are equal.  The engine runs color
refinement on the atom/flat incidence structure and then searches the
remaining color cells, keeping the lexicographically least certificate.
The full set of automorphisms fixing the pinned atoms is returned as a
byproduct.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ForeignFlat
from .lattice import GeometricLattice, _mask_atoms


@dataclass(frozen=True)
class CanonicalForm:
    """Result of canonical labeling.

    perm[i] is the canonical position of atom i.  ``automorphisms`` are
    atom permutations (same convention) mapping the flat family to itself
    while fixing the pinned atoms pointwise.
    """

    certificate: bytes
    perm: tuple
    automorphisms: tuple

    def relabeled_masks(self, lat: GeometricLattice):
        return _apply_perm(lat.flat_masks, self.perm)


def _apply_perm(masks, perm):
    out = []
    for m in masks:
        nm = 0
        for i in _mask_atoms(m):
            nm |= 1 << perm[i]
        out.append(nm)
    out.sort()
    return tuple(out)


def _refine(lat: GeometricLattice, colors):
    """Iterated color refinement over the atom/flat incidence bigraph."""
    n = lat.n_atoms
    masks = lat.flat_masks
    ranks = lat.ranks
    while True:
        sigs = [(ranks[f], tuple(sorted(colors[i] for i in _mask_atoms(m))))
                for f, m in enumerate(masks)]
        # ids must follow the canonical order of the signatures themselves,
        # not the enumeration order, or certificates depend on presentation
        sig_order = {s: k for k, s in enumerate(sorted(set(sigs)))}
        flat_sig_ids = [sig_order[s] for s in sigs]
        atom_sigs = []
        for i in range(n):
            bit = 1 << i
            prof = sorted(flat_sig_ids[f] for f, m in enumerate(masks) if m & bit)
            atom_sigs.append((colors[i], tuple(prof)))
        new_ids = {}
        for sig in sorted(set(atom_sigs)):
            new_ids[sig] = len(new_ids)
        new_colors = tuple(new_ids[s] for s in atom_sigs)
        if new_colors == colors:
            return colors
        colors = new_colors


def _cells(colors):
    cells = {}
    for i, c in enumerate(colors):
        cells.setdefault(c, []).append(i)
    return [cells[c] for c in sorted(cells)]


def _search(lat, colors, best):
    """Enumerate candidate canonical permutations; keep the least certificate.

    ``best`` is a dict carrying the current optimum and all permutations
    achieving it.
    """
    cells = _cells(colors)
    branch = next((c for c in cells if len(c) > 1), None)
    if branch is None:
        perm = [0] * lat.n_atoms
        pos = 0
        for cell in cells:
            perm[cell[0]] = pos
            pos += 1
        cert = _certificate_bytes(lat, perm)
        if best["cert"] is None or cert < best["cert"]:
            best["cert"] = cert
            best["perms"] = [tuple(perm)]
        elif cert == best["cert"]:
            best["perms"].append(tuple(perm))
        return
    if len(branch) <= 5:
        # small cell: try every ordering at once, cheaper than re-refining
        base = max(colors) + 1
        for ordering in itertools.permutations(branch):
            new = list(colors)
            for k, atom in enumerate(ordering):
                new[atom] = base + k
            _search(lat, _refine(lat, tuple(new)), best)
    else:
        base = max(colors) + 1
        for atom in branch:
            new = list(colors)
            new[atom] = base
            _search(lat, _refine(lat, tuple(new)), best)


def _certificate_bytes(lat, perm):
    masks = _apply_perm(lat.flat_masks, perm)
    head = (lat.n_atoms, lat.rank)
    body = ",".join(format(m, "x") for m in masks)
    return repr(head).encode() + b"|" + body.encode()


def canonical_form(lat: GeometricLattice, fixed_atoms=()) -> CanonicalForm:
    """Canonical relabeling; ``fixed_atoms`` are pinned pointwise, in order."""
    fixed = []
    for lab in fixed_atoms:
        if lab not in lat.atom_index:
            raise ForeignFlat(f"unknown fixed atom {lab!r}")
        fixed.append(lat.atom_index[lab])
    if len(set(fixed)) != len(fixed):
        raise ForeignFlat("fixed atoms repeat")
    n = lat.n_atoms
    colors = [len(fixed)] * n
    for k, i in enumerate(fixed):
        colors[i] = k
    colors = _refine(lat, tuple(colors))
    best = {"cert": None, "perms": []}
    _search(lat, colors, best)
    perms = best["perms"]
    p0 = perms[0]
    inv0 = [0] * n
    for i, p in enumerate(p0):
        inv0[p] = i
    auts = set()
    for p in perms:
        # p and p0 reach the same certificate, so p0^-1 . p is an automorphism
        a = tuple(inv0[p[i]] for i in range(n))
        auts.add(a)
    auts.discard(tuple(range(n)))
    # close under composition; the cell search can miss products
    frontier = list(auts)
    group = set(auts)
    ident = tuple(range(n))
    while frontier:
        g = frontier.pop()
        for h in list(group) + [g]:
            for comp in (tuple(g[h[i]] for i in range(n)),
                         tuple(h[g[i]] for i in range(n))):
                if comp != ident and comp not in group:
                    group.add(comp)
                    frontier.append(comp)
    return CanonicalForm(best["cert"], p0, tuple(sorted(group)))


def certificates_equal(l1: GeometricLattice, l2: GeometricLattice,
                       fixed1=(), fixed2=()) -> bool:
    return canonical_form(l1, fixed1).certificate == \
        canonical_form(l2, fixed2).certificate
