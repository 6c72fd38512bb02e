"""Molecular graph model: atoms, bonds, valence accounting, ring perception.

Molecule values are immutable after construction; every operation in this
package returns a new Molecule rather than mutating in place.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from chemlinker.errors import ValenceViolation

# Bond orders. AROMATIC is a distinct order, not 1.5: an aromatic bond
# contributes 1 to the base bond-order sum and the extra unit is accounted
# for during kekulization.
SINGLE, DOUBLE, TRIPLE, AROMATIC = 1, 2, 3, 4

# Allowed valence states, lowest first. P and S take the lowest state
# consistent with their bonds unless the bonds force a higher one.
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

ORGANIC_SUBSET = frozenset(VALENCES)
AROMATIC_ELEMENTS = frozenset({"B", "C", "N", "O", "P", "S"})

# Atomic numbers for bracket-specified elements (fingerprint serialization
# needs a stable element -> number mapping).
ELEMENT_NUMBERS = {
    "H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8,
    "F": 9, "Ne": 10, "Na": 11, "Mg": 12, "Al": 13, "Si": 14, "P": 15,
    "S": 16, "Cl": 17, "Ar": 18, "K": 19, "Ca": 20, "Sc": 21, "Ti": 22,
    "V": 23, "Cr": 24, "Mn": 25, "Fe": 26, "Co": 27, "Ni": 28, "Cu": 29,
    "Zn": 30, "Ga": 31, "Ge": 32, "As": 33, "Se": 34, "Br": 35, "Kr": 36,
    "Rb": 37, "Sr": 38, "Y": 39, "Zr": 40, "Nb": 41, "Mo": 42, "Tc": 43,
    "Ru": 44, "Rh": 45, "Pd": 46, "Ag": 47, "Cd": 48, "In": 49, "Sn": 50,
    "Sb": 51, "Te": 52, "I": 53, "Xe": 54, "Cs": 55, "Ba": 56, "La": 57,
    "W": 74, "Re": 75, "Os": 76, "Ir": 77, "Pt": 78, "Au": 79, "Hg": 80,
    "Tl": 81, "Pb": 82, "Bi": 83,
}

# Chirality marks. CCW corresponds to "@", CW to "@@".
CHI_NONE, CHI_CCW, CHI_CW = "", "@", "@@"

# Directional bond marks for double-bond stereo, interpreted in the
# direction bond.a -> bond.b.
STEREO_NONE, STEREO_UP, STEREO_DOWN = "", "up", "down"


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    formal_charge: int = 0
    explicit_h: int | None = None     # None: compute from the valence table
    isotope: int | None = None
    chirality: str = CHI_NONE
    # Neighbor atom indices in the order that fixes the chirality mark;
    # -1 stands for an implicit hydrogen written inside the bracket.
    chiral_ref: tuple[int, ...] = ()


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: int = SINGLE
    stereo: str = STEREO_NONE

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


def allowed_valences(element: str, charge: int) -> tuple[int, ...]:
    """Valence states for an organic-subset element adjusted for charge.

    Electronegative elements and boron gain a bonding slot per positive
    charge (N+ -> 4, O- -> 1, B- -> 4); carbon loses one per unit of
    charge in either direction (C+ and C- are both trivalent).
    """
    base = VALENCES[element]
    if element == "C":
        vals = tuple(v - abs(charge) for v in base)
    else:
        vals = tuple(v + charge for v in base)
    return tuple(max(v, 0) for v in vals)


class Molecule:
    """Immutable attributed molecular graph."""

    __slots__ = ("atoms", "bonds", "_adj", "_hcounts")

    def __init__(self, atoms, bonds, validate: bool = True):
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "bonds", tuple(bonds))
        adj: list[list[Bond]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.a].append(bond)
            adj[bond.b].append(bond)
        object.__setattr__(self, "_adj", tuple(tuple(bs) for bs in adj))
        object.__setattr__(self, "_hcounts", self._compute_hcounts())
        if validate:
            self._validate()

    def __setattr__(self, name, value):
        raise AttributeError("Molecule is immutable")

    # --- structure queries -------------------------------------------------

    def bonds_of(self, i: int) -> tuple[Bond, ...]:
        return self._adj[i]

    def neighbors(self, i: int) -> list[int]:
        return [b.other(i) for b in self._adj[i]]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def bond_between(self, i: int, j: int) -> Bond | None:
        for b in self._adj[i]:
            if b.other(i) == j:
                return b
        return None

    def base_order_sum(self, i: int) -> int:
        """Bond-order sum with aromatic bonds counted as single."""
        return sum(min(b.order, TRIPLE) if b.order != AROMATIC else 1
                   for b in self._adj[i])

    def hydrogen_count(self, i: int) -> int:
        """Total (explicit-in-bracket or implicit) hydrogens on atom i."""
        return self._hcounts[i]

    def heavy_atom_count(self) -> int:
        return len(self.atoms)

    def fragments(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists."""
        seen = [False] * len(self.atoms)
        comps = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                i = stack.pop()
                comp.append(i)
                for j in self.neighbors(i):
                    if not seen[j]:
                        seen[j] = True
                        stack.append(j)
            comps.append(sorted(comp))
        return comps

    def ring_bonds(self) -> set[int]:
        """Indices of bonds that lie on a cycle (non-bridge edges)."""
        n = len(self.atoms)
        bond_index = {id(b): k for k, b in enumerate(self.bonds)}
        disc = [-1] * n
        low = [0] * n
        bridges: set[int] = set()
        timer = [0]

        def dfs(node: int, parent_bond_id: int) -> None:
            disc[node] = low[node] = timer[0]
            timer[0] += 1
            for bond in self._adj[node]:
                k = bond_index[id(bond)]
                if k == parent_bond_id:
                    continue
                j = bond.other(node)
                if disc[j] == -1:
                    dfs(j, k)
                    low[node] = min(low[node], low[j])
                    if low[j] > disc[node]:
                        bridges.add(k)
                else:
                    low[node] = min(low[node], disc[j])

        for root in range(n):
            if disc[root] == -1:
                dfs(root, -1)
        return set(range(len(self.bonds))) - bridges

    def in_ring(self, i: int) -> bool:
        ring = self.ring_bonds()
        return any(k in ring for k, b in enumerate(self.bonds)
                   if b.a == i or b.b == i)

    def ring_atom_flags(self) -> list[bool]:
        ring = self.ring_bonds()
        flags = [False] * len(self.atoms)
        for k in ring:
            flags[self.bonds[k].a] = True
            flags[self.bonds[k].b] = True
        return flags

    def has_stereo(self) -> bool:
        return (any(a.chirality for a in self.atoms)
                or any(b.stereo for b in self.bonds))

    # --- hydrogen accounting -------------------------------------------------

    def _compute_hcounts(self) -> tuple[int, ...]:
        counts = []
        for i, atom in enumerate(self.atoms):
            if atom.explicit_h is not None:
                counts.append(atom.explicit_h)
                continue
            bosum = self.base_order_sum(i)
            if atom.aromatic:
                # An aromatic atom reserves one bonding slot for the ring
                # double bond it may receive during kekulization.
                lowest = allowed_valences(atom.element, atom.formal_charge)[0]
                counts.append(max(0, lowest - bosum - 1))
            else:
                vals = allowed_valences(atom.element, atom.formal_charge)
                fitting = [v for v in vals if v >= bosum]
                counts.append(fitting[0] - bosum if fitting else 0)
        return tuple(counts)

    # --- validation ------------------------------------------------------------

    def _validate(self) -> None:
        from chemlinker.molstring.kekulize import kekulize  # cycle guard

        for i, atom in enumerate(self.atoms):
            if not (-4 <= atom.formal_charge <= 4):
                raise ValenceViolation(
                    f"atom {i}: formal charge {atom.formal_charge} out of range")
            if atom.explicit_h is not None and not (0 <= atom.explicit_h <= 9):
                raise ValenceViolation(f"atom {i}: explicit H count out of range")
            if atom.aromatic and atom.element not in AROMATIC_ELEMENTS:
                raise ValenceViolation(
                    f"atom {i}: element {atom.element} cannot be aromatic")
            if atom.element not in ORGANIC_SUBSET:
                # Bracket-specified element outside the valence table:
                # hydrogens are explicit, valence is not checked.
                continue
            bosum = self.base_order_sum(i)
            total = bosum + self.hydrogen_count(i)
            vals = allowed_valences(atom.element, atom.formal_charge)
            if atom.aromatic:
                # Needs either its stated valence or one more unit from a
                # ring double bond; kekulization settles which.
                if total not in vals and total + 1 not in vals:
                    raise ValenceViolation(
                        f"atom {i} ({atom.element}): valence {total} invalid")
                n_arom = sum(1 for b in self._adj[i] if b.order == AROMATIC)
                if n_arom < 2:
                    raise ValenceViolation(
                        f"atom {i}: aromatic atom outside an aromatic ring")
            else:
                if total not in vals:
                    raise ValenceViolation(
                        f"atom {i} ({atom.element}): valence {total} invalid")
        for bond in self.bonds:
            if bond.a == bond.b:
                raise ValenceViolation("self-bond")
            if bond.order == AROMATIC:
                if not (self.atoms[bond.a].aromatic
                        and self.atoms[bond.b].aromatic):
                    raise ValenceViolation(
                        "aromatic bond between non-aromatic atoms")
        if any(a.aromatic for a in self.atoms):
            kekulize(self)  # raises KekulizationFailure if inconsistent

    # --- transforms ---------------------------------------------------------

    def strip_stereo(self) -> "Molecule":
        """Copy with all chirality marks and bond stereo removed."""
        atoms = [replace(a, chirality=CHI_NONE, chiral_ref=()) for a in self.atoms]
        bonds = [replace(b, stereo=STEREO_NONE) for b in self.bonds]
        return Molecule(atoms, bonds, validate=False)

    def renumbered(self, perm: list[int]) -> "Molecule":
        """Copy with atom i moved to position perm[i].

        Chirality reference lists keep their order with indices renamed, so
        the stereo meaning is preserved.
        """
        inv = [0] * len(perm)
        for old, new in enumerate(perm):
            inv[new] = old
        atoms = []
        for new in range(len(perm)):
            a = self.atoms[inv[new]]
            ref = tuple(perm[x] if x >= 0 else -1 for x in a.chiral_ref)
            atoms.append(replace(a, chiral_ref=ref))
        bonds = [replace(b, a=perm[b.a], b=perm[b.b]) for b in self.bonds]
        return Molecule(atoms, bonds, validate=False)

    # --- comparisons ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        return f"Molecule({len(self.atoms)} atoms, {len(self.bonds)} bonds)"
