"""Kekulé assignment for aromatic systems and the inverse perception step.

Kekulization places one double bond on every aromatic atom that needs one
(exact backtracking matching) and then checks the pi-electron count of each
aromatic system against the 4n+2 rule, so annotations like c1ccc1 are
rejected even though a pairing of double bonds exists.
"""

from __future__ import annotations

from dataclasses import replace

from chemlinker.errors import KekulizationFailure
from chemlinker.molstring.model import (
    AROMATIC,
    AROMATIC_ELEMENTS,
    DOUBLE,
    SINGLE,
    TRIPLE,
    Molecule,
    allowed_valences,
)

_PI_DONORS = frozenset({"N", "O", "S", "P"})


def _aromatic_components(m: Molecule) -> list[tuple[list[int], list[int]]]:
    """Connected components of the aromatic-bond subgraph.

    Returns (atom indices, bond indices) per component.
    """
    arom_bonds = [k for k, b in enumerate(m.bonds) if b.order == AROMATIC]
    adj: dict[int, list[int]] = {}
    for k in arom_bonds:
        adj.setdefault(m.bonds[k].a, []).append(k)
        adj.setdefault(m.bonds[k].b, []).append(k)
    seen: set[int] = set()
    comps = []
    for start in adj:
        if start in seen:
            continue
        atoms, bonds, stack = [], set(), [start]
        seen.add(start)
        while stack:
            i = stack.pop()
            atoms.append(i)
            for k in adj[i]:
                bonds.add(k)
                j = m.bonds[k].other(i)
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        comps.append((sorted(atoms), sorted(bonds)))
    return comps


def _needs_double(m: Molecule, i: int) -> bool:
    atom = m.atoms[i]
    total = m.base_order_sum(i) + m.hydrogen_count(i)
    vals = allowed_valences(atom.element, atom.formal_charge)
    if total in vals:
        return False
    if total + 1 in vals:
        return True
    raise KekulizationFailure(
        f"atom {i} ({atom.element}): no aromatic valence state fits {total}")


def _match(order: list[int], adj: dict[int, list[int]],
           mate: dict[int, int]) -> bool:
    """Backtracking perfect matching over the needy-atom subgraph."""
    free = [i for i in order if i not in mate]
    if not free:
        return True
    i = free[0]
    for j in adj.get(i, ()):
        if j not in mate:
            mate[i] = j
            mate[j] = i
            if _match(order, adj, mate):
                return True
            del mate[i], mate[j]
    return False


def kekulize(m: Molecule) -> dict[int, int]:
    """Assign single/double orders to aromatic bonds.

    Returns a map bond-index -> SINGLE or DOUBLE covering exactly the
    aromatic bonds. Raises KekulizationFailure when no assignment exists or
    the pi count violates the 4n+2 rule.
    """
    assignment: dict[int, int] = {}
    for atoms, bonds in _aromatic_components(m):
        needy = [i for i in atoms if _needs_double(m, i)]
        needy_set = set(needy)
        adj: dict[int, list[int]] = {i: [] for i in needy}
        pairable = {}
        for k in bonds:
            a, b = m.bonds[k].a, m.bonds[k].b
            if a in needy_set and b in needy_set:
                adj[a].append(b)
                adj[b].append(a)
                pairable[frozenset((a, b))] = k
        mate: dict[int, int] = {}
        if not _match(needy, adj, mate):
            raise KekulizationFailure(
                "no Kekule assignment for aromatic system "
                f"of {len(atoms)} atoms")
        pi = 0
        for i in atoms:
            if i in mate:
                pi += 1
            elif (m.atoms[i].element in _PI_DONORS
                  or m.atoms[i].formal_charge < 0):
                # Lone-pair donor contributes both electrons; atoms with an
                # exocyclic double bond (and boron) contribute none.
                if not any(b.order in (DOUBLE, TRIPLE) for b in m.bonds_of(i)):
                    pi += 2
        if pi % 4 != 2:
            raise KekulizationFailure(
                f"aromatic system has {pi} pi electrons (needs 4n+2)")
        for k in bonds:
            assignment[k] = SINGLE
        for i, j in mate.items():
            if i < j:
                assignment[pairable[frozenset((i, j))]] = DOUBLE
    return assignment


def kekulized(m: Molecule) -> Molecule:
    """Copy with aromatic flags cleared and explicit alternating bonds."""
    if not any(a.aromatic for a in m.atoms):
        return m
    orders = kekulize(m)
    bonds = [replace(b, order=orders.get(k, b.order))
             for k, b in enumerate(m.bonds)]
    atoms = [replace(a, aromatic=False,
                     explicit_h=m.hydrogen_count(i) if a.aromatic else a.explicit_h)
             for i, a in enumerate(m.atoms)]
    return Molecule(atoms, bonds, validate=False)


# --- perception (used on SELFIES-decoded Kekule graphs) ---------------------


def _smallest_rings(m: Molecule, sys_bonds: set[int]) -> list[list[int]]:
    """Smallest ring through each ring bond of one ring system."""
    rings: list[list[int]] = []
    seen_rings: set[frozenset[int]] = set()
    idx = {id(b): k for k, b in enumerate(m.bonds)}
    for k in sorted(sys_bonds):
        a, b = m.bonds[k].a, m.bonds[k].b
        # BFS from a to b avoiding bond k, restricted to system bonds.
        prev = {a: None}
        queue = [a]
        while queue and b not in prev:
            nxt = []
            for i in queue:
                for bond in m.bonds_of(i):
                    kk = idx[id(bond)]
                    if kk == k or kk not in sys_bonds:
                        continue
                    j = bond.other(i)
                    if j not in prev:
                        prev[j] = i
                        nxt.append(j)
            queue = nxt
        if b not in prev:
            continue
        path = [b]
        while path[-1] is not None and path[-1] != a:
            path.append(prev[path[-1]])
        ring = frozenset(path)
        if ring not in seen_rings:
            seen_rings.add(ring)
            rings.append(path)
    return rings


def _classify_sp2(m: Molecule, i: int, sys_atoms: set[int]) -> int | None:
    """Pi-electron contribution of atom i in a candidate aromatic system.

    None means the atom disqualifies the system (sp3 carbon, triple bond,
    two ring double bonds, unsupported element).
    """
    atom = m.atoms[i]
    if atom.element not in AROMATIC_ELEMENTS:
        return None
    in_sys_dbl = 0
    exo_dbl = False
    for b in m.bonds_of(i):
        if b.order == TRIPLE:
            return None
        if b.order == DOUBLE:
            if b.other(i) in sys_atoms:
                in_sys_dbl += 1
            else:
                exo_dbl = True
    if in_sys_dbl == 1:
        return 1
    if in_sys_dbl > 1:
        return None
    if exo_dbl:
        return 0
    if atom.element in _PI_DONORS or atom.formal_charge < 0:
        return 2
    return None


def aromatize(m: Molecule) -> Molecule:
    """Perceive aromatic rings on a Kekule graph and mark them aromatic.

    Tries whole fused ring systems first (covers azulene-type cases), then
    individual smallest rings (covers partially saturated fused systems).
    Hydrogen counts are frozen on converted atoms so donors like pyrrole
    nitrogen keep their hydrogen.
    """
    ring = m.ring_bonds()
    if not ring:
        return m
    # Ring systems: components of the ring-bond subgraph.
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k in ring:
        for i in (m.bonds[k].a, m.bonds[k].b):
            parent.setdefault(i, i)
        ra, rb = find(m.bonds[k].a), find(m.bonds[k].b)
        if ra != rb:
            parent[ra] = rb
    systems: dict[int, set[int]] = {}
    for i in parent:
        systems.setdefault(find(i), set()).add(i)

    arom_atoms: set[int] = set()
    arom_bonds: set[int] = set()
    for sys_atoms in systems.values():
        sys_bonds = {k for k in ring
                     if m.bonds[k].a in sys_atoms and m.bonds[k].b in sys_atoms}
        contrib = {i: _classify_sp2(m, i, sys_atoms) for i in sys_atoms}
        if (all(c is not None for c in contrib.values())
                and sum(contrib.values()) % 4 == 2):
            arom_atoms |= sys_atoms
            arom_bonds |= sys_bonds
            continue
        for ring_atoms in _smallest_rings(m, sys_bonds):
            cs = [contrib[i] for i in ring_atoms]
            if any(c is None for c in cs) or sum(cs) % 4 != 2:
                continue
            ring_set = set(ring_atoms)
            arom_atoms |= ring_set
            arom_bonds |= {k for k in sys_bonds
                           if m.bonds[k].a in ring_set
                           and m.bonds[k].b in ring_set}
    if not arom_atoms:
        return m

    atoms = [replace(a, aromatic=True, explicit_h=m.hydrogen_count(i))
             if i in arom_atoms else a
             for i, a in enumerate(m.atoms)]
    bonds = [replace(b, order=AROMATIC) if k in arom_bonds else b
             for k, b in enumerate(m.bonds)]
    try:
        return Molecule(atoms, bonds)
    except KekulizationFailure:
        # Perception disagreed with the validator; keep the Kekule form,
        # which is already valid.
        return m
