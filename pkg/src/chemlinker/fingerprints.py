"""Molecular fingerprints: circular environments, linear paths, structural keys.

Hashing is bit-exact and language-neutral. Every environment or path is
serialized to a byte string made of little-endian u32 fields — per atom:
element number, formal charge (two's complement), heavy-atom degree,
hydrogen count; bond orders interleaved along the traversal — then hashed
with 64-bit FNV-1a; the bit index is the hash modulo the bit width.
Children of a circular environment are ordered by (bond order, serialized
child bytes), which makes every scheme invariant under atom relabeling.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from chemlinker.errors import SchemeMismatch
from chemlinker.molstring.model import (
    AROMATIC,
    DOUBLE,
    ELEMENT_NUMBERS,
    TRIPLE,
    Molecule,
)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


def _u32(value: int) -> bytes:
    return struct.pack("<I", value & 0xFFFFFFFF)


def _atom_bytes(m: Molecule, i: int) -> bytes:
    a = m.atoms[i]
    return (_u32(ELEMENT_NUMBERS[a.element]) + _u32(a.formal_charge)
            + _u32(m.degree(i)) + _u32(m.hydrogen_count(i)))


@dataclass(frozen=True)
class FingerprintBitset:
    """Bit vector plus the scheme metadata that makes it comparable."""

    scheme: str                 # "circular" | "path" | "keys"
    nbits: int
    bits: frozenset
    params: tuple

    def to_hex(self) -> str:
        """Serialize as `<tag>/<nbits>:<hex>`; bit i lives at byte i>>3, bit i&7."""
        buf = bytearray((self.nbits + 7) // 8)
        for bit in self.bits:
            buf[bit >> 3] |= 1 << (bit & 7)
        return f"{self._tag()}/{self.nbits}:{bytes(buf).hex()}"

    def _tag(self) -> str:
        if self.scheme == "circular":
            return f"circ{self.params[0]}"
        if self.scheme == "path":
            return f"path{self.params[0]}"
        return f"keys-{self.params[0]}"


def circular_fp(m: Molecule, radius: int = 2,
                nbits: int = 2048) -> FingerprintBitset:
    """Hash every atom-centered environment of radius 0..radius."""
    if not 0 <= radius <= 4:
        raise ValueError("radius must be in [0, 4]")
    bits = set()
    for i in range(len(m.atoms)):
        for r in range(radius + 1):
            bits.add(fnv1a64(_environment_bytes(m, i, None, r)) % nbits)
    return FingerprintBitset("circular", nbits, frozenset(bits), (radius,))


def _environment_bytes(m: Molecule, i: int, parent: int | None,
                       depth: int) -> bytes:
    """Serialized rooted environment tree; no immediate backtracking."""
    out = _atom_bytes(m, i)
    if depth == 0:
        return out
    branches = []
    for b in m.bonds_of(i):
        j = b.other(i)
        if j == parent:
            continue
        branches.append((b.order,
                         _environment_bytes(m, j, i, depth - 1)))
    for order, child in sorted(branches):
        out += _u32(order) + child
    return out


def path_fp(m: Molecule, max_len: int = 7,
            nbits: int = 2048) -> FingerprintBitset:
    """Hash all simple linear bond paths of length 1..max_len."""
    if not 1 <= max_len <= 7:
        raise ValueError("max_len must be in [1, 7]")
    bits = set()

    def extend(path: list[int], orders: list[int]) -> None:
        if orders:
            bits.add(fnv1a64(_path_bytes(m, path, orders)) % nbits)
        if len(orders) == max_len:
            return
        tail = path[-1]
        for b in m.bonds_of(tail):
            j = b.other(tail)
            if j not in path:
                extend(path + [j], orders + [b.order])

    for i in range(len(m.atoms)):
        extend([i], [])
    return FingerprintBitset("path", nbits, frozenset(bits), (max_len,))


def _path_bytes(m: Molecule, path: list[int], orders: list[int]) -> bytes:
    def one_way(atoms, bonds):
        out = _atom_bytes(m, atoms[0])
        for atom, order in zip(atoms[1:], bonds):
            out += _u32(order) + _atom_bytes(m, atom)
        return out

    forward = one_way(path, orders)
    backward = one_way(path[::-1], orders[::-1])
    return min(forward, backward)


# --- structural keys -----------------------------------------------------------


@dataclass(frozen=True)
class KeySet:
    """Ordered list of named structural predicates over a Molecule."""

    keyset_id: str
    keys: tuple          # of (name, predicate)

    def __len__(self) -> int:
        return len(self.keys)


def _ring_sizes(m: Molecule) -> list[int]:
    from chemlinker.molstring.kekulize import _smallest_rings

    ring = set(m.ring_bonds())
    return [len(r) for r in _smallest_rings(m, ring)]


def _count(m: Molecule, element: str) -> int:
    return sum(a.element == element for a in m.atoms)


def _has_bond(m: Molecule, order: int, elems: set | None = None) -> bool:
    for b in m.bonds:
        if b.order != order:
            continue
        if elems is None:
            return True
        if {m.atoms[b.a].element, m.atoms[b.b].element} == elems:
            return True
    return False


def _ring_atoms(m: Molecule) -> set:
    out = set()
    for k in m.ring_bonds():
        out.add(m.bonds[k].a)
        out.add(m.bonds[k].b)
    return out


def default_keyset() -> KeySet:
    """The shipped ~40-predicate structural key set (id ``default-v1``)."""
    halogens = ("F", "Cl", "Br", "I")
    keys = []

    for el in ("C", "N", "O", "S", "P", "B", "F", "Cl", "Br", "I"):
        keys.append((f"has_{el}", lambda m, el=el: _count(m, el) > 0))
    keys.append(("n_ge2", lambda m: _count(m, "N") >= 2))
    keys.append(("o_ge2", lambda m: _count(m, "O") >= 2))
    keys.append(("o_ge3", lambda m: _count(m, "O") >= 3))
    keys.append(("halogen_ge2",
                 lambda m: sum(_count(m, h) for h in halogens) >= 2))
    keys.append(("heteroatom_present",
                 lambda m: any(a.element != "C" for a in m.atoms)))

    keys.append(("has_ring", lambda m: bool(m.ring_bonds())))
    keys.append(("ring_count_ge2", lambda m: len(_ring_sizes(m)) >= 2))
    for size in (3, 4, 5, 6, 7):
        keys.append((f"ring_size_{size}",
                     lambda m, size=size: size in _ring_sizes(m)))
    keys.append(("aromatic_ring",
                 lambda m: any(b.order == AROMATIC for b in m.bonds)))
    keys.append(("aromatic_n",
                 lambda m: any(a.aromatic and a.element == "N"
                               for a in m.atoms)))
    keys.append(("aromatic_heteroatom",
                 lambda m: any(a.aromatic and a.element != "C"
                               for a in m.atoms)))
    keys.append(("n_in_ring",
                 lambda m: any(m.atoms[i].element == "N"
                               for i in _ring_atoms(m))))
    keys.append(("o_in_ring",
                 lambda m: any(m.atoms[i].element == "O"
                               for i in _ring_atoms(m))))
    keys.append(("s_in_ring",
                 lambda m: any(m.atoms[i].element == "S"
                               for i in _ring_atoms(m))))
    keys.append(("heteroatom_in_ring",
                 lambda m: any(m.atoms[i].element != "C"
                               for i in _ring_atoms(m))))

    keys.append(("positive_charge",
                 lambda m: any(a.formal_charge > 0 for a in m.atoms)))
    keys.append(("negative_charge",
                 lambda m: any(a.formal_charge < 0 for a in m.atoms)))
    keys.append(("any_charge",
                 lambda m: any(a.formal_charge for a in m.atoms)))

    keys.append(("double_bond", lambda m: _has_bond(m, DOUBLE)))
    keys.append(("triple_bond", lambda m: _has_bond(m, TRIPLE)))
    keys.append(("carbonyl", lambda m: _has_bond(m, DOUBLE, {"C", "O"})))
    keys.append(("c_eq_n", lambda m: _has_bond(m, DOUBLE, {"C", "N"})))
    keys.append(("s_eq_o", lambda m: _has_bond(m, DOUBLE, {"S", "O"})))
    keys.append(("hydroxyl",
                 lambda m: any(a.element == "O" and m.hydrogen_count(i) >= 1
                               and m.degree(i) == 1
                               for i, a in enumerate(m.atoms))))
    keys.append(("primary_or_secondary_amine",
                 lambda m: any(a.element == "N" and not a.aromatic
                               and m.hydrogen_count(i) >= 1
                               for i, a in enumerate(m.atoms))))
    keys.append(("quaternary_center",
                 lambda m: any(m.degree(i) >= 4
                               for i in range(len(m.atoms)))))
    keys.append(("branch_points_ge2",
                 lambda m: sum(m.degree(i) >= 3
                               for i in range(len(m.atoms))) >= 2))
    keys.append(("size_ge10", lambda m: len(m.atoms) >= 10))
    keys.append(("size_ge20", lambda m: len(m.atoms) >= 20))
    keys.append(("multi_fragment", lambda m: len(m.fragments()) > 1))

    return KeySet("default-v1", tuple(keys))


_DEFAULT_KEYSET = None


def key_fp(m: Molecule, keys: KeySet | None = None) -> FingerprintBitset:
    """Evaluate every predicate; bit k is set iff predicate k holds."""
    global _DEFAULT_KEYSET
    if keys is None:
        if _DEFAULT_KEYSET is None:
            _DEFAULT_KEYSET = default_keyset()
        keys = _DEFAULT_KEYSET
    nbits = 64
    while nbits < len(keys):
        nbits *= 2
    bits = frozenset(k for k, (_, pred) in enumerate(keys.keys) if pred(m))
    return FingerprintBitset("keys", nbits, bits, (keys.keyset_id,))


def tanimoto(a: FingerprintBitset, b: FingerprintBitset) -> float:
    """|a AND b| / |a OR b|; 1.0 when both bitsets are empty."""
    if (a.scheme, a.params, a.nbits) != (b.scheme, b.params, b.nbits):
        raise SchemeMismatch(
            f"cannot compare {a._tag()}/{a.nbits} with {b._tag()}/{b.nbits}")
    union = len(a.bits | b.bits)
    if union == 0:
        return 1.0
    return len(a.bits & b.bits) / union
