"""SELFIES-style robust molecular token strings.

The dialect is a derivation-state machine over the package valence table.
Branch and Ring operators read base-16 index tokens (one per Branch1/Ring1,
two per Branch2/Ring2, three per Branch3/Ring3); bond orders are capped to
the remaining valence of both endpoints, dangling branch/ring payloads are
truncated, and unknown tokens are skipped, so any token string containing
at least one derivable atom decodes to a valence-valid molecule.

Stereo is not supported: callers strip stereo before encoding. Aromatic
rings are encoded in Kekule form and re-perceived after decoding.
"""

from __future__ import annotations

import re

from chemlinker.errors import DecodeFailure, UnsupportedFeature
from chemlinker.molstring.kekulize import aromatize, kekulized
from chemlinker.molstring.model import (
    DOUBLE,
    SINGLE,
    TRIPLE,
    VALENCES,
    Atom,
    Bond,
    Molecule,
    allowed_valences,
)

EOS = "[EOS]"

# Index tokens: position in this list is the base-16 digit value.
INDEX_ALPHABET = (
    "[C]", "[Ring1]", "[Ring2]",
    "[Branch1]", "[=Branch1]", "[#Branch1]",
    "[Branch2]", "[=Branch2]", "[#Branch2]",
    "[O]", "[N]", "[=N]", "[=C]", "[#C]", "[S]", "[P]",
)
_INDEX_VALUE = {tok: v for v, tok in enumerate(INDEX_ALPHABET)}

_ORDER_PREFIX = {"": SINGLE, "=": DOUBLE, "#": TRIPLE}
_PREFIX_OF = {SINGLE: "", DOUBLE: "=", TRIPLE: "#"}

_ATOM_RE = re.compile(
    r"\[(?P<prefix>[=#]?)(?P<element>B|C|N|O|P|S|F|Cl|Br|I)"
    r"(?P<charge>[+-][1-9])?\]")
_BRANCH_RE = re.compile(r"\[(?P<prefix>[=#]?)Branch(?P<size>[123])\]")
_RING_RE = re.compile(r"\[(?P<prefix>[=#]?)Ring(?P<size>[123])\]")
_TOKEN_RE = re.compile(r"\[[^\[\]]*\]")


def token_alphabet() -> list[str]:
    """Every token the decoder gives meaning to."""
    tokens = []
    for el in VALENCES:
        for prefix in ("", "=", "#"):
            for charge in ("", "+1", "-1"):
                tokens.append(f"[{prefix}{el}{charge}]")
    for kind in ("Branch", "Ring"):
        for prefix in ("", "=", "#"):
            for size in "123":
                tokens.append(f"[{prefix}{kind}{size}]")
    tokens.append(EOS)
    return tokens


def split_tokens(text: str) -> list[str]:
    """Split a concatenated bracket-token string into tokens."""
    tokens = _TOKEN_RE.findall(text)
    if "".join(tokens) != text.replace(" ", ""):
        raise DecodeFailure(f"not a bracket token string: {text!r}")
    return tokens


def _capacity(element: str, charge: int) -> int:
    return max(allowed_valences(element, charge))


# --- decoding ----------------------------------------------------------------


class _Deriver:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.atoms: list[Atom] = []
        self.bonds: list[Bond] = []
        self.capacity: list[int] = []
        self.order: list[int] = []      # derivation order of atom indices
        self.stopped = False

    def derive(self, pos: int, limit: int, attach: int | None,
               init_order: int) -> int:
        """Derive a chain from tokens[pos:limit]; returns next position."""
        prev = attach
        pending = init_order
        while pos < limit and not self.stopped:
            tok = self.tokens[pos]
            if tok == EOS:
                self.stopped = True
                return limit
            m = _ATOM_RE.fullmatch(tok)
            if m:
                pos += 1
                charge = int(m.group("charge") or 0)
                requested = max(pending, _ORDER_PREFIX[m.group("prefix")])
                pending = SINGLE
                cap = _capacity(m.group("element"), charge)
                if prev is not None:
                    order = min(requested, self.capacity[prev], cap)
                    if order <= 0:
                        # Previous atom is saturated: this derivation level
                        # cannot continue.
                        return limit
                else:
                    order = 0
                idx = len(self.atoms)
                self.atoms.append(Atom(element=m.group("element"),
                                       formal_charge=charge))
                self.capacity.append(cap - order)
                if prev is not None:
                    self.bonds.append(Bond(a=prev, b=idx, order=order))
                    self.capacity[prev] -= order
                prev = idx
                continue
            m = _BRANCH_RE.fullmatch(tok)
            if m:
                pos += 1
                q, pos = self._read_index(pos, int(m.group("size")), limit)
                length = min(q + 1, limit - pos)
                if prev is not None and self.capacity[prev] >= 2:
                    self.derive(pos, pos + length, prev,
                                _ORDER_PREFIX[m.group("prefix")])
                pos += length
                continue
            m = _RING_RE.fullmatch(tok)
            if m:
                pos += 1
                q, pos = self._read_index(pos, int(m.group("size")), limit)
                if prev is not None:
                    self._close_ring(prev, q + 1,
                                     _ORDER_PREFIX[m.group("prefix")])
                continue
            pos += 1   # unknown token: skipped by policy
        return pos

    def _read_index(self, pos: int, n_digits: int,
                    limit: int) -> tuple[int, int]:
        value = 0
        for _ in range(n_digits):
            digit = 0
            if pos < limit:
                digit = _INDEX_VALUE.get(self.tokens[pos], 0)
                pos += 1
            value = value * 16 + digit
        return value, pos

    def _close_ring(self, cur: int, distance: int, order: int) -> None:
        target = max(0, cur - distance)
        if target == cur:
            return
        if any((b.a, b.b) in ((cur, target), (target, cur))
               for b in self.bonds):
            return
        order = min(order, self.capacity[cur], self.capacity[target])
        if order <= 0:
            return
        self.bonds.append(Bond(a=target, b=cur, order=order))
        self.capacity[cur] -= order
        self.capacity[target] -= order


def decode_selfies(tokens) -> Molecule:
    """Decode a token string (list of tokens or concatenated string).

    Raises DecodeFailure only when no atom can be derived; every other
    input decodes to a valence-valid Molecule.
    """
    if isinstance(tokens, str):
        tokens = split_tokens(tokens)
    deriver = _Deriver(list(tokens))
    deriver.derive(0, len(deriver.tokens), None, SINGLE)
    if not deriver.atoms:
        raise DecodeFailure("no atoms derivable from token string")
    mol = Molecule(deriver.atoms, deriver.bonds)
    return aromatize(mol)


# --- encoding -----------------------------------------------------------------


def encode_selfies(m: Molecule) -> list[str]:
    """Encode a single-fragment, stereo-free molecule as SELFIES tokens."""
    if len(m.fragments()) != 1:
        raise UnsupportedFeature("SELFIES encoding requires a single fragment")
    if m.has_stereo():
        raise UnsupportedFeature("strip stereo before SELFIES encoding")
    mk = kekulized(m)
    for i, atom in enumerate(mk.atoms):
        if atom.element not in VALENCES:
            raise UnsupportedFeature(
                f"element {atom.element} outside the SELFIES alphabet")
        if atom.isotope is not None:
            raise UnsupportedFeature("isotopes not representable in SELFIES")
        if abs(atom.formal_charge) > 1:
            raise UnsupportedFeature("charges beyond +/-1 not representable")
        if atom.explicit_h is not None \
                and atom.explicit_h != _default_h(mk, i):
            raise UnsupportedFeature(
                "non-default hydrogen count not representable in SELFIES")

    bond_index = {id(b): k for k, b in enumerate(mk.bonds)}
    visited: set[int] = set()
    used: set[int] = set()
    position: dict[int, int] = {}   # atom -> derivation position
    counter = [0]

    def atom_token(i: int, order: int) -> str:
        atom = mk.atoms[i]
        charge = ""
        if atom.formal_charge:
            charge = f"{'+' if atom.formal_charge > 0 else '-'}1"
        return f"[{_PREFIX_OF[order]}{atom.element}{charge}]"

    def index_tokens(value: int) -> tuple[str, list[str]]:
        """Returns (operator size char, index token list) for value."""
        digits = []
        v = value
        while v:
            digits.append(v % 16)
            v //= 16
        digits = digits[::-1] or [0]
        size = len(digits)
        if size > 3:
            raise UnsupportedFeature("molecule too large for Ring3/Branch3")
        return str(size), [INDEX_ALPHABET[d] for d in digits]

    def emit(i: int, bond_order: int) -> list[str]:
        visited.add(i)
        position[i] = counter[0]
        counter[0] += 1
        tokens = [atom_token(i, bond_order)]
        closures = []
        children = []
        for b in mk.bonds_of(i):
            k = bond_index[id(b)]
            if k in used:
                continue
            j = b.other(i)
            if j in visited:
                closures.append((b, k, j))
            else:
                children.append((b, k, j))
        for b, k, j in sorted(closures, key=lambda c: position[c[2]]):
            used.add(k)
            distance = position[i] - position[j]
            size, idx = index_tokens(distance - 1)
            tokens.append(f"[{_PREFIX_OF[b.order]}Ring{size}]")
            tokens.extend(idx)
        subtrees = []
        for b, k, j in children:
            if k in used:
                continue
            # A neighbor first visited inside an earlier subtree closes the
            # ring from its own side, marking the bond used there.
            assert j not in visited
            used.add(k)
            subtrees.append(emit(j, b.order))
        for sub in subtrees[:-1]:
            size, idx = index_tokens(len(sub) - 1)
            tokens.append(f"[Branch{size}]")
            tokens.extend(idx)
            tokens.extend(sub)
        if subtrees:
            tokens.extend(subtrees[-1])
        return tokens

    return emit(0, SINGLE)


def _default_h(m: Molecule, i: int) -> int:
    atom = m.atoms[i]
    bosum = m.base_order_sum(i)
    vals = allowed_valences(atom.element, atom.formal_charge)
    fitting = [v for v in vals if v >= bosum]
    return fitting[0] - bosum if fitting else -1
