"""Tests for fingerprint schemes, including an independent environment oracle."""

import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemlinker.errors import SchemeMismatch
from chemlinker.fingerprints import (
    FingerprintBitset,
    KeySet,
    circular_fp,
    default_keyset,
    fnv1a64,
    key_fp,
    path_fp,
    tanimoto,
)
from chemlinker.molstring import parse_smiles
from chemlinker.molstring.model import ELEMENT_NUMBERS

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = (FIXTURES / "corpus_500.smi").read_text().split()


# --- independent oracle: brute-force environment enumeration -------------------
#
# Re-derives circular fingerprint bits from scratch: builds each atom-centered
# neighborhood as an explicit nested tuple tree, serializes it with its own
# byte packer, and hashes. Shares only the hash function with the library.


def _oracle_atom_fields(m, i):
    a = m.atoms[i]
    return (ELEMENT_NUMBERS[a.element], a.formal_charge % (1 << 32),
            m.degree(i), m.hydrogen_count(i))


def _oracle_tree(m, i, parent, depth):
    children = []
    if depth > 0:
        for b in m.bonds_of(i):
            j = b.other(i)
            if j != parent:
                children.append((b.order, _oracle_tree(m, j, i, depth - 1)))
    return (_oracle_atom_fields(m, i), children)


def _oracle_bytes(tree):
    fields, children = tree
    out = b"".join(v.to_bytes(4, "little") for v in fields)
    rendered = sorted((order, _oracle_bytes(child))
                      for order, child in children)
    for order, blob in rendered:
        out += order.to_bytes(4, "little") + blob
    return out


def oracle_circular_bits(m, radius, nbits):
    bits = set()
    for i in range(len(m.atoms)):
        for r in range(radius + 1):
            blob = _oracle_bytes(_oracle_tree(m, i, None, r))
            bits.add(fnv1a64(blob) % nbits)
    return frozenset(bits)


def test_circular_matches_oracle_on_small_molecules():
    small = [s for s in CORPUS if len(parse_smiles(s).atoms) <= 12][:60]
    assert len(small) >= 20
    for s in small + ["C", "c1ccccc1", "CC(N)C(=O)O", "c1cc[nH]c1"]:
        m = parse_smiles(s)
        for radius in (0, 1, 2):
            assert (circular_fp(m, radius).bits
                    == oracle_circular_bits(m, radius, 2048)), (s, radius)


# --- pinned examples -----------------------------------------------------------


def test_methane_single_environment():
    assert len(circular_fp(parse_smiles("C"), radius=0).bits) == 1


def test_benzene_radius1_two_environments():
    assert len(circular_fp(parse_smiles("c1ccccc1"), radius=1).bits) == 2


def test_ethane_single_path():
    assert len(path_fp(parse_smiles("CC"), max_len=7).bits) == 1


def test_ethanol_two_short_paths():
    assert len(path_fp(parse_smiles("CCO"), max_len=1).bits) == 2


def test_key_fp_benzene():
    ks = default_keyset()
    names = [name for name, _ in ks.keys]
    bits = key_fp(parse_smiles("c1ccccc1")).bits
    assert names.index("aromatic_ring") in bits
    assert names.index("ring_size_6") in bits
    assert names.index("any_charge") not in bits


def test_key_fp_empty_keyset():
    empty = KeySet("empty", ())
    assert key_fp(parse_smiles("CCO"), empty).bits == frozenset()


# --- tanimoto -------------------------------------------------------------------


def _fp(bits, scheme="circular", nbits=2048, params=(2,)):
    return FingerprintBitset(scheme, nbits, frozenset(bits), params)


def test_tanimoto_examples():
    assert tanimoto(_fp({1, 2, 3}), _fp({1, 2, 3})) == 1.0
    assert tanimoto(_fp({1, 2, 3}), _fp({3, 4})) == 0.25
    assert tanimoto(_fp({1, 2}), _fp({3, 4})) == 0.0
    assert tanimoto(_fp(set()), _fp(set())) == 1.0


def test_tanimoto_scheme_mismatch():
    with pytest.raises(SchemeMismatch):
        tanimoto(_fp({1}), _fp({1}, scheme="path", params=(7,)))
    with pytest.raises(SchemeMismatch):
        tanimoto(_fp({1}), _fp({1}, params=(3,)))
    with pytest.raises(SchemeMismatch):
        tanimoto(_fp({1}), _fp({1}, nbits=1024))


@settings(max_examples=200, deadline=None)
@given(st.frozensets(st.integers(0, 2047), max_size=64),
       st.frozensets(st.integers(0, 2047), max_size=64))
def test_tanimoto_properties(a, b):
    s = tanimoto(_fp(a), _fp(b))
    assert 0.0 <= s <= 1.0
    assert s == tanimoto(_fp(b), _fp(a))
    assert tanimoto(_fp(a), _fp(a)) == 1.0


# --- invariance and monotonicity -------------------------------------------------


def test_all_schemes_permutation_invariant():
    rng = random.Random(11)
    for s in CORPUS[:30]:
        m = parse_smiles(s)
        ref = (circular_fp(m).bits, path_fp(m).bits, key_fp(m).bits)
        for _ in range(5):
            perm = list(range(len(m.atoms)))
            rng.shuffle(perm)
            mm = m.renumbered(perm)
            assert (circular_fp(mm).bits, path_fp(mm).bits,
                    key_fp(mm).bits) == ref, s


def test_radius_and_length_monotonicity():
    for s in CORPUS[:30]:
        m = parse_smiles(s)
        prev = frozenset()
        for radius in range(4):
            cur = circular_fp(m, radius).bits
            assert prev <= cur
            prev = cur
        prev = frozenset()
        for max_len in range(1, 8):
            cur = path_fp(m, max_len).bits
            assert prev <= cur
            prev = cur


def test_hex_serialization_round_trip_shape():
    fp = circular_fp(parse_smiles("CCO"))
    text = fp.to_hex()
    tag, rest = text.split("/")
    nbits, hexpart = rest.split(":")
    assert tag == "circ2" and int(nbits) == 2048
    raw = bytes.fromhex(hexpart)
    assert len(raw) == 2048 // 8
    decoded = {i * 8 + k for i, byte in enumerate(raw)
               for k in range(8) if byte >> k & 1}
    assert decoded == set(fp.bits)


def test_fnv1a64_reference_vectors():
    # Published FNV-1a 64-bit test vectors.
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8
