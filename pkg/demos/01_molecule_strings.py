"""Tour of the molecular string layer: parsing, canonicalization, SELFIES.

Run with: python3 demos/01_molecule_strings.py
"""

from chemlinker.molstring import (
    canonical_smiles,
    decode_selfies,
    encode_selfies,
    parse_smiles,
)

print("== Canonicalization ==")
print("Every way of writing a molecule maps to one canonical string:")
for smiles in ["OCC", "CCO", "C(C)O", "C(O)C"]:
    print(f"  {smiles:8s} -> {canonical_smiles(smiles)}")

print()
print("Aromatic rings are validated (Kekule assignment must exist) and")
print("written back in aromatic form:")
aspirin = "CC(=O)Oc1ccccc1C(=O)O"
print(f"  aspirin: {canonical_smiles(aspirin)}")

print()
print("== SELFIES ==")
print("A SELFIES string is a sequence of bracket tokens that ALWAYS decodes")
print("to a valid molecule; branch and ring tokens carry their own lengths.")
mol = parse_smiles("Cc1ccc(O)cc1")   # 4-methylphenol
tokens = encode_selfies(mol)
print(f"  4-methylphenol -> {''.join(tokens)}")
back = decode_selfies("".join(tokens))
print(f"  ...and back    -> {canonical_smiles(back)}")

print()
print("Robustness: even a mangled token stream still decodes to something")
print("chemically valid (excess bond orders and truncations are repaired):")
for garbled in ["[C][#C][#C][C]", "[C][Branch1]", "[O][=O]"]:
    print(f"  {garbled:18s} -> {canonical_smiles(decode_selfies(garbled))}")
