"""One-shot generator for pubchem_20.tsv (frozen; kept for provenance).

20 records, 7 planned drops: 2 short descriptions, 2 "natural product"
mentions, 2 sharing one description over two distinct molecules, and 1 on
the exclusion list -> 13 survivors.
"""

from pathlib import Path

LONG = ("It acts as a reference substance in several laboratory assays and "
        "has been characterized by nuclear magnetic resonance, mass "
        "spectrometry, and infrared spectroscopy across multiple independent "
        "studies reported over the past decade of work.")  # 33 words

KEEP_SMILES = ["CCO", "CCN", "CCS", "CC(C)O", "CCCO", "CCOC", "CC(=O)O",
               "CCCN", "CC(C)N", "CCCS", "CCCC", "CC(=O)N", "CCCl"]

rows = []
for k, smi in enumerate(KEEP_SMILES):
    rows.append((f"10{k:02d}", smi, f"Compound number {k} is studied. " + LONG))
rows.append(("2000", "CCBr", "A short note."))                        # short
rows.append(("2001", "CCI", "Bromide analog with data available."))   # short
rows.append(("2002", "CCCCC", "This natural product was isolated. " + LONG))
rows.append(("2003", "CCCCO", "A known Natural Product from algae. " + LONG))
shared = "One description used for two different molecules here. " + LONG
rows.append(("2004", "CCCCN", shared))                                # 1:many
rows.append(("2005", "CCCCS", shared))                                # 1:many
# Excluded via the canonical form OCCO even though it is written C(O)CO.
rows.append(("2006", "C(O)CO", "An excluded diol, written non-canonically "
             "so matching must go through the canonical form. " + LONG))

out = Path(__file__).parent / "pubchem_20.tsv"
with out.open("w", encoding="utf-8") as fh:
    fh.write("CID\tSMILES\tdescription\n")
    for cid, smi, desc in rows:
        assert "\t" not in desc
        fh.write(f"{cid}\t{smi}\t{desc}\n")
print(f"wrote {len(rows)} records")
