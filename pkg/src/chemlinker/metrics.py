"""Generation-quality metrics over (generated, reference) molecule pairs.

Exact match compares canonical SMILES with stereo retained. The three
fingerprint Tanimoto similarity (FTS) means are computed over the valid
generated molecules only, so adding invalid generations lowers validity
without touching the similarity means.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from chemlinker.errors import InvalidReference, ParseError
from chemlinker.fingerprints import circular_fp, key_fp, path_fp, tanimoto
from chemlinker.molstring import canonical_smiles, parse_smiles


@dataclass(frozen=True)
class EvalReport:
    """Aggregate metrics; keys_fts/path_fts/circular_fts are the MACCS-like,
    RDK-like, and Morgan-like similarity columns respectively."""

    n_pairs: int
    n_valid: int
    validity: float
    exact: float
    maccs_fts: float
    rdk_fts: float
    morgan_fts: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def to_tsv(self) -> str:
        header = ("n_pairs\tn_valid\tvalidity\texact\t"
                  "maccs_fts\trdk_fts\tmorgan_fts")
        row = (f"{self.n_pairs}\t{self.n_valid}\t{self.validity:.6f}\t"
               f"{self.exact:.6f}\t{self.maccs_fts:.6f}\t"
               f"{self.rdk_fts:.6f}\t{self.morgan_fts:.6f}")
        return header + "\n" + row


def exact_match(generated: str, reference: str) -> bool:
    """True iff both strings parse and canonicalize identically."""
    ref = canonical_smiles(reference)
    try:
        gen = canonical_smiles(generated)
    except ParseError:
        return False
    return gen == ref


def evaluate_pairs(pairs) -> EvalReport:
    """Score (generated, reference) string pairs.

    Every reference must parse (InvalidReference otherwise); generated
    strings may be arbitrary. Means are accumulated in input order.
    """
    pairs = list(pairs)
    n = len(pairs)
    n_valid = 0
    n_exact = 0
    sums = [0.0, 0.0, 0.0]    # keys, path, circular
    for generated, reference in pairs:
        try:
            ref_mol = parse_smiles(reference)
        except ParseError as exc:
            raise InvalidReference(
                f"reference does not parse: {reference!r}") from exc
        try:
            gen_mol = parse_smiles(generated)
        except ParseError:
            continue
        n_valid += 1
        if canonical_smiles(gen_mol) == canonical_smiles(ref_mol):
            n_exact += 1
        sums[0] += tanimoto(key_fp(gen_mol), key_fp(ref_mol))
        sums[1] += tanimoto(path_fp(gen_mol), path_fp(ref_mol))
        sums[2] += tanimoto(circular_fp(gen_mol), circular_fp(ref_mol))
    if n == 0:
        return EvalReport(0, 0, 0.0, 0.0, 0.0, 0.0, 0.0)
    means = [s / n_valid if n_valid else 0.0 for s in sums]
    return EvalReport(
        n_pairs=n,
        n_valid=n_valid,
        validity=n_valid / n,
        exact=n_exact / n,
        maccs_fts=means[0],
        rdk_fts=means[1],
        morgan_fts=means[2],
    )


def load_pairs_tsv(path) -> list[tuple[str, str]]:
    """Read `generated<TAB>reference` rows; blank lines are skipped."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            generated, reference = line.split("\t")
            pairs.append((generated, reference))
    return pairs
