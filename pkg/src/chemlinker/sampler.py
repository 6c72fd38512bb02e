"""Seeded autoregressive sampling, temperature escalation, and the four-way
candidate filter with exact accounting.

Filter taxonomy (applied in this order, one outcome per candidate):
Invalid (in-alphabet but unparseable), NaturalLanguage (characters outside
the molecular alphabet), Salts (multiple fragments or a bare charged atom),
SingleElement (all heavy atoms share one element), else Pass. Deduplication
uses the canonical SMILES of parseable candidates and the raw string
otherwise; repeated candidates count as duplicates, not re-filtered.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass

import numpy as np

from chemlinker.errors import DecodeFailure, ParseError, TargetUnreached
from chemlinker.adapternet.model import forward_logits
from chemlinker.adapternet.vocab import SMILES_CHARS
from chemlinker.molstring import canonical_smiles, decode_selfies, parse_smiles
from chemlinker.rng import SplitMix64

_ALPHABET = frozenset(SMILES_CHARS)
_ALL_BRACKETS = re.compile(r"(\[[^\[\]]*\])+$")


class FilterOutcome(enum.Enum):
    PASS = "Pass"
    INVALID = "Invalid"
    NATURAL_LANGUAGE = "NaturalLanguage"
    SALTS = "Salts"
    SINGLE_ELEMENT = "SingleElement"


@dataclass
class GenerationConfig:
    target_unique: int
    max_len: int = 78
    base_temperature: float = 1.0
    base_seed: int = 42
    escalation_step: float = 0.5
    max_temperature: float = 4.5
    per_temperature_cap: int = 1000

    def __post_init__(self):
        if not 0 < self.base_temperature <= self.max_temperature:
            raise ValueError("need 0 < base_temperature <= max_temperature")
        if self.per_temperature_cap < 1:
            raise ValueError("per_temperature_cap must be >= 1")


@dataclass
class GenerationStats:
    sample: int = 0
    duplicate: int = 0
    unique: int = 0
    invalid: int = 0
    nl: int = 0
    salts: int = 0
    se: int = 0
    success: int = 0

    @property
    def success_rate(self) -> float:
        return self.success / self.unique if self.unique else 0.0

    def validate(self) -> None:
        if self.sample - self.duplicate != self.unique:
            raise ValueError("sample - duplicate != unique")
        if self.unique != (self.success + self.invalid + self.nl
                           + self.salts + self.se):
            raise ValueError("unique != success + filter rejections")

    def to_json(self) -> str:
        return json.dumps({
            "sample": self.sample, "duplicate": self.duplicate,
            "unique": self.unique, "invalid": self.invalid,
            "nl": self.nl, "salts": self.salts, "se": self.se,
            "success": self.success, "success_rate": self.success_rate,
        })


def sample_token(logits, temperature: float, rng: SplitMix64) -> int:
    """Inverse-CDF multinomial draw; consumes exactly one uniform."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    scaled = np.asarray(logits, dtype=np.float64) / temperature
    scaled -= scaled.max()
    probs = np.exp(scaled)
    probs /= probs.sum()
    u = rng.uniform()
    cum = 0.0
    for i, p in enumerate(probs):
        cum += p
        if u < cum:
            return i
    return len(probs) - 1


def generate_one(params, text_ids, cfg: GenerationConfig, rng: SplitMix64,
                 vocab, temperature: float | None = None) -> str:
    """Sample one string: BOS start, stop at EOS or max_len tokens."""
    temperature = cfg.base_temperature if temperature is None else temperature
    ids = [vocab.bos]
    out = []
    for _ in range(cfg.max_len):
        logits = forward_logits(params, text_ids, ids).data[-1]
        token = sample_token(logits, temperature, rng)
        if token == vocab.eos:
            break
        ids.append(token)
        out.append(vocab.tokens[token])
    return "".join(out)


def classify_filter(candidate: str) -> FilterOutcome:
    """One outcome per candidate; see module docstring for the order."""
    mol = None
    bracket_form = bool(_ALL_BRACKETS.fullmatch(candidate))
    try:
        mol = parse_smiles(candidate)
    except ParseError:
        if bracket_form:
            try:
                mol = decode_selfies(candidate)
            except DecodeFailure:
                mol = None
    if mol is None:
        # A pure bracket-token string is a failed SELFIES derivation, not
        # stray natural language, whatever letters the tokens contain.
        if not bracket_form and any(ch not in _ALPHABET for ch in candidate):
            return FilterOutcome.NATURAL_LANGUAGE
        return FilterOutcome.INVALID
    if len(mol.fragments()) > 1:
        return FilterOutcome.SALTS
    if len(mol.atoms) == 1 and mol.atoms[0].formal_charge != 0:
        return FilterOutcome.SALTS
    if len({a.element for a in mol.atoms}) == 1:
        return FilterOutcome.SINGLE_ELEMENT
    return FilterOutcome.PASS


def escalation_schedule(cfg: GenerationConfig) -> list[float]:
    """base, then 1.5, 2.0, ... up to max_temperature."""
    temps = [cfg.base_temperature]
    t = 1.5
    while t <= cfg.max_temperature + 1e-9:
        if abs(t - cfg.base_temperature) > 1e-9:
            temps.append(t)
        t += cfg.escalation_step
    return temps


def generate_unique_set(params, text_ids, cfg: GenerationConfig, vocab=None,
                        generate_fn=None):
    """Sample with temperature escalation until target_unique Pass molecules.

    Returns (list of canonical SMILES in discovery order, GenerationStats).
    Raises TargetUnreached (with partial molecules and stats attached) when
    the schedule is exhausted. `generate_fn(temperature, rng) -> str`
    overrides the model-based sampler (used for replay and testing).
    """
    if generate_fn is None:
        def generate_fn(temperature, rng):
            return generate_one(params, text_ids, cfg, rng, vocab,
                                temperature)
    stats = GenerationStats()
    seen: set[str] = set()
    passed: list[str] = []
    memo: dict[str, tuple[str, FilterOutcome, str | None]] = {}
    temps = escalation_schedule(cfg)
    visited: list[float] = []
    for batch_index, temperature in enumerate(temps):
        rng = SplitMix64(cfg.base_seed + batch_index)
        visited.append(temperature)
        for _ in range(cfg.per_temperature_cap):
            candidate = generate_fn(temperature, rng)
            stats.sample += 1
            if candidate not in memo:
                outcome = classify_filter(candidate)
                canon = (canonical_smiles(candidate)
                         if outcome == FilterOutcome.PASS else None)
                key = canon if canon is not None else candidate
                memo[candidate] = (key, outcome, canon)
            key, outcome, canon = memo[candidate]
            if key in seen:
                stats.duplicate += 1
                continue
            seen.add(key)
            stats.unique += 1
            if outcome == FilterOutcome.PASS:
                stats.success += 1
                passed.append(canon)
            elif outcome == FilterOutcome.INVALID:
                stats.invalid += 1
            elif outcome == FilterOutcome.NATURAL_LANGUAGE:
                stats.nl += 1
            elif outcome == FilterOutcome.SALTS:
                stats.salts += 1
            else:
                stats.se += 1
            if len(passed) >= cfg.target_unique:
                stats.validate()
                return passed, stats
    stats.validate()
    error = TargetUnreached(
        f"reached temperature {temps[-1]} with {len(passed)} of "
        f"{cfg.target_unique} unique molecules",
        molecules=passed, stats=stats)
    error.temperatures = visited
    raise error


_OUTCOME_BY_NAME = {o.value: o for o in FilterOutcome}
_OUTCOME_BY_NAME["Duplicate"] = None


def replay_stats(events) -> GenerationStats:
    """Rebuild GenerationStats from an event log of outcome names.

    Events are strings: "Duplicate" or a FilterOutcome value. Identities are
    validated before returning.
    """
    stats = GenerationStats()
    for name in events:
        if name not in _OUTCOME_BY_NAME:
            raise ValueError(f"unknown event {name!r}")
        stats.sample += 1
        if name == "Duplicate":
            stats.duplicate += 1
            continue
        stats.unique += 1
        outcome = _OUTCOME_BY_NAME[name]
        if outcome == FilterOutcome.PASS:
            stats.success += 1
        elif outcome == FilterOutcome.INVALID:
            stats.invalid += 1
        elif outcome == FilterOutcome.NATURAL_LANGUAGE:
            stats.nl += 1
        elif outcome == FilterOutcome.SALTS:
            stats.salts += 1
        else:
            stats.se += 1
    stats.validate()
    return stats


def load_event_log(path) -> GenerationStats:
    """Read a JSON event-log fixture: {"name": ..., "events": [...]}."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return replay_stats(payload["events"])
