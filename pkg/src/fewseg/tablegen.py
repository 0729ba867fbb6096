"""Region-attribute corresponding table and the expert-guide refinement loop.

Regions arrive pre-segmented with embeddings supplied by a pluggable Embedder;
expert knowledge arrives as raw text replies from a pluggable ExpertOracle that
must follow the reply formats requested in the prompts below.  Building the
table is a thresholded cosine match; refinement iteratively asks the oracle for
ambiguous classes and discriminative attributes until the table disambiguates
or the iteration cap is hit.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

import numpy as np

from .errors import DegenerateVectorError, OracleProtocolError, ParameterError, ShapeError
from .geometry import Polygon16

DEFAULT_ALPHA = 0.2
MAX_REFINE_ITERATIONS = 3

ATTRIBUTE_PROMPT = (
    "What does a {category} look like? Please answer in the format of: "
    "A {category} has A, B, C,..., where A, B, and C are noun phrases to "
    "describe a {category}."
)
AMBIGUITY_PROMPT = (
    "Except for {category}, which classes also have {partial}? Please answer "
    "in the format of: the following classes also have them: A, B, C, ..., "
    "where A, B and C are the name of classes. If there is no such a class, "
    "reply 'no'."
)
DISCRIMINATIVE_PROMPT = (
    "What does {category} look different from {a_classes}? Please answer in "
    "the format of: {category} has A, B, C,..., where A,B and C are noun "
    "phrases to describe the difference of {category} compared to {a_classes}."
)
DISCRIMINATIVE_MORE_PROMPT = (
    "Apart from {seen}, tell me more differences in appearance between "
    "{category} and {a_classes}. Please answer in the format of: {category} "
    "has A, B, C,..., where A,B and C are noun phrases to describe more "
    "differences of {category} compared to {a_classes} apart from the given ones."
)

_AMBIGUITY_REPLY_PREFIX = re.compile(
    r"^\s*the following classes also have them\s*:\s*", re.IGNORECASE)
_NO_REPLY = re.compile(r"^\s*['\"`]*no['\"`.]*\s*$", re.IGNORECASE)


def _unit(vec, what: str) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{what} embedding must be a vector, got shape {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > 1e-6:
        raise ParameterError(f"{what} embedding must be unit-normalized, |v| = {norm}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Region:
    """A pre-segmented support region: id, polygon form, unit embedding."""

    id: str
    polygon: Polygon16
    embedding: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "embedding", _unit(self.embedding, "region"))


@dataclass(frozen=True, eq=False)
class Attribute:
    """A noun phrase describing the class, with its unit text embedding."""

    text: str
    embedding: np.ndarray

    def __post_init__(self):
        if not self.text.strip():
            raise ParameterError("attribute text must be non-empty")
        object.__setattr__(self, "embedding", _unit(self.embedding, "attribute"))


@dataclass(frozen=True)
class RefinementProvenance:
    """What the refinement loop did: oracle exchanges and outcomes."""

    iterations: int = 0
    ambiguous_classes: tuple[str, ...] = ()
    discriminative_attributes: tuple[str, ...] = ()
    status: str = "resolved"  # resolved | unresolved
    transcript: tuple[tuple[str, str], ...] = ()  # (prompt, raw response)

    def __post_init__(self):
        if self.status not in ("resolved", "unresolved"):
            raise ParameterError(f"unknown status {self.status!r}")


@dataclass(frozen=True)
class CorrespondingTable:
    """Per-region lists of matched attribute texts, in attribute input order."""

    rows: dict[str, tuple[str, ...]]
    alpha: float
    provenance: RefinementProvenance = RefinementProvenance()
    category: str | None = None

    def to_record(self) -> dict:
        return {
            "category": self.category,
            "alpha": self.alpha,
            "rows": {rid: list(attrs) for rid, attrs in self.rows.items()},
            "provenance": {
                "iterations": self.provenance.iterations,
                "ambiguous_classes": list(self.provenance.ambiguous_classes),
                "discriminative_attributes": list(self.provenance.discriminative_attributes),
                "status": self.provenance.status,
                "transcript": [
                    {"prompt": p, "response": r} for p, r in self.provenance.transcript
                ],
            },
        }

    @classmethod
    def from_record(cls, record: dict) -> "CorrespondingTable":
        prov = record.get("provenance", {})
        return cls(
            rows={rid: tuple(attrs) for rid, attrs in record["rows"].items()},
            alpha=record["alpha"],
            provenance=RefinementProvenance(
                iterations=prov.get("iterations", 0),
                ambiguous_classes=tuple(prov.get("ambiguous_classes", ())),
                discriminative_attributes=tuple(prov.get("discriminative_attributes", ())),
                status=prov.get("status", "resolved"),
                transcript=tuple((e["prompt"], e["response"])
                                 for e in prov.get("transcript", ())),
            ),
            category=record.get("category"),
        )


class Embedder(Protocol):
    """Deterministic embedding backend with a fixed dimensionality."""

    def embed_region(self, descriptor: str) -> np.ndarray: ...

    def embed_text(self, phrase: str) -> np.ndarray: ...


class ExpertOracle(Protocol):
    """Expert backend; every method returns the raw reply text."""

    def list_attributes(self, category: str) -> str: ...

    def detect_ambiguity(self, category: str, partial_attributes: Sequence[str]) -> str: ...

    def discriminate(self, category: str, ambiguous_classes: Sequence[str],
                     seen_attributes: Sequence[str]) -> str: ...


def attribute_prompt(category: str) -> str:
    return ATTRIBUTE_PROMPT.format(category=category)


def ambiguity_prompt(category: str, partial_attributes: Sequence[str]) -> str:
    return AMBIGUITY_PROMPT.format(category=category,
                                   partial=", ".join(partial_attributes))


def discriminative_prompt(category: str, ambiguous_classes: Sequence[str],
                          seen_attributes: Sequence[str] = ()) -> str:
    """First-round prompt, or the 'Apart from ...' variant once attributes exist."""
    a_classes = ", ".join(ambiguous_classes)
    if seen_attributes:
        return DISCRIMINATIVE_MORE_PROMPT.format(
            category=category, a_classes=a_classes, seen=", ".join(seen_attributes))
    return DISCRIMINATIVE_PROMPT.format(category=category, a_classes=a_classes)


def prompt_key(prompt: str) -> str:
    """Canonical fixture key for a prompt."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _split_items(body: str) -> list[str]:
    items = []
    for piece in body.split(","):
        piece = piece.strip().rstrip(".").strip()
        if piece.lower().startswith("and "):
            piece = piece[4:].strip()
        if piece:
            items.append(piece)
    return items


def parse_ambiguity_response(text: str) -> list[str]:
    """Class names from an ambiguity reply; empty list means 'no ambiguity'."""
    if _NO_REPLY.match(text):
        return []
    m = _AMBIGUITY_REPLY_PREFIX.match(text)
    if m is None:
        raise OracleProtocolError("ambiguity reply matches neither 'no' nor the class-list format", text)
    items = _split_items(text[m.end():])
    if not items:
        raise OracleProtocolError("ambiguity reply lists no classes", text)
    return items


def render_ambiguity_response(classes: Sequence[str]) -> str:
    """Canonical surface form of an ambiguity reply."""
    if not classes:
        return "no"
    return "the following classes also have them: " + ", ".join(classes)


def parse_attribute_response(text: str, category: str) -> list[str]:
    """Attribute phrases from a '[class] has A, B, C' style reply."""
    pattern = re.compile(
        r"^\s*(?:(?:a|an|the)\s+)?" + re.escape(category) + r"\s+has\s+(.+)$",
        re.IGNORECASE | re.DOTALL)
    m = pattern.match(text)
    if m is None:
        raise OracleProtocolError(
            f"attribute reply does not match '{category} has ...'", text)
    items = _split_items(m.group(1))
    if not items:
        raise OracleProtocolError("attribute reply lists no phrases", text)
    return items


def render_attribute_response(category: str, phrases: Sequence[str]) -> str:
    """Canonical surface form of an attribute reply."""
    if not phrases:
        raise ParameterError("cannot render an empty attribute list")
    return f"{category} has {', '.join(phrases)}"


def cosine(u, v) -> float:
    """Cosine similarity of two vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ShapeError(f"vector shapes differ: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("cosine similarity undefined for zero-norm vectors")
    return float(np.dot(u, v)) / (nu * nv)


def build_table(regions: Sequence[Region], attributes: Sequence[Attribute],
                alpha: float = DEFAULT_ALPHA, category: str | None = None,
                provenance: RefinementProvenance = RefinementProvenance(),
                ) -> CorrespondingTable:
    """Row i holds exactly the attributes with cos(f_i, t_j) strictly above alpha."""
    if not (-1.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (-1, 1), got {alpha}")
    rows: dict[str, tuple[str, ...]] = {}
    for region in regions:
        matched = tuple(att.text for att in attributes
                        if cosine(region.embedding, att.embedding) > alpha)
        rows[region.id] = matched
    return CorrespondingTable(rows=rows, alpha=alpha, provenance=provenance,
                              category=category)


def fetch_attributes(category: str, oracle: ExpertOracle,
                     embedder: Embedder) -> list[Attribute]:
    """Ask the oracle for class attributes and embed each phrase."""
    raw = oracle.list_attributes(category)
    phrases = parse_attribute_response(raw, category)
    return [Attribute(text, embedder.embed_text(text)) for text in phrases]


def _normalized(text: str) -> str:
    return " ".join(text.split()).casefold()


def _partial_attributes(table: CorrespondingTable) -> list[str]:
    """Union of matched attributes across rows, first-occurrence order."""
    seen = set()
    partial = []
    for attrs in table.rows.values():
        for text in attrs:
            key = _normalized(text)
            if key not in seen:
                seen.add(key)
                partial.append(text)
    return partial


def refine_table(category: str, regions: Sequence[Region],
                 attributes: Sequence[Attribute], embedder: Embedder,
                 oracle: ExpertOracle, alpha: float = DEFAULT_ALPHA,
                 max_iterations: int = MAX_REFINE_ITERATIONS) -> CorrespondingTable:
    """Expert-guide refinement: detect ambiguity, add discriminative attributes,
    rebuild, until a new attribute matches a region or the iteration cap hits.
    """
    if not regions or not attributes:
        raise ParameterError("refinement needs non-empty regions and attributes")
    attributes = list(attributes)
    known = {_normalized(a.text) for a in attributes}
    table = build_table(regions, attributes, alpha, category)

    transcript: list[tuple[str, str]] = []
    ambiguous_all: list[str] = []
    d_atts: list[str] = []
    iterations = 0
    status = "unresolved"

    while True:
        prompt = ambiguity_prompt(category, _partial_attributes(table))
        raw = oracle.detect_ambiguity(category, _partial_attributes(table))
        transcript.append((prompt, raw))
        ambiguous = parse_ambiguity_response(raw)
        if not ambiguous:
            status = "resolved"
            break
        for name in ambiguous:
            if name not in ambiguous_all:
                ambiguous_all.append(name)

        prompt = discriminative_prompt(category, ambiguous, d_atts)
        raw = oracle.discriminate(category, ambiguous, list(d_atts))
        transcript.append((prompt, raw))
        fresh = []
        for text in parse_attribute_response(raw, category):
            key = _normalized(text)
            if key not in known:
                known.add(key)
                fresh.append(text)
        d_atts.extend(fresh)
        attributes.extend(Attribute(t, embedder.embed_text(t)) for t in fresh)
        table = build_table(regions, attributes, alpha, category)
        iterations += 1

        matched_texts = {t for attrs in table.rows.values() for t in attrs}
        if any(t in matched_texts for t in fresh):
            status = "resolved"
            break
        if iterations >= max_iterations:
            status = "unresolved"
            break

    provenance = RefinementProvenance(
        iterations=iterations,
        ambiguous_classes=tuple(ambiguous_all),
        discriminative_attributes=tuple(d_atts),
        status=status,
        transcript=tuple(transcript),
    )
    return replace(table, provenance=provenance)
