"""Deterministic test backends for the embedder and expert-oracle interfaces.

Real CLIP encoders and live chat experts are out of scope; these stand-ins are
reproducible without network access or model weights.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import OracleProtocolError
from .tablegen import (
    ambiguity_prompt,
    attribute_prompt,
    discriminative_prompt,
    prompt_key,
)


class HashEmbedder:
    """Unit vectors derived from a SHA-256 of the input string.

    Distinct inputs get pseudo-random, nearly orthogonal directions; identical
    inputs always embed identically.  Region and text inputs are namespaced so
    the two modalities never collide by accident.
    """

    def __init__(self, dim: int = 64):
        self.dim = dim

    def _vector(self, namespace: str, value: str) -> np.ndarray:
        digest = hashlib.sha256(f"{namespace}:{value}".encode("utf-8")).digest()
        seed = np.frombuffer(digest, dtype=np.uint32)
        rng = np.random.default_rng(np.random.SeedSequence(seed.tolist()))
        vec = rng.standard_normal(self.dim)
        return vec / np.linalg.norm(vec)

    def embed_region(self, descriptor: str) -> np.ndarray:
        return self._vector("region", descriptor)

    def embed_text(self, phrase: str) -> np.ndarray:
        return self._vector("text", phrase)


class ScriptedOracle:
    """Fixture-backed expert: replies are looked up by canonical prompt hash."""

    def __init__(self, responses: dict[str, str]):
        # keys may be raw prompts or already-hashed prompt keys
        self._responses: dict[str, str] = {}
        for key, value in responses.items():
            if len(key) == 64 and all(c in "0123456789abcdef" for c in key):
                self._responses[key] = value
            else:
                self._responses[prompt_key(key)] = value

    @classmethod
    def from_fixture(cls, path: str | Path) -> "ScriptedOracle":
        """Load plain-text request/response pairs from a JSON fixture file."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls({entry["prompt"]: entry["response"] for entry in data["entries"]})

    def _reply(self, prompt: str) -> str:
        key = prompt_key(prompt)
        if key not in self._responses:
            raise OracleProtocolError("no scripted response for prompt", prompt)
        return self._responses[key]

    def list_attributes(self, category: str) -> str:
        return self._reply(attribute_prompt(category))

    def detect_ambiguity(self, category: str, partial_attributes) -> str:
        return self._reply(ambiguity_prompt(category, partial_attributes))

    def discriminate(self, category: str, ambiguous_classes, seen_attributes) -> str:
        return self._reply(discriminative_prompt(category, ambiguous_classes,
                                                 seen_attributes))
