"""Build a region-attribute corresponding table and refine it with an expert.

Matching is Eq.-style thresholded cosine similarity (alpha = 0.2).  When the
matched subset of attributes is ambiguous ("wheels, windows" could be car,
bus, or train), the expert loop asks for discriminative attributes and
rebuilds the table, at most three times.  Here the expert is a scripted
fixture and the embedder maps phrases to hand-built unit vectors, so the run
is fully deterministic.
"""

import numpy as np

from fewseg import Polygon16, build_table, refine_table
from fewseg.backends import ScriptedOracle
from fewseg.tablegen import Attribute, Region, ambiguity_prompt, discriminative_prompt


def unit(i, dim=8):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


def polygon(offset):
    return Polygon16(tuple((offset + k, offset) for k in range(16)))


class ToyEmbedder:
    vectors = {
        "wheels": unit(0),
        "windows": unit(1),
        "long articulated body": 0.95 * unit(2) + np.sqrt(1 - 0.95 ** 2) * unit(5),
    }

    def embed_text(self, phrase):
        return self.vectors[phrase]

    def embed_region(self, descriptor):
        raise NotImplementedError("regions arrive pre-embedded in this demo")


regions = [Region("wheel-region", polygon(10), unit(0)),
           Region("window-region", polygon(40), unit(1)),
           Region("body-region", polygon(80), unit(2))]
attributes = [Attribute("wheels", unit(0)), Attribute("windows", unit(1))]

plain = build_table(regions, attributes, alpha=0.2, category="train")
print("initial table:")
for rid, row in plain.rows.items():
    print(f"  {rid}: {list(row) or '(no match)'}")

oracle = ScriptedOracle({
    ambiguity_prompt("train", ["wheels", "windows"]):
        "the following classes also have them: car, bus",
    discriminative_prompt("train", ["car", "bus"]):
        "train has long articulated body",
})

refined = refine_table("train", regions, attributes, ToyEmbedder(), oracle)
print("\nafter refinement:")
for rid, row in refined.rows.items():
    print(f"  {rid}: {list(row) or '(no match)'}")
prov = refined.provenance
print(f"\niterations: {prov.iterations}  status: {prov.status}")
print("ambiguous classes:", list(prov.ambiguous_classes))
print("discriminative attributes added:", list(prov.discriminative_attributes))
print("\noracle transcript:")
for prompt, response in prov.transcript:
    print("  Q:", prompt[:90], "...")
    print("  A:", response)
