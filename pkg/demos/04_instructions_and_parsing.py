"""Render the four instruction kinds and parse model output back to polygons.

Coordinates always travel as [c-v] vocabulary tokens; visual-token slots such
as [support image] stay symbolic and their byte spans are reported so a model
pipeline can splice real tokens in.  The parser accepts token or bare-integer
coordinates and reports byte offsets on malformed output.
"""

import numpy as np

from fewseg import (
    Polygon16,
    PolygonTuple,
    ShotExample,
    encode_polygon_tuple,
    parse_polygon_output,
    render_multishot_instruction,
    render_task_instruction,
)
from fewseg.errors import PolygonParseError
from fewseg.tablegen import CorrespondingTable

gt = Polygon16(tuple((192 + int(90 * np.cos(k * np.pi / 8)),
                      192 + int(90 * np.sin(k * np.pi / 8))) for k in range(16)))

task = render_task_instruction("owl", 384, [gt])
print("=== task instruction ===")
print(task.text[:300] + " ...")
print("symbolic slots:", task.placeholder_spans)

table = CorrespondingTable(rows={"r0": ("round body",)}, alpha=0.2)
shot = ShotExample(gt_polygons=(gt,), table=table, region_polygons={"r0": gt})
multi = render_multishot_instruction("owl", ["round body", "short beak"], [shot, shot], 384)
print("\n=== multi-shot (K=2) ===")
print("...", multi.text[-260:])

print("\n=== parsing model output ===")
text = encode_polygon_tuple([gt, gt])
parsed = parse_polygon_output(text)
print(f"parsed {len(parsed.objects)} objects; spans {parsed.spans}")

drifted = "(" + ",".join(f"({x}, {y})" for x, y in gt.vertices) + ")"
print("bare integers with spaces also parse:",
      parse_polygon_output(drifted).objects[0] == gt)

for bad in ["((1,2),(3,4))", text + "garbage", "((1,2," ]:
    try:
        parse_polygon_output(bad)
    except PolygonParseError as err:
        print(f"rejected {bad[:24]!r:28} -> {err}")
