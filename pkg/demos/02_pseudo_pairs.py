"""Synthesize pseudo support-query episodes and watch them get harder.

Each episode is a pure function of (seed, step, size): a random Bezier
foreground filled with Gaussian noise, a partitioned noise background, and a
query whose contour and noise means are constrained copies of the support's.
The midpoint-threshold probe (nearest-mean segmentation of the query) shows
the difficulty curve: almost perfect at step 0, much worse near the end.

Writes preview PNGs next to this script under demo_output/.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from fewseg import generate_pair, midpoint_threshold_iou, pair_digest, step_params

out_dir = Path(__file__).parent / "demo_output"
out_dir.mkdir(exist_ok=True)

pair = generate_pair(seed=42, step=step_params(0), width=384, height=384)
print("seed=42, n=0")
print("  content digest:", pair_digest(pair))
print("  support objects:", len(pair.support_polygons),
      "| query objects:", len(pair.query_polygons))
print("  support fg mean:", np.round(pair.support_fg_mean, 1))
print("  query fg mean:  ", np.round(pair.query_fg_mean, 1))

Image.fromarray(pair.support_image).save(out_dir / "support_n0.png")
Image.fromarray(pair.query_image).save(out_dir / "query_n0.png")
Image.fromarray(pair.query_mask.pixels * 255).save(out_dir / "query_mask_n0.png")
print("  wrote", out_dir / "support_n0.png", "and friends")

print("\ndifficulty probe (mean midpoint-threshold IoU over 20 seeds):")
for n in (0, 15_000, 30_000, 45_000, 59_999):
    step = step_params(n)
    vals = [midpoint_threshold_iou(generate_pair(s, step, 384, 384)) for s in range(20)]
    bar = "#" * int(40 * float(np.mean(vals)))
    print(f"  n={n:>6}: {np.mean(vals):.3f} {bar}")

hard = generate_pair(seed=42, step=step_params(59_999), width=384, height=384)
Image.fromarray(hard.query_image).save(out_dir / "query_n59999.png")
print("\nwrote", out_dir / "query_n59999.png",
      "- compare with query_n0.png to see the vanishing contrast")
