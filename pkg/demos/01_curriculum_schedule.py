"""Walk through the curriculum: how difficulty knobs move over pretraining.

Two things get harder as the step index n grows from 0 to 60,000:
  * image understanding - the foreground/background mean-distance window
    [a, b] shrinks toward zero while the support/query foreground window
    [c, d] drifts upward, and
  * polygon generation - the number M of vertex hints drops from 15 to 0
    during the first half, then stays at 0.
"""

from fewseg import ScheduleConfig, image_schedule, mask_schedule, step_params

cfg = ScheduleConfig()  # a0=100, b0=150, c_final=50, d_final=100, 60k steps

print("step      a        b        c        d     M")
for n in range(0, cfg.total_steps, 5_000):
    p = step_params(n, cfg)
    print(f"{p.n:>6} {p.a:>8.3f} {p.b:>8.3f} {p.c:>8.3f} {p.d:>8.3f} {p.m:>5}")

print("\nendpoints:")
print("  n=0     ->", image_schedule(0, cfg), "M =", mask_schedule(0, cfg))
print("  n=Np/2  ->", image_schedule(cfg.total_steps // 2, cfg),
      "M =", mask_schedule(cfg.total_steps // 2, cfg))
print("  n=Np    ->", image_schedule(cfg.total_steps, cfg))

changes = [n for n in range(1, cfg.total_steps)
           if mask_schedule(n, cfg) != mask_schedule(n - 1, cfg)]
print(f"\nM decrements at steps: {changes[:5]} ... every {changes[1] - changes[0]} steps,"
      f" reaching 0 at {changes[-1]}")
