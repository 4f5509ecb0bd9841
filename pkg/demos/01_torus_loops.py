# coding: utf-8

# # Handle and tunnel loops on a torus
#
# A front starts at one vertex and diffuses over the surface. On a torus it
# first wraps around the tube, splits into two fronts, and the two collide
# on the far side. That collision is a handle, and the front at that moment
# gives a first estimate of the handle loop.

import numpy as np

from loopshrink import PipelineConfig, generate_torus, run_initial_pass, run_pipeline

m = generate_torus(48, 24, 2.0, 0.5)
print(m)

# ## The initial pass
#
# The event log tells the story of the front.

res = run_initial_pass(m, None, seed=0)
for ev in res.events:
    print(f"{ev.kind.value:7s} step {ev.step:5d}  consumed {ev.consumed}  created {ev.created}")

est = res.estimates[0].loop
print("estimate length", round(est.length, 4), "tube circumference", round(2 * np.pi * 0.5, 4))

# ## Tunnel and refined handle
#
# From the estimate, a second diffusion runs off one side of the loop and
# comes back around through the hole: the streamline it leaves behind is
# closed into the tunnel loop. A third diffusion, started from the tunnel,
# pulls the handle estimate tight.

out = run_pipeline(m, PipelineConfig(seed_vertex=0))
p = out.pairs[0]
print("handle", p.handle.kind.value, round(p.handle.length, 4), "vs 2 pi r =", round(np.pi, 4))
print("tunnel", p.tunnel.kind.value, round(p.tunnel.length, 4), "vs 2 pi (R - r) =", round(3 * np.pi, 4))

# The handle hugs the tube, so its points stay at one major angle; the
# tunnel stays on the inner equator.

ang = np.unwrap(np.arctan2(p.handle.points[:, 1], p.handle.points[:, 0]))
print("handle major-angle spread", round(np.ptp(ang), 4))
print("tunnel radial distance", np.round(np.hypot(*p.tunnel.points[:, :2].T)[[0, -1]], 3))
print("timings", {k: round(v, 2) for k, v in out.timings.items()})
