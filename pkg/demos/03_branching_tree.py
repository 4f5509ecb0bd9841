# coding: utf-8

# # A genus-0 shape with limbs
#
# On a sphere-like surface with protrusions the front splits every time it
# passes a fork and each piece dies at a limb tip. Nothing ever collides,
# so the Reeb graph is a tree, and seeding at one tip makes its leaves the
# limbs.

from loopshrink import PipelineConfig, generate_branching, run_pipeline
from loopshrink.mesh import limb_tips

for limbs in (3, 4, 5, 6):
    m = generate_branching(limbs)
    tip = int(limb_tips(m, limbs)[0])
    r = run_pipeline(m, PipelineConfig(seed_vertex=tip, mode="reeb"))
    g = r.reeb
    kinds = [n.kind.value for n in g.nodes]
    print(f"{limbs} limbs: {m.n_faces} faces, tree={g.is_tree()}, leaves={len(g.leaves())}, events={kinds}")

# Seeding in the middle of the body instead adds one more leaf: the seed
# node itself is then an end of the tree, alongside every limb tip.

r = run_pipeline(m, PipelineConfig(seed_vertex=0, mode="reeb"))
print("seed at vertex 0:", len(r.reeb.leaves()), "leaves")
