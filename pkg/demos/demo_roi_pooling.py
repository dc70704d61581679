"""Stage-2 input assembly: proposal selection and RoI-pooled fusion.

First-stage output is simulated by jittering the scene's ground-truth
boxes into scored proposals. Selection sorts by score, caps the
candidate list, suppresses overlaps, and keeps the best few. Each
survivor is enlarged and its interior points pooled into a fixed-size
block of [coordinates | image | point | fused] rows.
"""

import numpy as np

from fuse3d import (
    Box3D,
    Proposal,
    SyntheticSceneSpec,
    generate_scene,
    iou_bev,
    roi_pooled_fusion,
    select_proposals,
)

rng = np.random.default_rng(9)
cloud, _, gt_boxes = generate_scene(SyntheticSceneSpec())
n = len(cloud)

# Simulated first-stage proposals: 16 noisy copies of each true box,
# scored by footprint overlap with their source.
proposals = []
for gt in gt_boxes:
    for _ in range(16):
        box = Box3D(
            gt.center + rng.normal(0, 0.4, 3),
            gt.length * rng.uniform(0.85, 1.15),
            gt.height * rng.uniform(0.85, 1.15),
            gt.width * rng.uniform(0.85, 1.15),
            gt.yaw + rng.normal(0, 0.15),
        )
        proposals.append(Proposal(box, iou_bev(box, gt)))
print(f"{len(proposals)} proposals around {len(gt_boxes)} boxes")

selected = select_proposals(proposals, pre_nms_top=8000, nms_threshold=0.8,
                            keep=64)
print(f"selection kept {len(selected)} "
      f"(scores {selected[0].score:.2f} .. {selected[-1].score:.2f})")

# Pool every survivor. Desk-scale stand-ins for the feature streams.
f_img = rng.standard_normal((n, 4))
f_pt = rng.standard_normal((n, 4))
f_fused = rng.standard_normal((n, 8))
print("\n  #  score  occupied/512")
for k, proposal in enumerate(selected[:8]):
    pooled = roi_pooled_fusion(proposal, cloud, f_img, f_pt, f_fused,
                               enlarge=0.2, n_points=512, seed=k)
    print(f"{k:3d}  {proposal.score:.3f}  {pooled.valid_count:4d}")
    # every valid row starts with the source point's raw coordinates
    head = pooled.features[0, :3] if pooled.valid_count else None
    assert pooled.features.shape == (512, 3 + 4 + 4 + 8)
    if head is not None:
        assert np.array_equal(head, cloud.coords[pooled.indices[0]])

print("\nRows beyond the occupancy count are zero padding, so every "
      "block has the same shape the refinement stage expects.")
