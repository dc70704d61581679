"""The detection loss stack, term by term.

Classification uses a focal term that fades out as the predicted
probability of the true class approaches one. Regression encodes x, z,
and yaw as bin-plus-residual targets, penalizes all seven residuals
with smooth-L1, and adds a log regularizer on footprint overlap. The
two-stage total is the plain sum of both stages.
"""

import numpy as np

from fuse3d import (
    BinConfig,
    Box3D,
    RegressionPrediction,
    bin_cross_entropy,
    decode_bins,
    encode_box_target,
    focal_loss,
    iou_reg_loss,
    regression_loss,
    smooth_l1,
    total_loss,
)

# Focal loss: confident mistakes dominate, confident hits vanish.
print("focal loss (alpha 0.25, gamma 2):")
for c_t in (0.1, 0.5, 0.9, 0.999):
    print(f"  p(true class) = {c_t:5.3f}  ->  {focal_loss(c_t):.5f}")

# A ground-truth box seen from a slightly off anchor.
gt = Box3D(np.array([11.3, 0.4, -2.1]), 3.9, 1.6, 1.7, 0.55)
anchor = Box3D(np.array([10.0, 0.0, -1.5]), 3.6, 1.5, 1.6, 0.3)
cfg = BinConfig()
target = encode_box_target(gt, anchor, cfg)
print(f"\ntarget bins: x={target.bin_x}, z={target.bin_z}, "
      f"yaw={target.bin_yaw}")
print("target residuals:", np.round(target.residuals, 4))
decoded_x = decode_bins(target.bin_x, target.residuals[0],
                        anchor.center[0], cfg.x)
print(f"decoding the x target recovers {decoded_x:.6f} "
      f"(truth {gt.center[0]})")

# A prediction that nails the bins but misses some residuals.
logits = {}
for name, bin_index in (("x", target.bin_x), ("z", target.bin_z),
                        ("yaw", target.bin_yaw)):
    arr = np.full(getattr(cfg, name).num_bins, -2.0)
    arr[bin_index] = 5.0
    logits[name] = arr
pred = RegressionPrediction(
    logits_x=logits["x"], logits_z=logits["z"], logits_yaw=logits["yaw"],
    residuals=target.residuals + np.array([0.1, 0.0, -0.05, 0.2, 0, 0, 0.02]),
)
pred_box = Box3D(gt.center + np.array([0.3, 0.0, -0.2]),
                 gt.length, gt.height, gt.width, gt.yaw + 0.05)

print("\nregression terms:")
print(f"  bin cross-entropy x:   {bin_cross_entropy(pred.logits_x, target.bin_x):.5f}")
print(f"  smooth-L1 on x offset: {smooth_l1(pred.residuals[0], target.residuals[0]):.5f}")
print(f"  overlap regularizer:   {iou_reg_loss(pred_box, gt):.5f}")
reg = regression_loss(pred, target, pred_box, gt, cfg)
print(f"  full regression loss:  {reg:.5f}")

# Both stages sum into the training objective.
cls = focal_loss(0.7)
print(f"\ntwo-stage total: {total_loss(cls, reg, cls, reg):.5f}")
