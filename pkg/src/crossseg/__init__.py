"""Cross-shape scribble annotation and size-aware segmentation toolkit."""

from .branching import (BranchThresholds, SizeAwareConfig,
                        calibrate_thresholds, coefficient_alpha,
                        coefficient_mask, load_thresholds, relative_size,
                        save_thresholds, select_branch,
                        segmentation_total_loss, size_aware_loss)
from .geometry import (CrossScribble, Point2, Segment, build_cross, intersect,
                       shrink_cross)
from .losses import (bce, bce_grad_logit, dice_coefficient, dice_loss, mdice,
                     partial_ce)
from .multicat import LabelMap, combine_pseudo_masks, containment
from .pseudo_mask import (MaskGrid, MaskOp, SigmaSpec, initial_weight,
                          rasterize_pseudo_mask, relative_errors)
from .scoring import (ScoreMap, channel_weighted_average, gt_score,
                      infer_branch, match_score, multiclass_score_matrix,
                      normalize_scores, score_loss)

__version__ = "0.1.0"
