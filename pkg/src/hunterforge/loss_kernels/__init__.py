from hunterforge.loss_kernels.losses import (
    LossConfig,
    LossResult,
    FeatureRole,
    FeatureBatch,
    heatmap_loss,
    bbox_loss,
    total_loss,
    align_loss,
)
from hunterforge.loss_kernels.gather import gather_features
