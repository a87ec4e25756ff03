"""Multiclass AUC metrics and sigmoid-approximated AUC training objectives."""

from .calibration import CalibratorParams, calibrate_predict, fit_calibrator
from .data import Dataset, SyntheticSpec, apply_minmax, fit_minmax, gen_synthetic, load_dataset, save_dataset
from .losses import (
    aauc_binary,
    aauc_binary_grad,
    aauc_ovo_loss,
    aauc_ovr_loss,
    pair_count_cost,
    softmax_ce_loss,
    stable_sigmoid,
)
from .metrics import (
    auc_ovo,
    auc_ovr,
    average_precision,
    binary_auc,
    classification_report,
    macro_avg_ap,
    pairwise_auc_hat,
    pr_curve,
)
from .model import backward, forward, grad_check, init_params
from .train import TrainConfig, adam_step, lr_at_epoch, make_batches, train

__version__ = "0.1.0"
