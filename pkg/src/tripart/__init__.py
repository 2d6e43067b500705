"""Learning with noisy labels on desk-scale data: Tripartition sample selection,
subset-specific losses, dual-network co-training and label-noise synthesis."""
from .config import ConfigError, ExperimentConfig
from .cotrain import EpochTrace, TrainResult, run_epoch, train, warm_up
from .data import BlobSpec, LabeledDataset, gen_blobs, gen_two_moons, load_csv, save_csv, split
from .losses import (
    AugmentationSpec,
    LossBreakdown,
    StrategyWeights,
    augment,
    consistency_mse,
    cross_entropy,
    total_loss,
    weighted_ce_hard,
)
from .net import (
    ClassifierState,
    OptimizerSpec,
    backward,
    finite_diff_check,
    forward,
    init_classifier,
    predict_labels,
    sgd_step,
)
from .noise import (
    TransitionMatrix,
    build_pairflip,
    build_realistic,
    build_symmetric,
    corrupt_labels,
    extract_prototypes,
    rank_pairs,
)
from .partition import (
    PartitionResult,
    PredictionRecords,
    gmm_partition,
    normalize_losses,
    score_partition,
    small_loss_partition,
    tripartition,
)
from .scenario import acceptance_config, prepare_data

__version__ = "0.1.0"
