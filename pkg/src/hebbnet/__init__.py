"""Competitive Hebbian feature learning with a supervised readout.

Hidden-layer weights are shaped by a local synaptic rule under ranked
competition (no labels, no backprop); a classifier head is then trained on
the frozen features.  See the README for the CLI and file formats.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import PRESETS, RunConfig, build_config
from .data import Batch, Dataset, load_cifar10, load_mnist, minibatches, normalize, split
from .dynamics import (
    DynamicsConfig,
    HiddenState,
    compute_currents,
    integrate_to_steady,
    learning_activations,
)
from .head import (
    SupConfig,
    adam_step,
    evaluate,
    forward,
    grad_head,
    loss,
    one_hot,
    power_activation,
    train_e2e_baseline,
    train_head,
)
from .plasticity import (
    LearningActivation,
    PMetricConfig,
    lyapunov,
    norm_flow_rate,
    p_inner,
    p_norm_p,
    plasticity_increment,
    q_value,
)
from .trainer import (
    TrainHistory,
    UnsupConfig,
    batch_update,
    lr_schedule,
    rank_activations,
    rank_units,
    train_unsupervised,
)

__version__ = "0.1.0"
