"""Recurrent spiking networks trained with contrastive signal-dependent plasticity."""

from .checkpoint import load_checkpoint, save_checkpoint
from .circuit import (NetworkParams, NetworkState, StepReport, WindowResult,
                      classify_fast, classify_scan, init_params, rate_code,
                      reconstruct, run_window, sequence_loss, softmax, step,
                      zero_state)
from .config import RunConfig, window_steps
from .data import Batch, Dataset, batches, load_idx, negative_labels, \
    negative_patterns, split_validation
from .errors import (ConfigError, CsdpError, DataFormatError, InputError,
                     NumericError, UsageError)
from .lif import (LayerWiring, adapt_threshold, compute_current,
                  emit_spikes, encode_bernoulli, integrate_voltage,
                  update_trace)
from .metrics import accuracy, reconstruction_bce
from .plasticity import (OptimizerState, apply_update, contrastive_loss,
                         error_update, goodness_probability, modulator,
                         synaptic_update)
from .train import evaluate, evaluate_scan, make_optimizer, train_run, \
    validation_split

__version__ = "0.1.0"
