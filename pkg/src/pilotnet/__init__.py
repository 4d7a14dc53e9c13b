"""Jointly learned pilot signals and channel estimator for wideband
massive MIMO, with a geometric channel simulator, an SOMP baseline, and
a reproducible NMSE evaluation harness."""

from .channel import (ChannelRealization, ScenarioConfig, StackedDataset,
                      angular_transform, build_dataset, gen_realization,
                      steering_vector)
from .harness import ExperimentConfig, NmseReport, nmse_db, run_curve
from .measurement import PilotMatrix, SnrSpec, add_awgn, calibrate_snr, compress
from .network import (AdamState, HyperParams, ModelParams, TrainConfig,
                      TrainHistory, adam_step, extract_pilot, init_params,
                      model_backward, model_forward, mse_loss, train)
from .numerics import RngStream, dft_matrix, kron, lstsq, rng_stream
from .somp import (Dictionary, SompConfig, SompResult, build_dictionary,
                   random_pilot, reestablish, somp_estimate)

__version__ = "0.1.0"
