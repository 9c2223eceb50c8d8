"""Snapshot compressive imaging toolkit.

Forward models for mask-modulated video and dispersed spectral capture,
a matrix-free structured sensing operator, unfolded GAP/ADMM solvers
with pluggable per-stage denoisers, a GAP-TV baseline, and a Monte Carlo
lab that measures the quantities behind the convergence guarantee.
"""

from .denoisers import (
    Denoiser,
    DescentSettings,
    GenerativeDenoiser,
    IdentityDenoiser,
    LinearDecoder,
    MLPDecoder,
    NetworkDenoiser,
    SubspaceDenoiser,
    TVDenoiser,
    generative_project,
    lipschitz_estimate,
    tv_denoise,
)
from .forward import (
    NoiseSpec,
    SpectralGeometry,
    build_shifted_masks,
    shear,
    spectral_forward,
    unshear,
    video_forward,
)
from .metrics import psnr, ssim
from .networks import NetworkWeights, load_weights, run_network, save_weights
from .operators import SciOperator
from .solvers import (
    ReconTrace,
    SolverConfig,
    admm_net_reconstruct,
    gap_net_reconstruct,
    gap_tv_reconstruct,
    pnp_gap_reconstruct,
    rmse_loss,
    weighted_loss,
)
from .tensors import (
    read_tensor,
    unvectorize,
    unvectorize_frame,
    vectorize,
    vectorize_frame,
    write_tensor,
)
from .theory import (
    TheoremParams,
    alpha_k,
    failure_probability,
    gamma_k,
    gamma_value,
    gamma_value_quantized,
    quantization_bits,
    quantize_latent,
    run_contraction_experiment,
    sample_gaussian_operator,
    xi_statistics,
)
from .verify import dense_oracle_suite, finite_diff_check

__version__ = "0.1.0"
