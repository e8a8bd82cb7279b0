"""Multi-user mmWave hybrid analog/digital precoding simulator."""

from .arrays import (
    ULA,
    UPA,
    ArrayGeometry,
    SteeringAngle,
    response,
    ula_response,
    upa_response,
    virtual_direction_matrix,
)
from .channel import (
    ChannelConfig,
    ChannelRealization,
    Path,
    VirtualEntry,
    assemble_matrix,
    dominant_path_gain,
    dominant_virtual_entries,
    sample_channel,
    to_virtual,
)
from .codebooks import (
    Codebook,
    beamsteering_codebook,
    codebook_from_json,
    codebook_to_json,
    min_max_correlation,
    quantize,
    rvq_codebook,
)
from .precoding import (
    BeamSelection,
    IllConditioned,
    Infeasible,
    PrecoderSolution,
    beamsteering_only,
    block_diagonalization,
    effective_channel,
    hybrid_precode,
    matched_rf_beams,
    select_rf_beams,
    solution_from_json,
    solution_to_json,
    zf_baseband,
)
from .metrics import (
    DegenerateAngles,
    InvalidTarget,
    NotPositiveDefinite,
    RateBreakdown,
    UserRate,
    VirtualModelBound,
    kantorovich_diag_bound,
    large_array_loss_bound,
    quantized_feedback_loss_bound,
    rate_breakdown,
    required_feedback_bits,
    single_path_rate_bound,
    single_user_rate,
    user_rate,
    virtual_model_rate_bound,
)
from .harness import (
    ExperimentConfig,
    RateRow,
    RateTable,
    plotted_snr_to_linear,
    run_antenna_sweep,
    run_quantization_sweep,
    run_rate_experiment,
    trial_rng,
    write_rate_csv,
    write_rate_json,
)
from .cellular import (
    CellularConfig,
    CoverageRow,
    CoverageTable,
    PathLossModel,
    run_coverage,
    write_coverage_csv,
    write_coverage_json,
)

__version__ = "0.1.0"
