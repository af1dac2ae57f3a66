"""Statistical depth for large collections of discretized curves and for 4D
spatio-temporal fields, built around a randomized center-of-symmetry search."""

__version__ = "0.1.0"

from .fdata import (
    Curve,
    CurveSet,
    Grid,
    RngStream,
    SubsampleSpec,
    draw_subsample,
    read_curveset_csv,
    substream,
    write_curveset_csv,
)
from .metrics import (
    HYPER,
    L2,
    L2_RIEMANN,
    SUP,
    IntensitySummary,
    MetricDescriptor,
    ShrinkTransform,
    distance,
    hausdorff,
    intensity,
    pairwise,
    shrink,
)
from .symmetry import (
    SymmetrySolution,
    convergence_probe,
    hset_mass,
    random_center,
    solve_center,
    theta_set,
)
from .depths import (
    DepthParams,
    DepthResult,
    ProjectionSpec,
    band_depth_j2,
    integrated_depth,
    metric_depth,
    modified_band_depth_j2,
    random_depth,
    random_tukey_depth,
    simple_random_depth,
    univariate_simplicial,
    univariate_tukey,
)
from .simgen import (
    ExperimentReport,
    SimConfig,
    convergence_experiment,
    identification_experiment,
    mean_curve,
    sample_curves,
    true_deepest_indices,
)
from .neuro import (
    DepthImage,
    Field4D,
    Mask,
    TestRetestReport,
    VtMap,
    depth_image,
    extract_voxel_curves,
    mask_threshold,
    read_field4d,
    read_mask,
    representative_subject,
    select_by_intensity,
    synth_field4d,
    test_retest,
    topp_correlation,
    write_field4d,
    write_mask,
)
