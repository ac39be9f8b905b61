"""posmaps: positive maps between matrix algebras built by merging,
with machine-checkable entanglement-witness certificates."""

from .linalg import (
    DEFAULT_TOL,
    BlockVector,
    PsdReport,
    SpaceLayout,
    block_join,
    block_split,
    is_psd,
    matrix_from_json,
    matrix_to_json,
    partial_transpose,
    scalar_compression,
    transpose_entrywise,
)
from .opmaps import (
    KPositivityReport,
    LinearMapRep,
    apply,
    choi_of,
    dual_pairing,
    is_ccp,
    is_cp,
    sampled_k_positivity,
    std_map,
)
from .merging import (
    MergingIngredients,
    ParamBundle,
    PositivityCertificate,
    canonical_merge,
    certify_positive,
    merge,
    nu_perturb,
    params,
    two_positivity_necessary,
)
from .gallery import GallerySpec, ZeroPair, build, ef_factors, list_names, zero_set
from .m3family import M3Params, cp_status, decompose_dependent, extremality, is_positive
from .m3family import nondec_sufficient, normalize_equivalence, to_map
from .witness import (
    PptState,
    WitnessReport,
    canonical_witness,
    evaluate,
    is_ppt,
    m3_witness,
    omega_witness,
    ppt_state,
    spanning_rank,
)

__version__ = "0.1.0"
