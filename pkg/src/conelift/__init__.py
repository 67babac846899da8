"""Isometric immersions into Minkowski, de Sitter and anti-de Sitter light
cones, and recovery of the Lorentz transformation relating two of them."""
from .cone import (
    ConformalityError,
    cone_contains,
    cone_convert,
    cone_lift,
    cone_project,
    extract_conformal_factor,
    verify_isometric_immersion,
    verify_lemma1,
)
from .conformal import (
    Status,
    conformal_to_lorentz,
    gen_dilation,
    gen_inversion,
    gen_rotation,
    gen_translation,
    mobius_apply,
    random_conformal,
    stereo_project,
    stereo_unproject,
)
from .grid import GridChart, pullback_metric, sphere_chart
from .lorentz import (
    LorentzError,
    Signature,
    block_embed,
    block_extract,
    lorentz_check,
    lorentz_compose,
    lorentz_inverse,
    minkowski,
    minkowski_inner,
)
from .rigidity import (
    CorrespondenceSet,
    RecoveryReport,
    SelfMapSamples,
    extend_cone_isometry,
    locality_check,
    recover_tau,
    verify_rigidity,
)

__version__ = "0.1.0"
