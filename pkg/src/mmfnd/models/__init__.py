"""Network definitions: text branch, image branch, fusion model, bundles."""

from .networks import (  # noqa: F401
    PENULTIMATE,
    SOFTMAX_OUTPUT,
    FusionModel,
    FusionSpec,
    ImageBranch,
    ImageBranchSpec,
    TextBranch,
    TextBranchSpec,
    build_fusion_model,
    build_image_branch,
    build_text_branch,
    softmax_xent,
)
from .bundle import ModelBundle, Prediction, predict  # noqa: F401
