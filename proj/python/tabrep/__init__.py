"""Tabular data synthesis with diffusion and flow-matching models.

Mixed numeric/categorical tables are mapped to a unified continuous space
(quantile-transformed numerics plus a roots-of-unity encoding for
categoricals), a fixed MLP denoiser is trained under either a DDPM or a
flow-matching objective, and synthetic tables are decoded back and scored
with fidelity, detection, privacy and downstream-utility metrics.

All heavy lifting happens in the native `_core` extension; see the README
for the CLI of the same name.
"""

from ._core import (
    Checkpoint,
    Table,
    c2st,
    cat_decode,
    cat_encode,
    codec_width,
    count_minimal_singular_points,
    full_report,
    hyperplane_dim,
    infer_schema,
    kst,
    mean_cde,
    mia,
    minimal_singular_point,
    mle,
    pcc_score,
    run_cli,
    sample,
    score_variance_closed_form,
    score_variance_exact,
    singular_report,
    split,
    train,
    tvd_counts,
)

__all__ = [
    "Checkpoint",
    "Table",
    "c2st",
    "cat_decode",
    "cat_encode",
    "codec_width",
    "count_minimal_singular_points",
    "full_report",
    "hyperplane_dim",
    "infer_schema",
    "kst",
    "mean_cde",
    "mia",
    "minimal_singular_point",
    "mle",
    "pcc_score",
    "run_cli",
    "sample",
    "score_variance_closed_form",
    "score_variance_exact",
    "singular_report",
    "split",
    "train",
    "tvd_counts",
]

__version__ = "0.1.0"
