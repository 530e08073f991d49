"""Online feature selection over sparse (partially observed) streaming features.

Each arriving window of features is completed by a latent-factor model
trained with SGD, candidate subsets are scored by differential evolution
against classifier error, and survivors pass conditional-independence
relevance and redundancy filters before joining the selected set.
"""

from .classify import ClassifierConfig, cross_val_accuracy
from .dataio import Dataset, ObservationMask, SparseWindow, apply_mask, load_csv, windows
from .evolve import DeConfig, EvalContext, evolve_window
from .lfa import CompletedWindow, LatentFactors, LfaConfig, complete_window, train
from .pipeline import ComparisonReport, RunConfig, RunReport, compare, emit_plot_data, run
from .redundancy import CiConfig, SelectedSet, fisher_z_test, partial_correlation
from .stats import WilcoxonResult, wilcoxon_signed_rank
from .synth import make_planted

__version__ = "0.1.0"

__all__ = [
    "ClassifierConfig",
    "CompletedWindow",
    "ComparisonReport",
    "CiConfig",
    "Dataset",
    "DeConfig",
    "EvalContext",
    "LatentFactors",
    "LfaConfig",
    "ObservationMask",
    "RunConfig",
    "RunReport",
    "SelectedSet",
    "SparseWindow",
    "WilcoxonResult",
    "apply_mask",
    "compare",
    "complete_window",
    "cross_val_accuracy",
    "emit_plot_data",
    "evolve_window",
    "fisher_z_test",
    "load_csv",
    "make_planted",
    "partial_correlation",
    "run",
    "train",
    "wilcoxon_signed_rank",
    "windows",
]
