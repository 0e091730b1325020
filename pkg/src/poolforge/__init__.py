"""poolforge: IR test collections via per-topic active learning.

Select which documents humans judge, optionally auto-label the rest of
the pool, and evaluate the resulting judgments by labeling accuracy and
by rank correlation of system leaderboards.
"""

from .corpus import (
    Document,
    Qrels,
    SparseVector,
    SystemRun,
    VectorStore,
    Vocabulary,
    build_vocabulary,
    load_corpus,
    load_qrels,
    load_run,
    tokenize,
    vectorize,
    write_qrels,
    write_run,
)
from .evaluation import TauCurve, TauMode, beta_sweep, ground_truth_leaderboard, tau_curve
from .metrics import (
    ConfusionCounts,
    Leaderboard,
    auc_trapezoid,
    average_precision,
    bpref,
    f_beta,
    kendall_tau,
    pearson,
)
from .model import (
    LabeledSet,
    LogisticModel,
    TrainConfig,
    oversample,
    predict_proba,
    train,
)
from .selection import SeedConfig, SeedKind, Strategy, seed_is, seed_rds, select_batch, uncertainty
from .simulate import (
    CollectionResult,
    CostSnapshot,
    SimulationConfig,
    TopicResult,
    hybrid_labels,
    run_collection,
    run_topic,
)
from .synth import SynthSpec, generate_collection

__version__ = "0.1.0"
