"""Pool-based active-learning simulation engine.

Contrastive acquisition (divergence from labeled neighbors) plus entropy,
random, embedding-k-means, and gradient-embedding baselines, batch
diagnostics, and a deterministic multi-seed experiment loop over pluggable
feature representations.
"""

from .acquisition import (
    AcquisitionConfig,
    BatchSelection,
    acquire_badge,
    acquire_cal,
    acquire_entropy,
    acquire_kmeans_embedding,
    acquire_random,
    kl_divergence,
    kmeans_pp_init,
    lloyd_kmeans,
    predictive_entropy,
)
from .analysis import (
    BatchDiagnostics,
    div_feature,
    div_input,
    representativeness,
    uncertainty_of_batch,
)
from .classifier import (
    Classifier,
    ClassifierConfig,
    accuracy,
    encode,
    gradient_embedding,
    predict_proba,
    train,
)
from .dataset import (
    DatasetStore,
    Example,
    FeatureMatrix,
    Vocabulary,
    build_tfidf,
    load_feature_matrix,
    load_jsonl,
    save_jsonl,
    stratified_initial_sample,
    tokenize,
    transfer_to_labeled,
    write_feature_matrix,
)
from .harness import (
    BudgetPlan,
    IterationRecord,
    LoopConfig,
    RunResult,
    SeedResult,
    budget_plan,
    compare,
    generate_synthetic,
    run_simulation,
    train_full_model,
)
from .neighbors import KnnIndex, NeighborSet, build_index, query, query_batch
from .seeding import derive_rng, derive_seed

__version__ = "0.1.0"
