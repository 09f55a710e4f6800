"""embdiag: diagnostics for frozen audio-embedding spaces.

Evaluates an embedding table against clip metadata with three headline
metrics (linear-probe accuracy, K-Means NMI, cosine-retrieval ROC-AUC)
and a confound battery that separates genuine class structure from
recording-specific structure.
"""

__version__ = "0.1.0"

from .baseline_features import MelConfig, baseline_embedding, mel_filterbank, stft_power
from .clustering import ContingencyTable, KMeansResult, cluster_eval, kmeans, nmi
from .data_model import (
    AblationHistogram,
    ClipMetadata,
    DiagnosticsBlock,
    EmbeddingTable,
    EvalReport,
    LabeledDataset,
    validate_dataset,
)
from .diagnostics import (
    DiagnosticsConfig,
    label_shuffle_control,
    logit_space_clustering,
    pca_control,
    record_id_eval,
    run_full_report,
)
from .io_formats import (
    read_embeddings,
    read_metadata_csv,
    read_report,
    read_wav,
    write_embeddings,
    write_metadata_csv,
    write_report,
)
from .numerics import (
    PcaModel,
    Standardizer,
    apply_standardizer,
    cosine_similarity,
    entropy,
    fit_standardizer,
    pca_fit,
    pca_transform,
    softmax,
)
from .probe import (
    LinearProbe,
    ProbeConfig,
    accuracy,
    feature_importance,
    logits,
    per_class_accuracy,
    predict,
    train_probe,
)
from .retrieval import RetrievalResult, retrieval_eval, roc_auc_from_scores
from .splits import SplitSpec, recordingwise_split, timewise_split
from .synth import SynthConfig, generate
