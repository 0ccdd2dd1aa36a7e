from .benchmark import (
    BenchmarkConfig,
    BenchmarkReport,
    reproduce_paper_config,
    run_benchmark,
)
from .cv import stratified_kfold, train_test_pairs
from .data import (
    Dataset,
    MinMaxScaler,
    RawTable,
    find_telco_csv,
    load_csv,
    load_dataset,
    preprocess_telco,
)
from .metrics import ConfusionCounts, MetricRecord, compute_metrics, confusion_counts
from .pca import PCA, pca_fit
