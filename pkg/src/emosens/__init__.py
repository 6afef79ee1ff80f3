"""ECG emotion recognition: R-peak detection, HRV features, tree ensembles
and grouped cross-validation, with a synthetic corpus for dataset-free runs.
"""

__version__ = "0.1.0"

from .dataset import (EMOTIONS, FEATURE_NAMES, FEATURE_SET_VERSION, N_CLASSES,
                      EmotionLabel, LabeledDataset)
from .errors import ComputeError, EmosensError, InputError
from .eval_harness import (CvReport, FoldAssignment, Metrics, cross_validate,
                           evaluate_predictions, grid_search, group_k_fold,
                           learning_curve)
from .hrv_features import (HrvFeatureVector, ScalerParams, apply_minmax,
                           baseline_normalize, extract_feature_vector,
                           fit_minmax, frequency_domain_features,
                           poincare_features, time_domain_features)
from .qrs_detect import (DetectionTrace, DetectorConfig, RPeakSeries, RrSeries,
                         compute_rr_intervals, detect_r_peaks)
from .signal_io import (EcgRecording, Segment, TrialManifest,
                        generate_synthetic_ecg, load_ecg_csv, load_feature_csv,
                        write_feature_csv)
