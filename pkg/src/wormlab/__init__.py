"""Regression-based subspace classifiers and a noise-sweep benchmark."""

from .baselines import KnnModel, LinearSvmModel, fit_linear_svm, knn_classify, omp_classify, svm_classify
from .dataset import LabeledDataset
from .errors import ConfigError, ContractError, FitError, InputError, WormlabError
from .regression import (
    CoefficientVector,
    RegularizationParams,
    solve_elastic_net,
    solve_lasso,
    solve_least_squares,
    solve_omp,
    solve_ridge,
)
from .subspace import (
    DecisionRule,
    RawClassDictionaries,
    classify_nearest_subspace,
    classify_union_subspace,
    fit_raw_dictionaries,
)
from .synthetic import GeneratorConfig, NoiseSpec, apply_noise, generate, measure_snr
from .worm import (
    ClassDictionary,
    WormModel,
    classify_worm,
    equivalence_transform,
    fit_worm,
    predict_worm,
    select_basis,
    worm_decide,
    worm_regress,
)

__version__ = "0.1.0"
