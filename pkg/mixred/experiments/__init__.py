from typing import List

from .base import Experiment, ExperimentRegistry, ExperimentReport, load_config
from .farfield_experiments import EquivExperiment, FarfieldExperiment, SeedsExperiment
from .kde_experiment import KdeExperiment
from .pde_experiments import EllipticExperiment, PoissonExperiment
from .reduction_experiments import ReduceExperiment, TimingExperiment


def default_registry() -> ExperimentRegistry:
    registry: ExperimentRegistry = ExperimentRegistry()
    for experiment_class in (ReduceExperiment, TimingExperiment, PoissonExperiment, EllipticExperiment,
                             KdeExperiment, FarfieldExperiment, EquivExperiment, SeedsExperiment):
        registry.register(experiment_class)
    return registry


__all__: List[str] = ['Experiment', 'ExperimentRegistry', 'ExperimentReport', 'default_registry', 'load_config']
