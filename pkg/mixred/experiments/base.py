import json
import logging
import os
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Type

import yaml
from jsonschema import ValidationError, validate

from mixred.errors import ConfigError
from mixred.io import check_schema, load_schema, write_json


logger = logging.getLogger(__name__)

DEFAULTS_PATH: str = os.path.join(os.path.dirname(__file__), "defaults.yaml")


@dataclass
class ExperimentReport:
    experiment: str
    seed: int
    tables: List[str]
    summary: Dict[str, Any] = field(default_factory=dict)


def load_config(path: str) -> Dict[str, Any]:
    """Reads a JSON (by suffix) or YAML experiment config; parse errors become ConfigError with the line number."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data: Any = json.load(f) if path.endswith(".json") else yaml.safe_load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"cannot parse config: {e.msg}", field=f"line {e.lineno}") from e
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where: str = f"line {mark.line + 1}" if mark is not None else path
        raise ConfigError(f"cannot parse config: {getattr(e, 'problem', e)}", field=where) from e
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", field=path) from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping", field="<root>")
    return data


class Experiment(ABC):
    name: str = ""

    def __init__(self) -> None:
        with open(DEFAULTS_PATH, "r", encoding="utf-8") as f:
            defaults: Dict[str, Any] = yaml.safe_load(f)
        self.defaults: Dict[str, Any] = {**defaults.get("common", {}), **defaults.get(self.name, {})}

    def settings(self, config: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Defaults, then the config, then non-empty command-line overrides."""
        merged: Dict[str, Any] = {**self.defaults, **config}
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[key] = value
        merged["experiment"] = self.name
        return merged

    def table_path(self, out_dir: str, stem: str) -> str:
        return os.path.join(out_dir, f"{stem}.csv")

    @abstractmethod
    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        pass

    def get_schema(self) -> Dict[str, Any]:
        return load_schema("experiment_report")


class ExperimentRegistry:
    def __init__(self) -> None:
        self._experiments: List[Type[Experiment]] = []

    def register(self, experiment_class: Type[Experiment]) -> None:
        if not issubclass(experiment_class, Experiment):
            raise TypeError(f"{experiment_class} must be a subclass of Experiment")
        self._experiments.append(experiment_class)

    def unregister(self, experiment_class: Type[Experiment]) -> None:
        if experiment_class in self._experiments:
            self._experiments.remove(experiment_class)

    def get_experiment(self, name: str) -> Experiment:
        for experiment_class in self._experiments:
            if experiment_class.name == name:
                return experiment_class()
        raise ConfigError(f"unknown experiment '{name}'", field="experiment")

    def get_all_experiments(self) -> List[Type[Experiment]]:
        return self._experiments.copy()

    def names(self) -> List[str]:
        return [experiment_class.name for experiment_class in self._experiments]

    def clear(self) -> None:
        self._experiments.clear()

    def run(self, name: str, config: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentReport:
        if config.get("experiment", name) != name:
            raise ConfigError(f"config is for '{config['experiment']}', not '{name}'", field="experiment")
        experiment: Experiment = self.get_experiment(name)
        settings: Dict[str, Any] = experiment.settings(config, overrides)
        check_schema(settings, "experiment_config")

        out_dir: str = str(settings["out"])
        os.makedirs(out_dir, exist_ok=True)
        logger.info("running %s with seed %d into %s", name, settings["seed"], out_dir)
        report: ExperimentReport = experiment.run(settings, out_dir)

        report_data: Dict[str, Any] = asdict(report)
        try:
            validate(instance=report_data, schema=experiment.get_schema())
        except ValidationError as e:
            raise ValueError(f"Experiment report does not conform to schema: {e.message}")
        write_json(report_data, os.path.join(out_dir, f"{name}_report.json"))
        return report
