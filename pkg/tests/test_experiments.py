import csv
import json
import os
import tempfile
import unittest
from typing import Any, Dict

from mixred.errors import ConfigError
from mixred.experiments import Experiment, ExperimentReport, default_registry, load_config


class DummyExperiment(Experiment):
    name = "reduce"

    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        return ExperimentReport(experiment=self.name, seed=int(settings["seed"]), tables=[])


class TestRegistry(unittest.TestCase):
    def setUp(self) -> None:
        self.registry = default_registry()
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_all_experiments_are_registered(self) -> None:
        self.assertEqual(
            self.registry.names(),
            ["reduce", "timing", "poisson", "elliptic", "kde", "farfield", "equiv", "seeds"],
        )

    def test_unknown_experiment_raises(self) -> None:
        with self.assertRaises(ConfigError) as ctx:
            self.registry.get_experiment("sparse-grid")
        self.assertEqual(ctx.exception.field, "experiment")

    def test_only_experiments_can_be_registered(self) -> None:
        with self.assertRaises(TypeError):
            self.registry.register(dict)  # type: ignore[arg-type]

    def test_unregister_and_clear(self) -> None:
        self.registry.clear()
        self.registry.register(DummyExperiment)
        self.assertEqual(len(self.registry.get_all_experiments()), 1)
        self.registry.unregister(DummyExperiment)
        self.assertEqual(self.registry.names(), [])

    def test_config_for_another_experiment_is_rejected(self) -> None:
        with self.assertRaises(ConfigError) as ctx:
            self.registry.run("seeds", {"experiment": "kde"})
        self.assertEqual(ctx.exception.field, "experiment")

    def test_invalid_setting_names_the_field(self) -> None:
        with self.assertRaises(ConfigError) as ctx:
            self.registry.run("seeds", {"n_points": 0, "out": self.tmp.name})
        self.assertEqual(ctx.exception.field, "n_points")

    def test_unknown_setting_is_rejected(self) -> None:
        with self.assertRaises(ConfigError):
            self.registry.run("seeds", {"bandwidth": 2.0, "out": self.tmp.name})


class TestSettings(unittest.TestCase):
    def setUp(self) -> None:
        self.experiment = default_registry().get_experiment("seeds")

    def test_defaults_come_from_the_yaml_file(self) -> None:
        settings = self.experiment.settings({})
        self.assertEqual(settings["experiment"], "seeds")
        self.assertEqual(settings["seed"], 0)
        self.assertEqual(settings["n_points"], 2000)
        self.assertEqual(settings["runs"], [{"h": 200.0, "n_seeds": 4}, {"h": 16.0, "n_seeds": 10}])

    def test_timing_defaults_double_four_times(self) -> None:
        settings = default_registry().get_experiment("timing").settings({})
        self.assertEqual(settings["sizes"], [10000, 20000, 40000, 80000, 160000])
        self.assertEqual(settings["rank"], 100)

    def test_elliptic_defaults(self) -> None:
        settings = default_registry().get_experiment("elliptic").settings({})
        self.assertEqual(settings["radius"], 25.0)
        self.assertEqual(settings["iterations"], 1)

    def test_config_then_flags_take_precedence(self) -> None:
        settings = self.experiment.settings({"seed": 5, "n_points": 30}, {"seed": 9, "threads": None})
        self.assertEqual(settings["seed"], 9)
        self.assertEqual(settings["n_points"], 30)
        self.assertEqual(settings["threads"], 1)


class TestLoadConfig(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _write(self, name: str, text: str) -> str:
        path = os.path.join(self.tmp.name, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_yaml_config(self) -> None:
        path = self._write("c.yaml", "experiment: seeds\nruns:\n  - {h: 2.0, n_seeds: 3}\n")
        self.assertEqual(load_config(path), {"experiment": "seeds", "runs": [{"h": 2.0, "n_seeds": 3}]})

    def test_json_config(self) -> None:
        path = self._write("c.json", json.dumps({"experiment": "kde", "dims": [2]}))
        self.assertEqual(load_config(path), {"experiment": "kde", "dims": [2]})

    def test_empty_config(self) -> None:
        self.assertEqual(load_config(self._write("e.yaml", "")), {})

    def test_parse_error_reports_the_line(self) -> None:
        path = self._write("bad.json", '{\n  "seed": 1,\n  "out": \n}')
        with self.assertRaises(ConfigError) as ctx:
            load_config(path)
        self.assertEqual(ctx.exception.field, "line 4")

    def test_config_must_be_a_mapping(self) -> None:
        with self.assertRaises(ConfigError) as ctx:
            load_config(self._write("list.yaml", "- 1\n- 2\n"))
        self.assertEqual(ctx.exception.field, "<root>")

    def test_missing_file(self) -> None:
        with self.assertRaises(ConfigError):
            load_config(os.path.join(self.tmp.name, "absent.yaml"))


class TestSmallRuns(unittest.TestCase):
    def setUp(self) -> None:
        self.registry = default_registry()
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _rows(self, name: str) -> list:
        with open(os.path.join(self.tmp.name, name), "r", encoding="utf-8", newline="") as f:
            return list(csv.reader(f))

    def test_seeds_run(self) -> None:
        config = {"n_points": 200, "runs": [{"h": 200.0, "n_seeds": 4}], "out": self.tmp.name}
        report = self.registry.run("seeds", config, {"seed": 3})
        self.assertEqual(report.tables, ["seeds.csv", "seeds_partition_0.csv"])
        run = report.summary["runs"][0]
        self.assertEqual(sum(run["group_sizes"]), 200)
        self.assertLessEqual(run["found"], 4)
        rows = self._rows("seeds.csv")
        self.assertEqual(rows[0], ["h", "n_seeds", "seed_rank", "point_id", "group_size"])
        self.assertEqual(len(rows), run["found"] + 1)
        self.assertEqual(len(self._rows("seeds_partition_0.csv")), 201)
        with open(os.path.join(self.tmp.name, "seeds_report.json"), "r", encoding="utf-8") as f:
            self.assertEqual(json.load(f)["seed"], 3)

    def test_reduce_run(self) -> None:
        config = {"n": 200, "algorithms": ["cholesky", "mgs"], "accuracies": [1e-3], "grid_size": 50,
                  "out": self.tmp.name}
        report = self.registry.run("reduce", config)
        self.assertEqual(report.summary["n"], 200)
        self.assertEqual([row["algorithm"] for row in report.summary["rows"]], ["cholesky", "mgs"])
        self.assertIsInstance(report.summary["cholesky_mgs_same_skeleton"], bool)
        for row in report.summary["rows"]:
            self.assertLess(row["r"], 200)
        rows = self._rows("reduce.csv")
        self.assertEqual(rows[0], ["requested", "algorithm", "r", "actual_error"])
        self.assertEqual(len(self._rows("reduce_grid.csv")), 51)

    def test_single_algorithm_override(self) -> None:
        config = {"n": 100, "grid_size": 20, "out": self.tmp.name}
        report = self.registry.run("reduce", config, {"algorithm": "cholesky", "accuracy": 1e-4})
        self.assertEqual([(row["algorithm"], row["requested"]) for row in report.summary["rows"]],
                         [("cholesky", 1e-4)])
        self.assertIsNone(report.summary["cholesky_mgs_same_skeleton"])


if __name__ == '__main__':
    unittest.main()
