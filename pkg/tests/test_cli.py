import os
import tempfile
import unittest

from click.testing import CliRunner

from mixred.gaussian_core import Mixture
from mixred.io import mixture_to_dict, read_mixture, write_json, write_mixture
from mixred_cli import EXIT_CONFIG, EXIT_NUMERICAL, main


class TestCli(unittest.TestCase):
    def setUp(self) -> None:
        self.runner = CliRunner()
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def test_group_help_lists_commands(self) -> None:
        result = self.runner.invoke(main, ["--help"])
        self.assertEqual(result.exit_code, 0)
        for name in ("reduce-file", "reduce", "timing", "poisson", "elliptic", "kde", "farfield", "equiv", "seeds"):
            self.assertIn(name, result.output)

    def test_command_help_documents_columns(self) -> None:
        result = self.runner.invoke(main, ["seeds", "--help"])
        self.assertEqual(result.exit_code, 0)
        self.assertIn("seeds.csv: h,n_seeds,seed_rank,point_id,group_size", result.output)
        self.assertIn("--threads", result.output)

    def test_reduce_file(self) -> None:
        source, target = self._path("in.json"), self._path("out.json")
        write_mixture(Mixture.isotropic([1.0, 2.0, 3.0], [[0.5], [0.5], [0.5]], 0.4), source)
        result = self.runner.invoke(main, ["reduce-file", source, target, "--accuracy", "1e-6"])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("Reduced 3 terms to 1", result.output)
        reduced = read_mixture(target)
        self.assertEqual(reduced.size, 1)
        self.assertAlmostEqual(float(reduced.coeffs[0]), 6.0, places=10)

    def test_malformed_mixture_is_a_config_error(self) -> None:
        source = self._path("bad.json")
        data = mixture_to_dict(Mixture.isotropic([1.0], [[0.0]], 1.0))
        data["coeffs"] = [1.0, 2.0]
        write_json(data, source)
        result = self.runner.invoke(main, ["reduce-file", source, self._path("out.json")])
        self.assertEqual(result.exit_code, EXIT_CONFIG)
        self.assertIn("Error: coeffs:", result.output)

    def test_negative_variance_is_a_numerical_failure(self) -> None:
        source = self._path("neg.json")
        data = mixture_to_dict(Mixture.isotropic([1.0], [[0.0]], 1.0))
        data["atoms"][0]["cov"]["data"] = [-1.0]
        write_json(data, source)
        result = self.runner.invoke(main, ["reduce-file", source, self._path("out.json")])
        self.assertEqual(result.exit_code, EXIT_NUMERICAL)

    def test_unknown_log_level(self) -> None:
        result = self.runner.invoke(main, ["seeds", "--out", self.tmp.name], env={"MIXRED_LOG": "loud"})
        self.assertEqual(result.exit_code, EXIT_CONFIG)
        self.assertIn("MIXRED_LOG", result.output)

    def test_bad_config_value(self) -> None:
        config = self._path("seeds.yaml")
        with open(config, "w", encoding="utf-8") as f:
            f.write("experiment: seeds\nn_points: -3\n")
        result = self.runner.invoke(main, ["seeds", "--config", config, "--out", self.tmp.name])
        self.assertEqual(result.exit_code, EXIT_CONFIG)
        self.assertIn("n_points", result.output)

    def test_small_seeds_run(self) -> None:
        config = self._path("seeds.yaml")
        with open(config, "w", encoding="utf-8") as f:
            f.write("experiment: seeds\nn_points: 100\nruns:\n  - {h: 200.0, n_seeds: 2}\n")
        out = self._path("results")
        result = self.runner.invoke(main, ["seeds", "--config", config, "--out", out, "--seed", "1"])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("Wrote: seeds.csv", result.output)
        self.assertTrue(os.path.exists(os.path.join(out, "seeds_report.json")))
        self.assertTrue(os.path.exists(os.path.join(out, "seeds_partition_0.csv")))


if __name__ == '__main__':
    unittest.main()
