import csv
import os
import tempfile
import unittest

import numpy as np

from mixred.errors import ConfigError
from mixred.gaussian_core import CovKind, Mixture
from mixred.io import (
    check_schema,
    mixture_from_dict,
    mixture_to_dict,
    read_expansion,
    read_json,
    read_mixture,
    write_csv,
    write_expansion,
    write_json,
    write_mixture,
)
from mixred.radial_kernels import power_kernel_expansion
from mixred.rng import make_rng


class TestMixtureFiles(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        rng = make_rng(11)
        self.mixture = Mixture.diagonal(rng.standard_normal(4), rng.standard_normal((4, 2)),
                                        rng.uniform(0.2, 3.0, (4, 2)))

    def test_mixture_file_is_exact(self) -> None:
        path = os.path.join(self.tmp.name, "m.json")
        write_mixture(self.mixture, path)
        restored = read_mixture(path)
        self.assertEqual(restored.kind, CovKind.DIAG)
        np.testing.assert_array_equal(restored.coeffs, self.mixture.coeffs)
        np.testing.assert_array_equal(restored.means, self.mixture.means)
        np.testing.assert_array_equal(restored.covs, self.mixture.covs)

    def test_floats_needing_seventeen_digits_survive(self) -> None:
        awkward = [0.1 + 0.2, 1.0 / 3.0, float(np.nextafter(1.0, 2.0)), 5e-324, 1.7976931348623157e308]
        m = Mixture.isotropic(awkward, np.zeros((5, 1)), float(np.nextafter(0.5, 0.0)))
        path = os.path.join(self.tmp.name, "awkward.json")
        write_mixture(m, path)
        restored = read_mixture(path)
        self.assertEqual(restored.coeffs.tolist(), awkward)
        np.testing.assert_array_equal(restored.covs, m.covs)

    def test_full_covariances_are_row_major(self) -> None:
        full = Mixture.full([1.0], [[0.0, 0.0]], [[[2.0, 0.5], [0.5, 1.0]]])
        data = mixture_to_dict(full)
        self.assertEqual(data["atoms"][0]["cov"], {"kind": "full", "data": [2.0, 0.5, 0.5, 1.0]})
        np.testing.assert_array_equal(mixture_from_dict(data).covs[0], [[2.0, 0.5], [0.5, 1.0]])

    def test_coefficient_count_must_match(self) -> None:
        data = mixture_to_dict(self.mixture)
        data["coeffs"] = data["coeffs"][:3]
        with self.assertRaises(ConfigError) as ctx:
            mixture_from_dict(data)
        self.assertEqual(ctx.exception.field, "coeffs")

    def test_mixed_kinds_are_rejected(self) -> None:
        data = mixture_to_dict(self.mixture)
        data["atoms"][1]["cov"] = {"kind": "iso", "data": [1.0]}
        with self.assertRaises(ConfigError) as ctx:
            mixture_from_dict(data)
        self.assertEqual(ctx.exception.field, "atoms")

    def test_bad_lengths_name_the_atom(self) -> None:
        data = mixture_to_dict(self.mixture)
        data["atoms"][2]["mu"] = [0.0]
        with self.assertRaises(ConfigError) as ctx:
            mixture_from_dict(data)
        self.assertEqual(ctx.exception.field, "atoms/2/mu")
        data = mixture_to_dict(self.mixture)
        data["atoms"][3]["cov"]["data"] = [1.0, 2.0, 3.0]
        with self.assertRaises(ConfigError) as ctx:
            mixture_from_dict(data)
        self.assertEqual(ctx.exception.field, "atoms/3/cov/data")

    def test_schema_errors_carry_the_field(self) -> None:
        data = mixture_to_dict(self.mixture)
        data["atoms"][0]["cov"]["kind"] = "banded"
        with self.assertRaises(ConfigError) as ctx:
            check_schema(data, "mixture")
        self.assertEqual(ctx.exception.field, "atoms/0/cov/kind")
        self.assertTrue(str(ctx.exception).startswith("atoms/0/cov/kind: "))

    def test_missing_top_level_key(self) -> None:
        with self.assertRaises(ConfigError) as ctx:
            mixture_from_dict({"dim": 1, "coeffs": [1.0]})
        self.assertEqual(ctx.exception.field, "<root>")


class TestExpansionFiles(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = os.path.join(self.tmp.name, "k.json")
        self.expansion = power_kernel_expansion(3, 1e-8, 1e-3, 1e2)

    def test_expansion_file_keeps_terms(self) -> None:
        write_expansion(self.expansion, self.path)
        restored = read_expansion(self.path)
        np.testing.assert_array_equal(restored.weights, self.expansion.weights)
        np.testing.assert_array_equal(restored.exponents, self.expansion.exponents)
        self.assertEqual(restored.delta, self.expansion.delta)

    def test_term_lists_must_agree(self) -> None:
        data = self.expansion.to_dict()
        data["weights"] = data["weights"][:-1]
        write_json(data, self.path)
        with self.assertRaises(ConfigError) as ctx:
            read_expansion(self.path)
        self.assertEqual(ctx.exception.field, "weights")


class TestCsv(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_header_rows_and_float_format(self) -> None:
        path = os.path.join(self.tmp.name, "t.csv")
        count = write_csv(path, ["name", "n", "value"], [("a", np.int64(3), 0.1), ("b", 4, np.float64(1.0 / 3.0))])
        self.assertEqual(count, 2)
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["name", "n", "value"])
        self.assertEqual(rows[1], ["a", "3", "0.10000000000000001"])
        self.assertEqual(float(rows[2][2]), 1.0 / 3.0)

    def test_json_round_trip_of_plain_data(self) -> None:
        path = os.path.join(self.tmp.name, "r.json")
        write_json({"x": [0.1, 2], "ok": True}, path)
        self.assertEqual(read_json(path), {"x": [0.1, 2], "ok": True})


if __name__ == '__main__':
    unittest.main()
