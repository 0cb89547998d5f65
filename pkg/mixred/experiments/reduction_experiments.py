"""Skeleton counts against requested accuracy, and reduction wall time against N and r."""
import logging
import os
import time
from typing import Any, Dict, List, Tuple

import numpy as np

from mixred.base import FloatArray
from mixred.dense_linalg import random_unitary
from mixred.experiments.base import Experiment, ExperimentReport
from mixred.gaussian_core import GaussianFamily, Mixture, mixture_eval
from mixred.io import write_csv
from mixred.reduction import MIN_THRESHOLD, ReductionResult, pivoted_cholesky, reduce_mixture
from mixred.rng import make_rng


logger = logging.getLogger(__name__)


def accuracy_mixture(n: int, rng: np.random.Generator) -> Mixture:
    """1-D mixture with c ~ U(-1, 1), standard deviation ~ U(0, 0.5) and mean ~ U(-5, 5)."""
    coeffs: FloatArray = rng.uniform(-1.0, 1.0, n)
    stds: FloatArray = rng.uniform(0.0, 0.5, n)
    means: FloatArray = rng.uniform(-5.0, 5.0, n)
    return Mixture.diagonal(coeffs, means.reshape(-1, 1), (stds * stds).reshape(-1, 1))


def timing_mixture(n: int, d: int, rng: np.random.Generator) -> Mixture:
    """c ~ U(-1, 1), mean ~ U(-25, 25)^d and Sigma = U D U^T with D ~ U(0, 0.01)^d per atom."""
    coeffs: FloatArray = rng.uniform(-1.0, 1.0, n)
    means: FloatArray = rng.uniform(-25.0, 25.0, (n, d))
    variances: FloatArray = rng.uniform(0.0, 0.01, (n, d))
    if d == 1:
        return Mixture.diagonal(coeffs, means, variances)
    covs: FloatArray = np.empty((n, d, d))
    for l in range(n):
        u: FloatArray = random_unitary(d, rng)
        covs[l] = (u * variances[l]) @ u.T
    return Mixture.full(coeffs, means, covs)


def relative_grid_error(original: Mixture, reduced: Mixture, grid: FloatArray) -> Tuple[float, FloatArray]:
    exact: FloatArray = np.asarray(mixture_eval(original, grid))
    error: FloatArray = np.abs(exact - np.asarray(mixture_eval(reduced, grid)))
    return float(np.max(error) / np.max(np.abs(exact))), error


class ReduceExperiment(Experiment):
    name = "reduce"

    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        rng: np.random.Generator = make_rng(int(settings["seed"]))
        m: Mixture = accuracy_mixture(int(settings["n"]), rng)
        half_width: float = float(settings["grid_half_width"])
        grid: FloatArray = np.linspace(-half_width, half_width, int(settings["grid_size"])).reshape(-1, 1)

        algorithms: List[str] = [settings["algorithm"]] if "algorithm" in settings else list(settings["algorithms"])
        rows: List[Tuple[float, str, int, float]] = []
        skeletons: Dict[Tuple[str, float], np.ndarray] = {}
        finest_errors: Dict[str, FloatArray] = {}
        for algorithm in algorithms:
            key: str = "frequency_accuracies" if algorithm == "frequency" else "accuracies"
            accuracies: List[float] = [settings["accuracy"]] if "accuracy" in settings else list(settings[key])
            for accuracy in accuracies:
                result: ReductionResult = reduce_mixture(m, accuracy, algorithm, workers=int(settings["threads"]))
                actual, error = relative_grid_error(m, result.apply(m), grid)
                rows.append((accuracy, algorithm, result.rank, actual))
                skeletons[(algorithm, accuracy)] = np.sort(result.skeleton)
                finest_errors[algorithm] = error
                logger.info("%s at %.1e: r=%d, error %.3e", algorithm, accuracy, result.rank, actual)

        table: str = self.table_path(out_dir, "reduce")
        write_csv(table, ["requested", "algorithm", "r", "actual_error"], rows)
        grid_table: str = self.table_path(out_dir, "reduce_grid")
        exact: FloatArray = np.asarray(mixture_eval(m, grid))
        write_csv(
            grid_table,
            ["x", "u"] + [f"error_{algorithm}" for algorithm in finest_errors],
            (
                [grid[i, 0], exact[i]] + [finest_errors[algorithm][i] for algorithm in finest_errors]
                for i in range(grid.shape[0])
            ),
        )

        shared: List[float] = sorted({
            accuracy for (algorithm, accuracy) in skeletons
            if algorithm == "mgs" and ("cholesky", accuracy) in skeletons
        })
        same: List[bool] = [
            bool(np.array_equal(skeletons[("cholesky", accuracy)], skeletons[("mgs", accuracy)])) for accuracy in shared
        ]
        return ExperimentReport(
            experiment=self.name,
            seed=int(settings["seed"]),
            tables=[os.path.basename(table), os.path.basename(grid_table)],
            summary={
                "n": m.size,
                "rows": [{"requested": a, "algorithm": alg, "r": r, "actual_error": e} for a, alg, r, e in rows],
                "cholesky_mgs_same_skeleton": all(same) if same else None,
            },
        )


class TimingExperiment(Experiment):
    """Seconds of the greedy pivoting stage run to a fixed rank."""

    name = "timing"

    def _time(self, m: Mixture, rank: int, workers: int) -> float:
        start: float = time.perf_counter()
        pivoted_cholesky(GaussianFamily(m, workers), MIN_THRESHOLD, max_rank=rank)
        return time.perf_counter() - start

    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        rng: np.random.Generator = make_rng(int(settings["seed"]))
        workers: int = int(settings["threads"])
        rows: List[Tuple[int, int, int, float]] = []
        for d in settings["dims"]:
            for n in settings["sizes"]:
                m: Mixture = timing_mixture(int(n), int(d), rng)
                rows.append((int(d), int(n), int(settings["rank"]), self._time(m, int(settings["rank"]), workers)))
                logger.info("timing d=%d N=%d: %.3f s", d, n, rows[-1][3])
            base: Mixture = timing_mixture(int(settings["base_size"]), int(d), rng)
            for r in settings["ranks"]:
                rows.append((int(d), base.size, int(r), self._time(base, int(r), workers)))

        table: str = self.table_path(out_dir, "timing")
        write_csv(table, ["d", "N", "r", "seconds"], rows)
        ratios: Dict[str, List[float]] = {}
        for d in settings["dims"]:
            fixed_rank: List[float] = [
                seconds for (dim, n, r, seconds) in rows if dim == d and r == settings["rank"] and n in settings["sizes"]
            ][: len(settings["sizes"])]
            ratios[str(d)] = [later / earlier for earlier, later in zip(fixed_rank, fixed_rank[1:])]
        return ExperimentReport(
            experiment=self.name,
            seed=int(settings["seed"]),
            tables=[os.path.basename(table)],
            summary={"doubling_ratios": ratios},
        )
