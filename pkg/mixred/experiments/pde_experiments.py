import logging
import math
import os
from typing import Any, Dict, List

import numpy as np

from mixred.base import FloatArray
from mixred.experiments.base import Experiment, ExperimentReport
from mixred.gaussian_core import Mixture, mixture_eval
from mixred.io import write_csv
from mixred.numerical_oracles import gaussian_potential_3d
from mixred.pde_solvers import (
    EllipticBasis,
    EllipticProblem,
    GalerkinSolution,
    PoissonSolveReport,
    elliptic_basis,
    elliptic_galerkin_solve,
    elliptic_residual_fourier,
    poisson_solve,
    random_gaussian_rhs,
)
from mixred.radial_kernels import KernelExpansion, power_kernel_expansion
from mixred.rng import make_rng


logger = logging.getLogger(__name__)

ORACLE_RADII: int = 20
ORACLE_MAX_RADIUS: float = 10.0


def unit_gaussian_rhs(d: int) -> Mixture:
    """exp(-|x|^2 / 2) as a one-term mixture."""
    unit: Mixture = Mixture.isotropic(np.ones(1), np.zeros((1, d)), 1.0)
    return unit.scaled(math.exp(-float(unit.log_norms[0])))


def potential_error_3d(solution: Mixture) -> float:
    """Relative max error against the closed-form potential of exp(-|x|^2 / 2) at radii along the first axis."""
    radii: FloatArray = np.linspace(ORACLE_MAX_RADIUS / ORACLE_RADII, ORACLE_MAX_RADIUS, ORACLE_RADII)
    points: FloatArray = np.zeros((ORACLE_RADII, 3))
    points[:, 0] = radii
    exact: FloatArray = gaussian_potential_3d(radii)
    computed: FloatArray = np.asarray(mixture_eval(solution, points))
    return float(np.max(np.abs(computed - exact)) / np.max(np.abs(exact)))


class PoissonExperiment(Experiment):
    name = "poisson"

    COLUMNS: List[str] = ["d", "n_rhs", "n_terms", "n_total", "h_eps_ratio", "n_reduced", "h_tilde_ratio",
                          "h_ratio", "u_plus_ratio"]

    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        rng: np.random.Generator = make_rng(int(settings["seed"]))
        workers: int = int(settings["threads"])
        rows: List[List[Any]] = []
        tables: List[str] = []
        summary: Dict[str, Any] = {}
        for d in settings["dims"]:
            e: KernelExpansion = power_kernel_expansion(
                int(d), float(settings["expansion_eps"]), float(settings["delta"]), float(settings["radius"])
            )
            f: Mixture = random_gaussian_rhs(int(d), int(settings["n_rhs"]), rng)
            report: PoissonSolveReport = poisson_solve(
                f, e, float(settings["coeff_trunc"]), float(settings["red_eps"]), int(settings["samples"]), workers
            )
            values: Dict[str, Any] = report.summary()
            rows.append([values[column] for column in self.COLUMNS])
            residual_table: str = self.table_path(out_dir, f"poisson_residuals_d{d}")
            write_csv(residual_table, ["point_id", "direction", "s", "h_eps", "h_tilde", "h"], report.residual_rows())
            tables.append(os.path.basename(residual_table))

            if d == 3 and settings["oracle"]:
                oracle: PoissonSolveReport = poisson_solve(
                    unit_gaussian_rhs(3), e, float(settings["coeff_trunc"]), float(settings["red_eps"]),
                    int(settings["samples"]), workers,
                )
                summary["oracle_error_full"] = potential_error_3d(oracle.solution_full)
                summary["oracle_error_reduced"] = potential_error_3d(oracle.solution)
                logger.info("poisson oracle: reduced solution error %.3e", summary["oracle_error_reduced"])

        table: str = self.table_path(out_dir, "poisson")
        write_csv(table, self.COLUMNS, rows)
        summary["rows"] = [dict(zip(self.COLUMNS, row)) for row in rows]
        return ExperimentReport(
            experiment=self.name,
            seed=int(settings["seed"]),
            tables=[os.path.basename(table)] + tables,
            summary=summary,
        )


class EllipticExperiment(Experiment):
    name = "elliptic"

    COLUMNS: List[str] = ["d", "aligned", "n_terms", "n_candidates", "basis_size", "rank", "residual_ratio"]

    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        rng: np.random.Generator = make_rng(int(settings["seed"]))
        workers: int = int(settings["threads"])
        aligned: bool = bool(settings["aligned"])
        rows: List[List[Any]] = []
        for d in settings["dims"]:
            build = EllipticProblem.aligned if aligned else EllipticProblem.non_aligned
            p: EllipticProblem = build(
                int(d), rng,
                amplitude=float(settings["amplitude"]),
                wavenumber=float(settings["wavenumber"]),
                expansion_eps=float(settings["expansion_eps"]),
                expansion_delta=float(settings["delta"]),
                expansion_radius=float(settings["radius"]),
                iterations=int(settings["iterations"]),
                red_eps=float(settings["red_eps"]),
                svd_tol=float(settings["svd_tol"]),
            )
            basis: EllipticBasis = elliptic_basis(p, workers)
            solved: GalerkinSolution = elliptic_galerkin_solve(basis.basis, p)
            ratio: float = elliptic_residual_fourier(solved.solution, p, int(settings["samples"]))
            logger.info("elliptic d=%d: basis %d, rank %d, residual ratio %.3e", d, basis.size, solved.rank, ratio)
            rows.append([int(d), aligned, p.green_expansion.n_terms, basis.n_candidates, basis.size, solved.rank, ratio])

        table: str = self.table_path(out_dir, "elliptic")
        write_csv(table, self.COLUMNS, rows)
        return ExperimentReport(
            experiment=self.name,
            seed=int(settings["seed"]),
            tables=[os.path.basename(table)],
            summary={"rows": [dict(zip(self.COLUMNS, row)) for row in rows]},
        )
