import logging
import os
from typing import Any, Dict, List

import numpy as np

from mixred.base import FloatArray
from mixred.experiments.base import Experiment, ExperimentReport
from mixred.io import write_csv
from mixred.kde import (
    BIMODAL_BANDWIDTH,
    KdeModel,
    PlaneDataset,
    bimodal_dataset,
    bimodal_density,
    embed_plane,
    kde_build,
    kde_grid_errors,
    kde_reduce,
    line_grid,
    planar_scale,
    plane_density,
    plane_grid,
    rotated_plane_dataset,
    silverman_bandwidth,
)
from mixred.reduction import threshold_for_accuracy


logger = logging.getLogger(__name__)


class KdeExperiment(Experiment):
    """Bimodal estimate on the line, then the rotated-plane sample embedded in each dimension.

    The line reduction takes a requested accuracy; the plane reduction takes the pivot threshold itself.
    """

    name = "kde"

    COLUMNS: List[str] = ["d", "n", "h", "n_terms", "max_diff", "max_truth_error"]

    def _line(self, settings: Dict[str, Any], out_dir: str, workers: int) -> List[Any]:
        data: FloatArray = bimodal_dataset(int(settings["n_line"]), int(settings["seed"]))
        eps: float = threshold_for_accuracy(float(settings["line_accuracy"]), "cholesky")
        model: KdeModel = kde_reduce(kde_build(data, BIMODAL_BANDWIDTH), eps, workers)
        grid: FloatArray = line_grid(model)
        full, reduced, diff = kde_grid_errors(model, grid)
        truth: FloatArray = bimodal_density(grid)
        write_csv(
            self.table_path(out_dir, "kde_line"),
            ["x", "g", "f", "F", "abs_diff"],
            ([grid[i, 0], truth[i], full[i], reduced[i], diff[i]] for i in range(grid.shape[0])),
        )
        return [1, model.size, BIMODAL_BANDWIDTH, model.n_terms, float(np.max(diff)),
                float(np.max(np.abs(reduced - truth)))]

    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        workers: int = int(settings["threads"])
        rows: List[List[Any]] = []
        tables: List[str] = []
        if settings["line"]:
            rows.append(self._line(settings, out_dir, workers))
            tables.append("kde_line.csv")

        n_plane: int = int(settings["n_plane"])
        h: float = float(settings.get("plane_bandwidth") or silverman_bandwidth(2, n_plane))
        planar_points: FloatArray = plane_grid(int(settings["grid_size"]), float(settings["grid_half_width"]))
        truth: FloatArray = plane_density(planar_points)
        for d in settings["dims"]:
            dataset: PlaneDataset = rotated_plane_dataset(n_plane, int(d), int(settings["seed"]))
            model: KdeModel = kde_reduce(kde_build(dataset.points, h), float(settings["plane_eps"]), workers)
            full, reduced, diff = kde_grid_errors(model, embed_plane(planar_points, dataset.rotation))
            on_plane: FloatArray = reduced / planar_scale(int(d), h)
            rows.append([int(d), model.size, h, model.n_terms, float(np.max(diff)),
                         float(np.max(np.abs(on_plane - truth)))])
            logger.info("kde plane d=%d: %d -> %d terms, max |f - F| %.3e", d, model.size, model.n_terms, rows[-1][4])
            if d == settings["dims"][-1]:
                stem: str = f"kde_plane_d{d}"
                write_csv(
                    self.table_path(out_dir, stem),
                    ["y1", "y2", "f", "F", "abs_diff"],
                    ([planar_points[i, 0], planar_points[i, 1], full[i], reduced[i], diff[i]]
                     for i in range(planar_points.shape[0])),
                )
                tables.append(f"{stem}.csv")

        table: str = self.table_path(out_dir, "kde")
        write_csv(table, self.COLUMNS, rows)
        return ExperimentReport(
            experiment=self.name,
            seed=int(settings["seed"]),
            tables=[os.path.basename(table)] + tables,
            summary={"rows": [dict(zip(self.COLUMNS, row)) for row in rows]},
        )
