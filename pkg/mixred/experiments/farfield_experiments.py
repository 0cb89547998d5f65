import logging
import os
from typing import Any, Dict, List

import numpy as np

from mixred.base import FloatArray, IndexArray
from mixred.errors import ConfigError
from mixred.experiments.base import Experiment, ExperimentReport
from mixred.farfield import (
    CLOSED_FORM_3,
    QUADRATURE,
    EquivalentSources,
    SeedSelection,
    SkeletonSources,
    SkeletonTargets,
    SourceTargetConfig,
    assign_groups,
    circle_candidates,
    direct_sums,
    equivalent_sources,
    equivalent_sources_config,
    group_sizes,
    planar_sources_config,
    reduced_target_sums,
    select_seeds,
    skeleton_sources,
    skeleton_targets,
    sphere_candidates,
    summation_error,
)
from mixred.io import write_csv
from mixred.kde import rotated_plane_dataset


logger = logging.getLogger(__name__)


def resolve_mode(mode: str, d: int) -> str:
    """`auto` integrates over disks by quadrature and uses the 3-D ball formula otherwise."""
    if mode != "auto":
        return mode
    return QUADRATURE if d == 2 else CLOSED_FORM_3


class FarfieldExperiment(Experiment):
    name = "farfield"

    COLUMNS: List[str] = ["d", "dist_near", "dist_far", "n_terms", "r_s", "error", "r_t", "error_t"]

    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        workers: int = int(settings["threads"])
        eps: float = float(settings["eps"])
        expansion_eps: float = float(settings["expansion_eps"])
        rows: List[List[Any]] = []
        tables: List[str] = []
        for d in settings["dims"]:
            mode: str = resolve_mode(str(settings["mode"]), int(d))
            cfg: SourceTargetConfig = planar_sources_config(
                int(d), int(settings["n_sources"]), int(settings["n_targets"]), int(settings["seed"])
            )
            near, far = cfg.distance_range()
            result: SkeletonSources = skeleton_sources(cfg, eps, mode, expansion_eps, workers)
            exact: FloatArray = direct_sums(cfg)
            approx: FloatArray = direct_sums(cfg, cfg.sources[result.skeleton], result.strengths)
            error: float = summation_error(exact, approx)
            row: List[Any] = [int(d), near, far, result.expansion.n_terms, result.rank, error, "", ""]
            if settings["targets"]:
                transposed: SkeletonTargets = skeleton_targets(cfg, eps, mode, expansion_eps, workers)
                row[6:] = [transposed.rank, summation_error(exact, reduced_target_sums(cfg, transposed))]
            rows.append(row)
            logger.info("farfield d=%d: %d skeleton sources, error %.3e", d, result.rank, error)

            stem: str = f"farfield_sums_d{d}"
            scale: float = float(np.max(np.abs(exact)))
            write_csv(
                self.table_path(out_dir, stem),
                ["target_id", "g_direct", "g_skeleton", "rel_err"],
                ([m, exact[m], approx[m], abs(exact[m] - approx[m]) / scale] for m in range(exact.shape[0])),
            )
            tables.append(f"{stem}.csv")

        table: str = self.table_path(out_dir, "farfield")
        write_csv(table, self.COLUMNS, rows)
        return ExperimentReport(
            experiment=self.name,
            seed=int(settings["seed"]),
            tables=[os.path.basename(table)] + tables,
            summary={"rows": [dict(zip(self.COLUMNS, row)) for row in rows]},
        )


class EquivExperiment(Experiment):
    name = "equiv"

    COLUMNS: List[str] = ["d", "n_candidates", "selected", "retained", "error"]

    def _candidates(self, cfg: SourceTargetConfig, settings: Dict[str, Any]) -> FloatArray:
        if cfg.dim == 2:
            return circle_candidates(cfg.source_center, int(settings["circle_candidates"]))
        if cfg.dim == 3:
            return sphere_candidates(cfg.source_center, int(settings["sphere_theta"]), int(settings["sphere_phi"]))
        raise ConfigError(f"candidate layouts exist for d = 2 and 3, got {cfg.dim}", field="dims")

    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        workers: int = int(settings["threads"])
        rows: List[List[Any]] = []
        tables: List[str] = []
        for d in settings["dims"]:
            cfg: SourceTargetConfig = equivalent_sources_config(
                int(d), int(settings["n_sources"]), int(settings["n_targets"]), int(settings["seed"])
            )
            candidates: FloatArray = self._candidates(cfg, settings)
            result: EquivalentSources = equivalent_sources(
                cfg, candidates, float(settings["eps"]), resolve_mode(str(settings.get("mode", "auto")), int(d)),
                float(settings["expansion_eps"]), workers,
            )
            sources, strengths = result.sources_and_strengths(cfg)
            error: float = summation_error(direct_sums(cfg), direct_sums(cfg, sources, strengths))
            rows.append([int(d), candidates.shape[0], result.selected.size, result.retained.size, error])
            logger.info("equiv d=%d: %d of %d candidates, error %.3e", d, result.selected.size,
                        candidates.shape[0], error)

            stem: str = f"equiv_points_d{d}"
            coordinates: List[str] = [f"x{i + 1}" for i in range(int(d))]
            selected: IndexArray = result.selected
            point_rows: List[List[Any]] = (
                [["target", *x, 0.0] for x in cfg.targets.tolist()]
                + [["source", *y, f] for y, f in zip(cfg.sources.tolist(), cfg.strengths.tolist())]
                + [["candidate", *z, 0.0] for z in candidates.tolist()]
                + [["selected", *candidates[k].tolist(), c] for k, c in zip(selected, result.candidate_strengths)]
                + [["retained", *cfg.sources[n].tolist(), c] for n, c in zip(result.retained, result.retained_strengths)]
            )
            write_csv(self.table_path(out_dir, stem), ["kind", *coordinates, "strength"], point_rows)
            tables.append(f"{stem}.csv")

        table: str = self.table_path(out_dir, "equiv")
        write_csv(table, self.COLUMNS, rows)
        return ExperimentReport(
            experiment=self.name,
            seed=int(settings["seed"]),
            tables=[os.path.basename(table)] + tables,
            summary={"rows": [dict(zip(self.COLUMNS, row)) for row in rows]},
        )


class SeedsExperiment(Experiment):
    """Partitions of the planar two-component sample by nearest seed."""

    name = "seeds"

    def run(self, settings: Dict[str, Any], out_dir: str) -> ExperimentReport:
        points: FloatArray = rotated_plane_dataset(int(settings["n_points"]), 2, int(settings["seed"]), rotate=False).planar
        include_mean: bool = bool(settings["include_mean"])
        rows: List[List[Any]] = []
        runs: List[Dict[str, Any]] = []
        tables: List[str] = []
        for index, run in enumerate(settings["runs"]):
            h, n_seeds = float(run["h"]), int(run["n_seeds"])
            selection: SeedSelection = select_seeds(points, h, n_seeds, include_mean)
            labels: IndexArray = assign_groups(points, points[selection.seeds])
            sizes: IndexArray = group_sizes(labels, selection.seeds.size)
            for rank, (point_id, size) in enumerate(zip(selection.seeds, sizes)):
                rows.append([h, n_seeds, rank, int(point_id), int(size)])
            runs.append({"h": h, "n_seeds": n_seeds, "found": int(selection.seeds.size),
                         "group_sizes": [int(s) for s in sizes]})

            is_seed: np.ndarray = np.zeros(points.shape[0], dtype=bool)
            is_seed[selection.seeds] = True
            stem: str = f"seeds_partition_{index}"
            write_csv(
                self.table_path(out_dir, stem),
                ["point_id", "label", "is_seed"],
                ([i, int(labels[i]), int(is_seed[i])] for i in range(points.shape[0])),
            )
            tables.append(f"{stem}.csv")

        table: str = self.table_path(out_dir, "seeds")
        write_csv(table, ["h", "n_seeds", "seed_rank", "point_id", "group_size"], rows)
        return ExperimentReport(
            experiment=self.name,
            seed=int(settings["seed"]),
            tables=[os.path.basename(table)] + tables,
            summary={"include_mean": include_mean, "runs": runs},
        )
