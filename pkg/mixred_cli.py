import logging
import os
from typing import Any, Callable, Dict, Optional

import click

from mixred.errors import ConfigError, MixredError, NumericalError
from mixred.experiments import ExperimentRegistry, ExperimentReport, default_registry, load_config
from mixred.gaussian_core import Mixture
from mixred.io import read_mixture, write_mixture
from mixred.reduction import ALGORITHMS, ReductionResult, reduce_mixture


EXIT_CONFIG: int = 2
EXIT_NUMERICAL: int = 3
LOG_LEVELS: Dict[str, int] = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

TABLE_HELP: Dict[str, str] = {
    "reduce": "Skeleton counts against requested accuracy.\n\n"
              "reduce.csv: requested,algorithm,r,actual_error\n\n"
              "reduce_grid.csv: x,u,error_<algorithm>... at the tightest accuracy",
    "timing": "Wall time of the pivoting stage against N and r.\n\n"
              "timing.csv: d,N,r,seconds",
    "poisson": "Free-space Poisson solves with random Gaussian right-hand sides.\n\n"
               "poisson.csv: d,n_rhs,n_terms,n_total,h_eps_ratio,n_reduced,h_tilde_ratio,h_ratio,u_plus_ratio\n\n"
               "poisson_residuals_d<d>.csv: point_id,direction,s,h_eps,h_tilde,h",
    "elliptic": "Variable-coefficient elliptic solves on a reduced Gaussian basis.\n\n"
                "elliptic.csv: d,aligned,n_terms,n_candidates,basis_size,rank,residual_ratio",
    "kde": "Kernel density estimates reduced to a subset of the data points.\n\n"
           "kde.csv: d,n,h,n_terms,max_diff,max_truth_error (d=1 is the bimodal line sample)\n\n"
           "kde_line.csv: x,g,f,F,abs_diff\n\n"
           "kde_plane_d<d>.csv: y1,y2,f,F,abs_diff on the rotated plane grid",
    "farfield": "Far-field sums through skeleton sources.\n\n"
                "farfield.csv: d,dist_near,dist_far,n_terms,r_s,error,r_t,error_t\n\n"
                "farfield_sums_d<d>.csv: target_id,g_direct,g_skeleton,rel_err",
    "equiv": "Equivalent sources on the sphere around the source ball.\n\n"
             "equiv.csv: d,n_candidates,selected,retained,error\n\n"
             "equiv_points_d<d>.csv: kind,x1..xd,strength",
    "seeds": "Seeds for partitioning a point cloud.\n\n"
             "seeds.csv: h,n_seeds,seed_rank,point_id,group_size\n\n"
             "seeds_partition_<i>.csv: point_id,label,is_seed",
}


def configure_logging() -> None:
    level_name: str = os.environ.get("MIXRED_LOG", "error").lower()
    if level_name not in LOG_LEVELS:
        raise ConfigError(f"unknown log level '{level_name}', expected one of {sorted(LOG_LEVELS)}", field="MIXRED_LOG")
    logger = logging.getLogger("mixred")
    logger.setLevel(LOG_LEVELS[level_name])
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)


def exit_code_for(error: Exception) -> int:
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_CONFIG


def run_guarded(action: Callable[[], None]) -> None:
    """Runs the action and maps library errors to the documented exit codes."""
    try:
        configure_logging()
        action()
    except (MixredError, ValueError) as e:
        click.echo(f"Error: {e}", err=True)
        raise SystemExit(exit_code_for(e))


def run_experiment(name: str, config_path: Optional[str], overrides: Dict[str, Any],
                   registry: Optional[ExperimentRegistry] = None) -> ExperimentReport:
    config: Dict[str, Any] = load_config(config_path) if config_path else {}
    report: ExperimentReport = (registry or default_registry()).run(name, config, overrides)
    return report


def make_command(name: str) -> click.Command:
    @click.option('--config', 'config_path', default=None, help='Experiment config (JSON or YAML)')
    @click.option('--seed', type=int, default=None, help='PRNG seed')
    @click.option('--out', default=None, help='Output directory for tables and the report')
    @click.option('--threads', type=click.IntRange(min=1), default=None, help='Workers for Gram column fills')
    @click.option('--accuracy', type=float, default=None, help='Single requested accuracy')
    @click.option('--algorithm', type=click.Choice(ALGORITHMS), default=None, help='Reduction algorithm')
    def command(config_path: Optional[str], seed: Optional[int], out: Optional[str], threads: Optional[int],
                accuracy: Optional[float], algorithm: Optional[str]) -> None:
        overrides: Dict[str, Any] = {
            "seed": seed, "out": out, "threads": threads, "accuracy": accuracy, "algorithm": algorithm,
        }

        def action() -> None:
            click.echo(f"Running experiment '{name}'")
            report: ExperimentReport = run_experiment(name, config_path, overrides)
            for table in report.tables:
                click.echo(f"Wrote: {table}")
            click.echo(f"Report: {name}_report.json")

        run_guarded(action)

    return click.command(name=name, help=TABLE_HELP[name])(command)


@click.group()
@click.version_option(package_name="mixred")
def main() -> None:
    """Gaussian mixture reduction and its applications.

    Exit codes: 0 success, 2 configuration error, 3 numerical failure.
    Set MIXRED_LOG to error, info or debug for diagnostics on stderr.
    """


@main.command(name="reduce-file")
@click.argument('input_path', type=click.Path(exists=True, dir_okay=False))
@click.argument('output_path', type=click.Path(dir_okay=False))
@click.option('--accuracy', type=float, default=1e-7, show_default=True, help='Requested accuracy')
@click.option('--algorithm', type=click.Choice(ALGORITHMS), default='cholesky', show_default=True)
@click.option('--threads', type=click.IntRange(min=1), default=1, show_default=True)
def reduce_file(input_path: str, output_path: str, accuracy: float, algorithm: str, threads: int) -> None:
    """Reduce a mixture file and write the reduced mixture."""

    def action() -> None:
        m: Mixture = read_mixture(input_path)
        result: ReductionResult = reduce_mixture(m, accuracy, algorithm, workers=threads)
        write_mixture(result.apply(m), output_path)
        click.echo(f"Reduced {m.size} terms to {result.rank}")
        click.echo(f"Results saved to '{output_path}'")

    run_guarded(action)


for experiment_name in TABLE_HELP:
    main.add_command(make_command(experiment_name))


if __name__ == '__main__':
    main()
