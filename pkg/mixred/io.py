"""JSON and CSV files: mixtures, kernel expansions, experiment tables and reports."""
import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
from jsonschema import ValidationError, validate

from mixred.errors import ConfigError
from mixred.gaussian_core import CovKind, Mixture
from mixred.radial_kernels import KernelExpansion


logger = logging.getLogger(__name__)

SCHEMA_DIR: str = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "schemas")
FLOAT_FORMAT: str = "%.17g"


def load_schema(name: str) -> Dict[str, Any]:
    schema_path: str = os.path.join(SCHEMA_DIR, f"{name}.schema.json")
    with open(schema_path, "r", encoding="utf-8") as f:
        schema: Dict[str, Any] = json.load(f)
        return schema


def check_schema(data: Any, name: str) -> None:
    """Raises ConfigError naming the offending field when data does not conform."""
    try:
        validate(instance=data, schema=load_schema(name))
    except ValidationError as e:
        field: str = "/".join(str(part) for part in e.absolute_path) or "<root>"
        raise ConfigError(e.message, field=field) from e


def mixture_to_dict(m: Mixture) -> Dict[str, Any]:
    atoms: List[Dict[str, Any]] = []
    for l in range(m.size):
        cov: np.ndarray = m.covs[l]
        atoms.append({
            "mu": m.means[l].tolist(),
            "cov": {"kind": m.kind.value, "data": np.atleast_1d(cov).reshape(-1).tolist()},
        })
    return {"dim": m.dim, "coeffs": m.coeffs.tolist(), "atoms": atoms}


def mixture_from_dict(data: Dict[str, Any]) -> Mixture:
    check_schema(data, "mixture")
    d: int = int(data["dim"])
    atoms: List[Dict[str, Any]] = data["atoms"]
    if len(atoms) != len(data["coeffs"]):
        raise ConfigError(f"{len(data['coeffs'])} coefficients for {len(atoms)} atoms", field="coeffs")
    kinds = {atom["cov"]["kind"] for atom in atoms}
    if len(kinds) != 1:
        raise ConfigError(f"atoms mix covariance kinds {sorted(kinds)}", field="atoms")
    kind = CovKind(kinds.pop())
    expected: int = {CovKind.ISO: 1, CovKind.DIAG: d, CovKind.FULL: d * d}[kind]
    for index, atom in enumerate(atoms):
        if len(atom["mu"]) != d:
            raise ConfigError(f"mean has {len(atom['mu'])} entries, expected {d}", field=f"atoms/{index}/mu")
        if len(atom["cov"]["data"]) != expected:
            raise ConfigError(f"{kind.value} covariance needs {expected} entries", field=f"atoms/{index}/cov/data")

    means: np.ndarray = np.array([atom["mu"] for atom in atoms], dtype=np.float64).reshape(-1, d)
    values: np.ndarray = np.array([atom["cov"]["data"] for atom in atoms], dtype=np.float64)
    if kind is CovKind.ISO:
        return Mixture.isotropic(data["coeffs"], means, values[:, 0])
    if kind is CovKind.DIAG:
        return Mixture.diagonal(data["coeffs"], means, values)
    return Mixture.full(data["coeffs"], means, values.reshape(-1, d, d))


def write_json(data: Any, path: str) -> None:
    # json writes floats with repr, the shortest string that reads back to the same double
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_mixture(m: Mixture, path: str) -> None:
    write_json(mixture_to_dict(m), path)
    logger.debug("wrote %d-term mixture to %s", m.size, path)


def read_mixture(path: str) -> Mixture:
    return mixture_from_dict(read_json(path))


def write_expansion(e: KernelExpansion, path: str) -> None:
    write_json(e.to_dict(), path)


def read_expansion(path: str) -> KernelExpansion:
    data: Dict[str, Any] = read_json(path)
    check_schema(data, "kernel_expansion")
    if len(data["weights"]) != len(data["exponents"]):
        raise ConfigError("weights and exponents differ in length", field="weights")
    return KernelExpansion.from_dict(data)


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """Writes one header line and the rows, floats with 17 significant digits; returns the row count."""
    count: int = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
            count += 1
    logger.debug("wrote %d rows to %s", count, path)
    return count
