"""
Reading and writing instance files, reports and summary tables.

Complex scalars are stored as [re, im] pairs and matrices as row-major nested
lists. Floats go through ``json`` unchanged, which writes the shortest
repr that reads back to the same double.
"""
import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from povm_coherence.errors import MalformedInput
from povm_coherence.naimark import NaimarkExtension
from povm_coherence.quantum import DensityMatrix, Povm, ProjectiveMeasurement


DEFAULT_RESULTS_DIR = "results"
DEFAULT_SUMMARY_FILENAME = "verification_summary.csv"
MEASUREMENT_TYPES = ("projective", "povm")


def ensure_directory_exists(directory_path: str) -> Path:
    """
    Ensure that the specified directory exists. If not, create it.

    Parameters:
       directory_path (str or Path): The path to the folder to check or create.

    Returns:
        Path: The Path object of the ensured directory.
    """
    path = Path(directory_path)
    if not path.exists():
        path.mkdir(parents=True, exist_ok=True)

    return path


def encode_matrix(m) -> List[List[List[float]]]:
    """Nested [re, im] lists of a complex matrix."""
    arr = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def decode_matrix(data, what: str = "matrix") -> np.ndarray:
    """
    Inverse of ``encode_matrix``. Plain real numbers are accepted in place
    of [re, im] pairs.

    Raises:
        MalformedInput: If the data is not a rectangular matrix of numbers
          or [re, im] pairs.
    """
    if not isinstance(data, list) or len(data) == 0:
        raise MalformedInput(f"{what} must be a non-empty list of rows")
    rows = []
    for row in data:
        if not isinstance(row, list) or len(row) != len(data[0]):
            raise MalformedInput(f"{what} rows must be lists of equal length")
        entries = []
        for entry in row:
            if isinstance(entry, bool):
                raise MalformedInput(f"{what} has a boolean entry")
            if isinstance(entry, (int, float)):
                entries.append(complex(entry, 0.0))
            elif (
                isinstance(entry, list)
                and len(entry) == 2
                and all(
                    isinstance(x, (int, float)) and not isinstance(x, bool)
                    for x in entry
                )
            ):
                entries.append(complex(entry[0], entry[1]))
            else:
                raise MalformedInput(f"{what} has an entry {entry!r}")
        rows.append(entries)
    return np.array(rows, dtype=complex)


def _decode_list(data, what: str) -> List[np.ndarray]:
    if not isinstance(data, list) or len(data) == 0:
        raise MalformedInput(f"{what} must be a non-empty list of matrices")
    return [decode_matrix(item, f"{what}[{k}]") for k, item in enumerate(data)]


def read_json(path: str) -> Dict[str, Any]:
    """
    Load a JSON object from a file.

    Raises:
        MalformedInput: If the file cannot be read, is not JSON or is not an
          object.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as error:
        raise MalformedInput(f"Cannot read {path}: {error}") from error
    if not isinstance(data, dict):
        raise MalformedInput(f"{path} does not hold a JSON object")
    return data


def write_json(path: str, data: Dict[str, Any]) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        ensure_directory_exists(directory)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps(data))
        handle.write("\n")


def dumps(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=2, allow_nan=True)


def digest(data: Any) -> str:
    """SHA-256 of the canonical JSON encoding (sorted keys, no whitespace)."""
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def state_payload(rho) -> Dict[str, Any]:
    mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return {"dim": int(mat.shape[0]), "rho": encode_matrix(mat)}


def parse_state(data: Dict[str, Any]) -> DensityMatrix:
    """
    Build a DensityMatrix from {"dim": d, "rho": [[...]]}.

    Raises:
        MalformedInput: On schema errors.
        InvalidState: If the matrix is not a state.
    """
    if "rho" not in data:
        raise MalformedInput("State file lacks the 'rho' field")
    mat = decode_matrix(data["rho"], "rho")
    dim = data.get("dim", mat.shape[0])
    if not isinstance(dim, int) or mat.shape != (dim, dim):
        raise MalformedInput(f"'rho' of shape {mat.shape} does not match dim {dim}")
    return DensityMatrix(mat)


def measurement_payload(m: ProjectiveMeasurement | Povm) -> Dict[str, Any]:
    if isinstance(m, ProjectiveMeasurement):
        return {
            "type": "projective",
            "projectors": [encode_matrix(pr) for pr in m.projectors],
        }
    return {
        "type": "povm",
        "effects": [encode_matrix(effect) for effect in m.effects],
        "kraus": [encode_matrix(op) for op in m.kraus],
    }


def parse_measurement(data: Dict[str, Any]) -> ProjectiveMeasurement | Povm:
    """
    Build a measurement from {"type": "projective", "projectors": [...]} or
    {"type": "povm", "effects": [...], "kraus": optional [...]}.

    Raises:
        MalformedInput: On schema errors.
        InvalidState: If the operators violate measurement invariants.
    """
    kind = data.get("type")
    if kind not in MEASUREMENT_TYPES:
        raise MalformedInput(f"Measurement type must be one of {MEASUREMENT_TYPES}")
    if kind == "projective":
        return ProjectiveMeasurement(_decode_list(data.get("projectors"), "projectors"))
    effects = _decode_list(data.get("effects"), "effects")
    kraus = data.get("kraus")
    if kraus is None:
        return Povm(effects)
    return Povm(effects, _decode_list(kraus, "kraus"))


def read_state(path: str) -> DensityMatrix:
    return parse_state(read_json(path))


def read_measurement(path: str) -> ProjectiveMeasurement | Povm:
    return parse_measurement(read_json(path))


def write_state(path: str, rho) -> None:
    write_json(path, state_payload(rho))


def write_measurement(path: str, m: ProjectiveMeasurement | Povm) -> None:
    write_json(path, measurement_payload(m))


def naimark_payload(
    ext: NaimarkExtension, residuals: Dict[str, float] | None = None
) -> Dict[str, Any]:
    """V, the A_ij grid and the dilated projectors of an extension."""
    payload = {
        "d": ext.d,
        "n": ext.n,
        "completion": ext.completion,
        "V": encode_matrix(ext.v),
        "blocks": [[encode_matrix(block) for block in row] for row in ext.blocks],
        "dilated": [encode_matrix(pr) for pr in ext.dilated.projectors],
    }
    if residuals is not None:
        payload["residuals"] = residuals
    return payload


def save_data_to_csv(
    dataframe: pd.DataFrame,
    filename: str = DEFAULT_SUMMARY_FILENAME,
    results_folder: str = DEFAULT_RESULTS_DIR,
) -> Path:
    """
    Save a DataFrame to CSV without its index.

    Parameters:
        dataframe (pd.DataFrame): The table to save.
        filename (str, optional): File name. Defaults to
          ``DEFAULT_SUMMARY_FILENAME``.
        results_folder (str, optional): Target folder, created if missing.
          Defaults to ``DEFAULT_RESULTS_DIR``.

    Returns:
        Path: The written file.
    """
    directory_path = ensure_directory_exists(results_folder)
    filepath = directory_path / filename
    dataframe.to_csv(filepath, index=False)
    return filepath
