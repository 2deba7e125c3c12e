# Salidas: tiempos, CSV/JSON/Parquet, manifiesto de corrida y mapa paralelo ordenado

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import wraps
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from bistable_fronts.config import (
    CSV_FLOAT_FORMAT,
    DEFAULT_OUTPUT_SUBDIR,
    JOBS_ENV,
    OUTPUT_DIR_ENV,
)

# Cargar variables de entorno
load_dotenv()

logger = logging.getLogger(__name__)


def timer(func: Callable) -> Callable:
    """Mide tiempo de ejecución de la función"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        start = time.time()
        result = func(*args, **kwargs)
        elapsed = time.time() - start
        logger.info(f"{func.__name__} - Tiempo: {elapsed:.2f}s")
        return result

    return wrapper


def get_default_output_path() -> Path:
    """Directorio de salida: BISTABLE_FRONTS_OUTPUT_DIR o ./data/output."""
    env_dir = os.getenv(OUTPUT_DIR_ENV)
    if env_dir:
        return Path(env_dir)
    return Path.cwd().joinpath(*DEFAULT_OUTPUT_SUBDIR)


def get_default_jobs() -> int:
    raw = os.getenv(JOBS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning(f"{JOBS_ENV}={raw!r} no es un entero, se usa 1")
        return 1


def parallel_map(func: Callable, items: Sequence, jobs: Optional[int] = 1) -> List[Any]:
    """
    Aplica func a cada item, en procesos si jobs > 1.

    El resultado respeta el orden de items sin importar el orden de terminación.
    """
    workers = get_default_jobs() if jobs is None else jobs
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


#######################################################################################
# Escritura de archivos
#######################################################################################


def write_csv(df: pd.DataFrame, file_path: Path) -> Path:
    """
    Guarda un DataFrame como CSV con 17 cifras significativas.

    Los infinitos quedan como "inf".
    """
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(file_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"CSV guardado en: {file_path} ({len(df):,} filas)")
    return file_path


def save_to_parquet(df: pd.DataFrame, output_path: Path, filename: str) -> Path:
    """
    Guarda DataFrame en formato Parquet junto a los CSV.

    Args:
        df: DataFrame a guardar
        output_path: Directorio de salida
        filename: Nombre del archivo (sin extensión)

    Returns:
        Path al archivo guardado
    """
    output_path = Path(output_path)
    output_path.mkdir(parents=True, exist_ok=True)
    file_path = output_path / f"{filename}.parquet"

    df.to_parquet(file_path, engine="pyarrow", compression="snappy", index=False)

    logger.info(f"Datos guardados en: {file_path}")

    # Mostrar tamaño en unidad apropiada
    size_bytes = file_path.stat().st_size
    if size_bytes < 1024 * 1024:  # Menor a 1 MB
        logger.info(f"Tamaño: {size_bytes / 1024:.2f} KB")
    else:
        logger.info(f"Tamaño: {size_bytes / 1024 / 1024:.2f} MB")

    return file_path


def _json_safe(value: Any) -> Any:
    # JSON estándar no admite inf/nan
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, np.generic):
        return _json_safe(value.item())
    return value


def to_json(payload: Dict[str, Any]) -> str:
    return json.dumps(_json_safe(payload), indent=2, sort_keys=True)


def write_json(payload: Dict[str, Any], file_path: Path) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_text(to_json(payload) + "\n", encoding="utf-8")
    logger.info(f"JSON guardado en: {file_path}")
    return file_path


def write_key_values(payload: Dict[str, Any], file_path: Path) -> Path:
    """Bloque plano clave=valor, una línea por campo."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key}={_json_safe(value)}" for key, value in payload.items()]
    file_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return file_path


def write_gnuplot_script(
    file_path: Path,
    csv_paths: Iterable[Path],
    xlabel: str,
    ylabel: str,
    title: str,
    columns: str = "1:2",
) -> Path:
    """Script de gnuplot que grafica las columnas `columns` (gnuplot `using`) de cada CSV."""
    file_path = Path(file_path)
    plots = ", \\\n     ".join(
        f"'{Path(p).name}' using {columns} with lines title '{Path(p).stem}'" for p in csv_paths
    )
    script = "\n".join(
        [
            "set datafile separator ','",
            "set key autotitle columnhead",
            f"set title '{title}'",
            f"set xlabel '{xlabel}'",
            f"set ylabel '{ylabel}'",
            f"plot {plots}",
            "",
        ]
    )
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_text(script, encoding="utf-8")
    return file_path


#######################################################################################
# Manifiesto de corrida
#######################################################################################


def package_version() -> str:
    try:
        return metadata.version("bistable-fronts")
    except metadata.PackageNotFoundError:
        return "0.1.0"


@dataclass
class RunManifest:
    """Registro de una corrida: comando, parámetros, archivos y tiempo."""

    command: str
    parameters: Dict[str, Any]
    outputs: List[str] = field(default_factory=list)
    versions: str = field(default_factory=package_version)
    wall_time: float = 0.0
    summary: Dict[str, Any] = field(default_factory=dict)

    def add_output(self, path: Path) -> None:
        self.outputs.append(str(path))

    def write(self, file_path: Path) -> Path:
        return write_json(asdict(self), file_path)
