"""
Run configuration for the suris-lab command line.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

from .errors import ParameterError

THREADS_ENV = "SURIS_LAB_THREADS"
DEFAULT_GRID = 2048
DEFAULT_TOL = 1e-10
MIN_GRID = 64

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(requested: Optional[int] = None) -> int:
    """--threads, else $SURIS_LAB_THREADS, else 1."""
    if requested is None:
        raw = os.environ.get(THREADS_ENV)
        if raw is None or raw.strip() == "":
            return 1
        try:
            requested = int(raw)
        except ValueError:
            raise ParameterError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if requested < 1:
        raise ParameterError(f"thread count must be positive, got {requested}")
    return requested


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Map ``func`` over ``items``; results keep the input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


@dataclass
class RunConfig:
    """
    Validated settings of one command-line run.

    Attributes:
        command: Subcommand name (experiment name appended for ``rigidity``)
        potential: Path of the potential JSON document
        params: Experiment parameters (p, q, rho, qmax, ...)
        out: Output path, stdout when absent
        format: ``csv`` or ``json``
        grid: Quadrature nodes
        tol: Residual tolerance
        threads: Worker threads
        seed: Seed of the random perturbations
        schema: Print CSV columns and exit
        verbose: DEBUG logging
    """

    command: str
    potential: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)
    out: Optional[str] = None
    format: str = "csv"
    grid: int = DEFAULT_GRID
    tol: float = DEFAULT_TOL
    threads: int = 1
    seed: int = 0
    schema: bool = False
    verbose: bool = False

    COMMON = ("command", "experiment", "potential", "out", "format", "grid", "tol",
              "threads", "seed", "schema", "verbose")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        values = vars(args)
        command = values["command"]
        if values.get("experiment"):
            command = f"{command} {values['experiment']}"
        params = {k: v for k, v in values.items() if k not in cls.COMMON and v is not None}
        config = cls(
            command=command,
            potential=values.get("potential"),
            params=params,
            out=values.get("out"),
            format=values.get("format") or "csv",
            grid=values.get("grid") or DEFAULT_GRID,
            tol=values.get("tol") if values.get("tol") is not None else DEFAULT_TOL,
            threads=resolve_threads(values.get("threads")),
            seed=values.get("seed") or 0,
            schema=bool(values.get("schema")),
            verbose=bool(values.get("verbose")),
        )
        if not config.schema:
            config.validate()
        return config

    def validate(self):
        """Check tolerances and paths before any computation."""
        if not self.tol > 0.0:
            raise ParameterError(f"--tol must be positive, got {self.tol}")
        if self.grid < MIN_GRID:
            raise ParameterError(f"--grid must be at least {MIN_GRID}, got {self.grid}")
        if self.format not in ("csv", "json"):
            raise ParameterError(f"unknown format {self.format!r}")
        for key in ("potential", "perturbation"):
            path = self.potential if key == "potential" else self.params.get(key)
            if path is not None and not Path(path).is_file():
                raise ParameterError(f"файл не найден: {path}")
        if self.out is not None:
            parent = Path(self.out).resolve().parent
            if not parent.is_dir():
                raise ParameterError(f"каталог для вывода не существует: {parent}")
            if not os.access(parent, os.W_OK):
                raise ParameterError(f"нет прав на запись в каталог: {parent}")

    def echo(self) -> Dict[str, Any]:
        """Config as recorded in report headers."""
        return asdict(self)
