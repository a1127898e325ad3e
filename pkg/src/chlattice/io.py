"""Input file schemas, command-line value parsing and table output."""

import csv
import io
import json
from pathlib import Path
from typing import Annotated, Any, Callable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .chgeom import distances
from .errors import InputError
from .models import BallPoint, GroupSpec, Isometry, SpectralData, SpectralEntry
from .spectral import constant_phi

Cell = Union[bool, int, float, str]
Row = dict[str, Cell]


def _entry(value: Any) -> complex:
    """A matrix or coordinate entry: [re, im], a number, or a complex literal."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InputError(f"complex entry must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError as exc:
            raise InputError(f"cannot parse complex number {value!r}") from exc
    if isinstance(value, (int, float)):
        return complex(value)
    raise InputError(f"unsupported entry {value!r}")


def _is_entry(value: Any) -> bool:
    return (
        isinstance(value, (int, float, str))
        or (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, (int, float)) for v in value))
    )


def parse_matrix(raw: Any, n: int) -> np.ndarray:
    """(n+1)x(n+1) matrix from a flat row-major entry list or a list of rows."""
    size = n + 1
    if not isinstance(raw, list):
        raise InputError("a generator must be a list")
    if len(raw) == size * size and all(_is_entry(v) for v in raw):
        return np.array([_entry(v) for v in raw], dtype=complex).reshape(size, size)
    if len(raw) == size and all(isinstance(row, list) and len(row) == size for row in raw):
        return np.array([[_entry(v) for v in row] for row in raw], dtype=complex)
    raise InputError(f"generator is not a {size}x{size} matrix")


class GroupFile(BaseModel):
    """JSON description of a discrete group."""

    n: int = Field(ge=1)
    generators: list[list[Any]] = Field(default_factory=list)
    include_inverses: bool = True
    max_word_length: int = Field(default=12, ge=1)
    dedup_tol: Optional[float] = Field(default=None, gt=0)
    prune_margin: Optional[float] = Field(default=None, ge=0)
    description: str = ""

    def to_group_spec(self) -> GroupSpec:
        gens = []
        for k, raw in enumerate(self.generators):
            try:
                gens.append(Isometry(matrix=parse_matrix(raw, self.n)))
            except ValidationError as exc:
                reason = exc.errors()[0]["msg"]
                raise InputError(f"generator {k} is not an isometry: {reason}") from exc
        extra: dict[str, Any] = {}
        if self.dedup_tol is not None:
            extra["dedup_tol"] = self.dedup_tol
        return GroupSpec(
            n=self.n,
            generators=gens,
            include_inverses=self.include_inverses,
            max_word_length=self.max_word_length,
            prune_margin=self.prune_margin,
            **extra,
        )


class ConstantPhi(BaseModel):
    """phi = value everywhere; 1/sqrt(covolume) when no value is given."""

    kind: Literal["constant"]
    value: Optional[float] = None


class TablePhi(BaseModel):
    """phi sampled at points; evaluated at the nearest sample."""

    kind: Literal["table"]
    points: list[list[Any]] = Field(min_length=1)
    values: list[float] = Field(min_length=1)


PhiSpec = Annotated[Union[ConstantPhi, TablePhi], Field(discriminator="kind")]


class SpectralEntryFile(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda", lt=0)
    phi: PhiSpec


class SpectralFile(BaseModel):
    """JSON description of discrete spectral data."""

    covolume: Optional[float] = Field(default=None, gt=0)
    entries: list[SpectralEntryFile] = Field(default_factory=list)

    def to_spectral_data(self, n: int) -> SpectralData:
        entries = []
        for k, entry in enumerate(self.entries):
            if entry.lam < -n * n:
                raise InputError(f"entry {k}: lambda = {entry.lam} is below -n^2 = {-n * n}")
            entries.append(SpectralEntry(lam=entry.lam, phi=self._evaluator(entry.phi, n, k)))
        return SpectralData(entries=entries, covolume=self.covolume, n=n)

    def _evaluator(
        self, source: Union[ConstantPhi, TablePhi], n: int, k: int
    ) -> Callable[[BallPoint], float]:
        if isinstance(source, ConstantPhi):
            if source.value is not None:
                return constant_phi(source.value)
            if self.covolume is None:
                raise InputError(f"entry {k}: constant phi without a value needs a covolume")
            return constant_phi(1.0 / float(np.sqrt(self.covolume)))
        if len(source.points) != len(source.values):
            raise InputError(
                f"entry {k}: {len(source.points)} points but {len(source.values)} values"
            )
        samples = np.array([[_entry(c) for c in p] for p in source.points], dtype=complex)
        if samples.shape[1] != n:
            raise InputError(f"entry {k}: table points are not in CH^{n}")
        if np.any(np.sum(np.abs(samples) ** 2, axis=1) >= 1.0):
            raise InputError(f"entry {k}: table point outside the unit ball")
        values = np.array(source.values, dtype=float)

        def phi(x: BallPoint) -> float:
            return float(values[int(np.argmin(distances(x.coords, samples)))])

        return phi


def _read(path: Path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def load_group_file(path: Path) -> GroupSpec:
    return GroupFile.model_validate_json(_read(path)).to_group_spec()


def load_spectral_file(path: Path, n: int) -> SpectralData:
    return SpectralFile.model_validate_json(_read(path)).to_spectral_data(n)


def parse_point(text: Optional[str], n: int) -> BallPoint:
    """Comma-separated complex coordinates; the origin when empty."""
    if text is None or not text.strip():
        return BallPoint.origin(n)
    coords = [_entry(part.strip()) for part in text.split(",")]
    if len(coords) != n:
        raise InputError(f"point {text!r} has {len(coords)} coordinates, expected {n}")
    try:
        return BallPoint(coords=coords)
    except ValidationError as exc:
        raise InputError(f"point {text!r} is not inside the unit ball") from exc


def parse_t_grid(text: str) -> list[float]:
    """"a,b,c" lists values; "a:b:k" gives k evenly spaced values from a to b."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise InputError(f"range {text!r} must look like start:stop:count")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise InputError("range count must be positive")
            grid = [float(t) for t in np.linspace(start, stop, count)]
        else:
            grid = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse T grid {text!r}") from exc
    if not grid:
        raise InputError("T grid is empty")
    if any(t <= 0 for t in grid):
        raise InputError("T values must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError("T grid must be strictly ascending")
    return grid


def format_cell(value: Cell) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.15g}"
    return str(value)


def format_csv(command: str, columns: list[str], rows: list[Row]) -> str:
    buffer = io.StringIO()
    buffer.write(f"# chlattice {__version__} {command}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row[c]) for c in columns])
    return buffer.getvalue()


class TableReport(BaseModel):
    """JSON form of a command's output table."""

    version: str = __version__
    command: str
    columns: list[str]
    rows: list[Row]


def format_json(command: str, columns: list[str], rows: list[Row]) -> str:
    report = TableReport(command=command, columns=columns, rows=rows)
    return report.model_dump_json(indent=2) + "\n"


def dump_json(payload: BaseModel) -> str:
    """Indented JSON of any model, with a trailing newline."""
    return json.dumps(payload.model_dump(mode="json"), indent=2) + "\n"
