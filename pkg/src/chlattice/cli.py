"""CLI commands for chlattice."""

import json
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, NoReturn, Optional

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table
from typing_extensions import Annotated

from . import __version__
from .average import averaged_count_direct, averaged_count_wave, make_bump
from .chgeom import volume_ball
from .config import Tolerances
from .errors import InputError, NumericalError
from .io import (
    Row,
    dump_json,
    format_cell,
    format_csv,
    format_json,
    load_group_file,
    load_spectral_file,
    parse_point,
    parse_t_grid,
)
from .lattice import count_from_expansion, expand_orbit
from .log import err_console, setup_logging
from .models import BallPoint, Command, GroupSpec, OutputFormat, RunConfig, WaveConfig
from .quad import integrate_ball
from .spectral import main_term_A, spectral_average_truncated
from .verify import run_battery

EXIT_FAILURE = 1
EXIT_USAGE = 2
DEFAULT_ALPHA = 0.05

app = typer.Typer(
    name="chlattice",
    help="Lattice point counts, smoothed averages and spectral main terms in CH^n",
    no_args_is_help=True,
    rich_markup_mode="rich",
)

console = Console()


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        console.print(f"chlattice version {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Annotated[
        Optional[bool],
        typer.Option(
            "--version",
            "-V",
            help="Show version and exit",
            callback=version_callback,
            is_eager=True,
        ),
    ] = None,
    verbose: Annotated[
        int,
        typer.Option(
            "--verbose",
            "-v",
            count=True,
            help="Log progress to stderr (-vv for debug detail)",
        ),
    ] = 0,
) -> None:
    """chlattice - Count orbit points of discrete groups in complex hyperbolic space."""
    setup_logging(verbose)


def _fail(message: str, code: int) -> NoReturn:
    err_console.print(f"[red]❌ {message}[/red]")
    raise typer.Exit(code)


@contextmanager
def _guard() -> Iterator[None]:
    """Map library errors onto exit codes."""
    try:
        yield
    except (InputError, ValidationError, json.JSONDecodeError, OSError, ValueError) as exc:
        _fail(f"Input error: {exc}", EXIT_USAGE)
    except NumericalError as exc:
        _fail(f"Numerical failure: {exc}", EXIT_FAILURE)


GroupOption = Annotated[
    Path,
    typer.Option("--group", "-g", help="Group description (JSON)"),
]
ZOption = Annotated[
    Optional[str],
    typer.Option(
        "--z", help="Center z as comma-separated complex coordinates (default: origin)"
    ),
]
ZPrimeOption = Annotated[
    Optional[str],
    typer.Option("--zprime", help="Orbit base point z' (default: origin)"),
]
TGridOption = Annotated[
    str,
    typer.Option("--t-grid", "-T", help='Radii as "a,b,c" or "start:stop:count"'),
]
FormatOption = Annotated[
    OutputFormat,
    typer.Option("--format", "-f", envvar="CHLATTICE_FORMAT", help="Data format"),
]
OutputOption = Annotated[
    Optional[Path],
    typer.Option("--output", "-o", help="Write data to this file and show a table"),
]
WorkersOption = Annotated[
    int,
    typer.Option("--workers", "-w", envvar="CHLATTICE_WORKERS", min=1, help="Worker threads"),
]
MaxWordOption = Annotated[
    Optional[int],
    typer.Option(
        "--max-word-length", min=1, help="Override the group file's word length limit"
    ),
]
DedupOption = Annotated[
    Optional[float],
    typer.Option("--dedup-tol", help="Orbit-point merge radius"),
]


def _load_group(
    path: Path, max_word_length: Optional[int], dedup_tol: Optional[float]
) -> GroupSpec:
    group = load_group_file(path)
    update: dict[str, object] = {}
    if max_word_length is not None:
        update["max_word_length"] = max_word_length
    if dedup_tol is not None:
        if not dedup_tol > 0:
            raise InputError("--dedup-tol must be positive")
        update["dedup_tol"] = dedup_tol
    return group.model_copy(update=update) if update else group


def _points(
    cfg: RunConfig, z: Optional[str], zprime: Optional[str]
) -> tuple[BallPoint, BallPoint]:
    return parse_point(z, cfg.n), parse_point(zprime, cfg.n)


def _emit(
    cfg: RunConfig,
    columns: list[str],
    rows: list[Row],
    title: str,
) -> None:
    """Raw data to stdout, or data to a file plus a rich table on the console."""
    command = cfg.command.value
    if cfg.format is OutputFormat.JSON:
        text = format_json(command, columns, rows)
    else:
        text = format_csv(command, columns, rows)
    if cfg.output is None:
        typer.echo(text, nl=False)
        return

    cfg.output.write_text(text)
    table = Table(title=title, show_header=True)
    for k, column in enumerate(columns):
        table.add_column(column, style="cyan" if k == 0 else "white", justify="right")
    for row in rows:
        table.add_row(*(format_cell(row[c]) for c in columns))
    console.print(table)
    console.print(f"[green]✅ Wrote {len(rows)} rows to {cfg.output}[/green]")


@app.command(name="count", help="Count orbit points N(T, z, z') on a grid of radii")
def count(
    group: GroupOption,
    t_grid: TGridOption,
    z: ZOption = None,
    zprime: ZPrimeOption = None,
    fmt: FormatOption = OutputFormat.CSV,
    output: OutputOption = None,
    workers: WorkersOption = 1,
    max_word_length: MaxWordOption = None,
    dedup_tol: DedupOption = None,
) -> None:
    """N(T) for every T in the grid from one orbit expansion."""
    with _guard():
        G = _load_group(group, max_word_length, dedup_tol)
        cfg = RunConfig(
            command=Command.COUNT,
            group_file=group,
            n=G.n,
            t_grid=parse_t_grid(t_grid),
            output=output,
            format=fmt,
            workers=workers,
            tolerances=Tolerances(dedup_tol=G.dedup_tol),
        )
        center, base = _points(cfg, z, zprime)
        expansion = expand_orbit(G, base, cfg.t_grid[-1], center=center, workers=cfg.workers)
        rows: list[Row] = []
        for T in cfg.t_grid:
            res = count_from_expansion(expansion, T)
            rows.append(
                {
                    "T": T,
                    "N": res.count,
                    "words_expanded": res.words_expanded,
                    "truncated": res.truncated,
                    "stabilizer_order": res.stabilizer_order,
                    "N_group": res.group_count,
                }
            )

    columns = ["T", "N", "words_expanded", "truncated", "stabilizer_order", "N_group"]
    _emit(cfg, columns, rows, "Lattice point counts")
    if expansion.truncated:
        _fail("Enumeration truncated: counts are lower bounds only", EXIT_FAILURE)


@app.command(name="average", help="Compare the direct and wave routes for I(T, z, z', alpha)")
def average(
    group: GroupOption,
    t_grid: TGridOption,
    alpha: Annotated[float, typer.Option("--alpha", "-a", help="Bump radius")] = DEFAULT_ALPHA,
    z: ZOption = None,
    zprime: ZPrimeOption = None,
    wave: Annotated[
        bool, typer.Option("--wave/--no-wave", help="Also evaluate the wave route")
    ] = True,
    t_quad_points: Annotated[int, typer.Option(min=4, help="Outer nodes per piece")] = 48,
    max_t_quad_points: Annotated[
        int, typer.Option(min=4, help="Cap on outer nodes while refining")
    ] = 384,
    wave_tol: Annotated[
        float, typer.Option(help="Relative refinement target for the wave route")
    ] = 1e-8,
    radial_quad_points: Annotated[int, typer.Option(min=4, help="Shell nodes")] = 48,
    angular_quad_points: Annotated[int, typer.Option(min=4, help="Sphere nodes")] = 32,
    richardson_levels: Annotated[int, typer.Option(min=1, max=6)] = 3,
    fd_step: Annotated[float, typer.Option(help="Base step for s-derivatives")] = 1e-2,
    route_tol: Annotated[
        float, typer.Option(help="Warn when the routes differ by more than this")
    ] = 1e-3,
    fmt: FormatOption = OutputFormat.CSV,
    output: OutputOption = None,
    workers: WorkersOption = 1,
    max_word_length: MaxWordOption = None,
    dedup_tol: DedupOption = None,
) -> None:
    """Sandwich N(T - alpha) <= I(T) <= N(T + alpha) on every row."""
    with _guard():
        G = _load_group(group, max_word_length, dedup_tol)
        cfg = RunConfig(
            command=Command.AVERAGE,
            group_file=group,
            n=G.n,
            t_grid=parse_t_grid(t_grid),
            alpha=alpha,
            wave=WaveConfig(
                t_quad_points=t_quad_points,
                max_t_quad_points=max_t_quad_points,
                radial_quad_points=radial_quad_points,
                angular_quad_points=angular_quad_points,
                richardson_levels=richardson_levels,
                fd_step=fd_step,
                tol=wave_tol,
            ),
            output=output,
            format=fmt,
            workers=workers,
        )
        center, base = _points(cfg, z, zprime)
        bump = make_bump(center, cfg.alpha)
        expansion = expand_orbit(
            G, base, cfg.t_grid[-1] + cfg.alpha, center=center, workers=cfg.workers
        )
        rows: list[Row] = []
        for T in cfg.t_grid:
            direct = averaged_count_direct(G, bump, base, T, expansion=expansion)
            if wave:
                waved = averaged_count_wave(
                    G, bump, base, T, cfg.wave, workers=cfg.workers, expansion=expansion
                )
                i_wave, i_wave_err = waved.value, waved.est_error
                gap = abs(i_wave - direct.value)
                if gap > route_tol:
                    err_console.print(
                        f"[yellow]⚠️ T={T:g}: routes differ by {gap:.2e}[/yellow]"
                    )
            else:
                i_wave, i_wave_err = math.nan, math.nan
            n_minus = 0
            if T > cfg.alpha:
                n_minus = count_from_expansion(expansion, T - cfg.alpha).count
            n_plus = count_from_expansion(expansion, T + cfg.alpha).count
            slack = 1e-9 + direct.est_error
            rows.append(
                {
                    "T": T,
                    "I_direct": direct.value,
                    "I_direct_err": direct.est_error,
                    "I_wave": i_wave,
                    "I_wave_err": i_wave_err,
                    "N_minus": n_minus,
                    "N_plus": n_plus,
                    "sandwich_ok": n_minus - slack <= direct.value <= n_plus + slack,
                }
            )

    columns = [
        "T",
        "I_direct",
        "I_direct_err",
        "I_wave",
        "I_wave_err",
        "N_minus",
        "N_plus",
        "sandwich_ok",
    ]
    _emit(cfg, columns, rows, "Smoothed counts")
    if expansion.truncated:
        _fail("Enumeration truncated: averages are lower bounds only", EXIT_FAILURE)
    if not all(row["sandwich_ok"] for row in rows):
        _fail("Sandwich inequality violated", EXIT_FAILURE)


@app.command(name="mainterm", help="Compare N(T) with the spectral main term A(T)")
def mainterm(
    group: GroupOption,
    spectral: Annotated[Path, typer.Option("--spectral", "-s", help="Spectral data (JSON)")],
    t_grid: TGridOption,
    z: ZOption = None,
    zprime: ZPrimeOption = None,
    alpha: Annotated[
        Optional[float],
        typer.Option("--alpha", "-a", help="Also report the truncated spectral average"),
    ] = None,
    fmt: FormatOption = OutputFormat.CSV,
    output: OutputOption = None,
    workers: WorkersOption = 1,
    max_word_length: MaxWordOption = None,
    dedup_tol: DedupOption = None,
) -> None:
    """Ratio N_group / A for growth inspection."""
    with _guard():
        G = _load_group(group, max_word_length, dedup_tol)
        cfg = RunConfig(
            command=Command.MAINTERM,
            group_file=group,
            spectral_file=spectral,
            n=G.n,
            t_grid=parse_t_grid(t_grid),
            output=output,
            format=fmt,
            workers=workers,
            alpha=alpha if alpha is not None else DEFAULT_ALPHA,
        )
        data = load_spectral_file(spectral, cfg.n)
        center, base = _points(cfg, z, zprime)
        bump = make_bump(center, cfg.alpha) if alpha is not None else None
        expansion = expand_orbit(G, base, cfg.t_grid[-1], center=center, workers=cfg.workers)
        rows: list[Row] = []
        for T in cfg.t_grid:
            res = count_from_expansion(expansion, T)
            A = main_term_A(data, cfg.n, T, center, base)
            row: Row = {
                "T": T,
                "N": res.count,
                "N_group": res.group_count,
                "A": A,
                "ratio": res.group_count / A if A > 0 else math.nan,
            }
            if bump is not None:
                row["I_spectral"] = spectral_average_truncated(
                    data, bump, cfg.n, T, base, workers=cfg.workers
                )
            rows.append(row)

    columns = ["T", "N", "N_group", "A", "ratio"]
    if bump is not None:
        columns.append("I_spectral")
    _emit(cfg, columns, rows, "Counts against the main term")
    if expansion.truncated:
        _fail("Enumeration truncated: counts are lower bounds only", EXIT_FAILURE)


@app.command(name="verify", help="Run the identity battery")
def verify(
    fmt: FormatOption = OutputFormat.CSV,
    output: Annotated[
        Optional[Path], typer.Option("--output", "-o", help="Write the JSON report here")
    ] = None,
) -> None:
    """Print pass/fail per identity with its largest residual."""
    with _guard():
        report = run_battery()

    if output is not None:
        output.write_text(dump_json(report))
    if fmt is OutputFormat.JSON and output is None:
        typer.echo(dump_json(report), nl=False)
    else:
        table = Table(title="Identity checks", show_header=True)
        table.add_column("Check", style="cyan")
        table.add_column("Result")
        table.add_column("Max residual", justify="right")
        table.add_column("Tolerance", justify="right")
        for check in report.checks:
            status = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
            table.add_row(
                check.name, status, f"{check.max_residual:.3e}", f"{check.tolerance:.1e}"
            )
        console.print(table)

    if not report.passed:
        _fail("Identity battery failed", EXIT_FAILURE)
    if fmt is not OutputFormat.JSON or output is not None:
        console.print("[green]✅ All identities hold[/green]")


@app.command(name="volume", help="Compare closed-form ball volumes with quadrature")
def volume(
    t_grid: TGridOption,
    dims: Annotated[str, typer.Option("--dims", "-n", help='Dimensions as "1,2"')] = "1,2",
    tol: Annotated[float, typer.Option(help="Relative tolerance")] = 1e-6,
    fmt: FormatOption = OutputFormat.CSV,
    output: OutputOption = None,
) -> None:
    """volume_ball against integrate_ball(1) for each (n, T)."""
    with _guard():
        try:
            ns = [int(part) for part in dims.split(",") if part.strip()]
        except ValueError as exc:
            raise InputError(f"cannot parse dimensions {dims!r}") from exc
        if not ns or any(n < 1 for n in ns):
            raise InputError("dimensions must be positive integers")
        cfg = RunConfig(
            command=Command.VOLUME,
            n=max(ns),
            t_grid=parse_t_grid(t_grid),
            output=output,
            format=fmt,
        )
        rows: list[Row] = []
        for n in ns:
            for T in cfg.t_grid:
                closed = volume_ball(n, T)
                quad = integrate_ball(
                    _ones, BallPoint.origin(n), T, n, tol=min(tol, 1e-8), vectorized=True
                ).value
                rows.append(
                    {
                        "n": n,
                        "T": T,
                        "closed": closed,
                        "quadrature": quad,
                        "rel_err": abs(quad - closed) / closed,
                    }
                )

    _emit(cfg, ["n", "T", "closed", "quadrature", "rel_err"], rows, "Ball volumes")
    if any(float(row["rel_err"]) > tol for row in rows):
        _fail(f"Quadrature misses the closed form by more than {tol:g}", EXIT_FAILURE)


def _ones(points: np.ndarray) -> np.ndarray:
    return np.ones(len(points))


if __name__ == "__main__":
    app()
