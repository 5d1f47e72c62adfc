from pathlib import Path
from typing import Annotated, List, NoReturn, Optional

import typer
from devtools import pprint

from GonoDyn.analysis.invariant_sets import classify_limit, membership
from GonoDyn.analysis.normalized import failure_table, histogram_table, scan_conjecture
from GonoDyn.analysis.spectral import multistart_newton
from GonoDyn.analysis.suites import run_property_suites
from GonoDyn.integration.report_writer import ReportWriter
from GonoDyn.integration.tensor_file import read_tensor_file
from GonoDyn.models.operator import Mode, PopulationState
from GonoDyn.models.reports import RunConfig, TrajectorySummary
from GonoDyn.operators.base import GonosomalOperator
from GonoDyn.operators.hemophilia import HemophiliaOperator
from GonoDyn.operators.trajectory import iterate, trajectory_table
from GonoDyn.utils import constants
from GonoDyn.utils.constants import (
    CONFIG_FILE,
    BUDGET,
    NEWTON_TOL,
    RNG_SEED,
    SAMPLES,
    SCAN_BUDGET,
    SCAN_TOL,
    TOL_FP,
    VERIFY_SAMPLES,
    cfg_parser as gono_cfg_parser,
)
from GonoDyn.utils.exceptions import GonoDynException
from GonoDyn.utils.funcs import parse_state, print_dt

BUILTIN = "builtin"

app = typer.Typer()

TensorOpt = Annotated[str, typer.Option("--tensor", "-t", help="Tensor file, or 'builtin' for hemophilia")]
ModeOpt = Annotated[Mode, typer.Option("--mode", "-m")]
StateOpt = Annotated[str, typer.Option("--state", "-s", help="Comma separated coordinates")]
SeedOpt = Annotated[int, typer.Option("--seed")]
OutOpt = Annotated[Optional[Path], typer.Option("--out", "-o")]
VerboseOpt = Annotated[bool, typer.Option("--verbose", "-v")]


def load_operator(tensor: str) -> GonosomalOperator:
    if tensor == BUILTIN:
        return HemophiliaOperator()
    return GonosomalOperator(read_tensor_file(tensor), Path(tensor).stem)


def load_state(op: GonosomalOperator, state: str) -> PopulationState:
    return PopulationState.from_array(op.check_array(parse_state(state)), op.n)


def fail(exc: GonoDynException) -> NoReturn:
    typer.echo(str(exc), err=True)
    raise typer.Exit(code=1)


@app.command(help="Locate and classify the fixed points of an operator")
def fixed_points(
    tensor: TensorOpt = BUILTIN,
    mode: ModeOpt = Mode.RAW,
    seed: SeedOpt = RNG_SEED,
    tol: Annotated[float, typer.Option("--tol")] = NEWTON_TOL,
    out: OutOpt = None,
    verbose: VerboseOpt = False,
):
    try:
        op = load_operator(tensor)
        search = multistart_newton(op, mode, rng_seed=seed, tol=tol, verbose=verbose)
    except GonoDynException as e:
        fail(e)
    if verbose:
        print_dt(f"{search.seeds_tried} seeds tried, {search.seeds_dropped} dropped")
    ReportWriter(out).write_reports([r.to_record() for r in search.reports])


@app.command(help="Iterate an operator from a state and write the iterates as CSV")
def trajectory(
    state: StateOpt,
    tensor: TensorOpt = BUILTIN,
    mode: ModeOpt = Mode.RAW,
    tol: Annotated[float, typer.Option("--tol")] = TOL_FP,
    budget: Annotated[int, typer.Option("--budget")] = BUDGET,
    out: OutOpt = None,
    verbose: VerboseOpt = False,
):
    try:
        op = load_operator(tensor)
        record = iterate(op, load_state(op, state), mode, budget, tol)
    except GonoDynException as e:
        fail(e)
    summary = TrajectorySummary(stop_reason=record.stop_reason, steps_taken=record.steps_taken, limit=record.limit)
    if verbose:
        pprint(summary)
    ReportWriter(out).write_table(trajectory_table(record), trailer=summary.to_record())


@app.command(help="Decide the limit of a hemophilia trajectory from the invariant sets")
def classify(
    state: StateOpt,
    empirical: Annotated[bool, typer.Option("--empirical", "-e")] = False,
    budget: Annotated[int, typer.Option("--budget")] = BUDGET,
    out: OutOpt = None,
    verbose: VerboseOpt = False,
):
    op = HemophiliaOperator()
    try:
        s0 = load_state(op, state)
        verdict = classify_limit(s0)
        records = [verdict.to_record(), membership(s0).to_record()]
        if empirical:
            record = iterate(op, s0, Mode.RAW, budget)
            summary = TrajectorySummary(stop_reason=record.stop_reason, steps_taken=record.steps_taken, limit=record.limit)
            records.append({f"empirical.{k}": v for k, v in summary.to_record().items()})
    except GonoDynException as e:
        fail(e)
    if verbose:
        pprint(verdict)
    ReportWriter(out).write_reports(records)


@app.command(help="Run every property suite; exits 1 if any property fails")
def verify(
    tensor: Annotated[Optional[Path], typer.Option("--tensor", "-t", help="Also validate this tensor file")] = None,
    samples: Annotated[int, typer.Option("--samples", "-n")] = VERIFY_SAMPLES,
    seed: SeedOpt = RNG_SEED,
    out: OutOpt = None,
    verbose: VerboseOpt = False,
):
    try:
        cfg = RunConfig(samples=samples, rng_seed=seed, verbose=verbose)
        if verbose:
            pprint(cfg)
        reports = run_property_suites(cfg, tensor)
    except GonoDynException as e:
        fail(e)
    ReportWriter(out).write_reports([r.to_record() for r in reports])
    failed: List[str] = [r.property_id for r in reports if not r.passed]
    if failed:
        typer.echo(f"failed: {', '.join(failed)}", err=True)
        raise typer.Exit(code=1)


@app.command(help="Iterate the normalized hemophilia operator from random starts")
def scan(
    mode: ModeOpt = Mode.NORMALIZED,
    samples: Annotated[int, typer.Option("--samples", "-n")] = SAMPLES,
    seed: SeedOpt = RNG_SEED,
    tol: Annotated[float, typer.Option("--tol")] = SCAN_TOL,
    budget: Annotated[int, typer.Option("--budget")] = SCAN_BUDGET,
    out: OutOpt = None,
    verbose: VerboseOpt = False,
):
    if mode != Mode.NORMALIZED:
        typer.echo("scan needs --mode normalized", err=True)
        raise typer.Exit(code=1)
    try:
        report = scan_conjecture(samples, seed, tol, budget, verbose)
    except GonoDynException as e:
        fail(e)
    writer = ReportWriter(out)
    writer.write_reports([report.to_record()])
    writer.write_table(histogram_table(report), suffix="histogram")
    if report.failures:
        writer.write_table(failure_table(report), suffix="failures")


@app.command(help="Show the config file in use and the effective settings")
def show_config():
    typer.echo(f"# {CONFIG_FILE}" + ("" if gono_cfg_parser.sections() else " (not found, using defaults)"))
    typer.echo(effective_config_str())


def effective_config_str() -> str:
    names = sorted(n for n in vars(constants) if n.isupper() and n != "CONFIG_FILE")
    return "".join(f"{n.lower()}={getattr(constants, n)!r}\n" for n in names)


def main():
    app()
