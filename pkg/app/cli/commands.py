"""Command handlers of the ``kfix`` CLI.

Each handler takes a :class:`RunSpec`, writes its artifacts into the output
directory, prints a one-line summary on stdout and returns an exit code.
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import (
    EXIT_CYCLE,
    EXIT_MAX_ITERS,
    EXIT_OK,
    EXIT_VIOLATION,
    NumericOverflowError,
    UsageError,
)
from app.schemas.problems import IterateProblem, ScfpProblemSpec, VerifyProblem, load_problem
from app.services.comparison_functions import check_membership
from app.services.contraction_verifier import sample_verify
from app.services.iteration_engine import (
    IterationConfig,
    IterationStatus,
    alternating,
    krasnoselskij,
    lambda_from_k,
    picard,
)
from app.services.mappings import fix_residual
from app.services.reproduction import reproduce
from app.services.scfp_solver import default_scfp_lambda, solve_scfp

DEFAULT_OUT = "kfix-out"

STATUS_EXIT = {
    IterationStatus.CONVERGED: EXIT_OK,
    IterationStatus.MAX_ITERS_REACHED: EXIT_MAX_ITERS,
    IterationStatus.CYCLE_DETECTED: EXIT_CYCLE,
}


@dataclass
class RunSpec:
    """Parsed command line of one invocation."""
    command: str
    source: Optional[str] = None
    output_dir: Optional[str] = None
    lam: Optional[float] = None
    tol: Optional[float] = None
    max_iters: Optional[int] = None
    seed: Optional[int] = None
    picard: bool = False
    cycle_window: Optional[int] = None
    workers: Optional[int] = None

    def out_dir(self) -> Path:
        """KFIX_OUT wins over --out, which wins over the default."""
        path = Path(settings.OUT or self.output_dir or DEFAULT_OUT)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise UsageError(f"Output directory {path} is not writable: {e}") from e
        return path

    def problem_path(self) -> str:
        if not self.source:
            raise UsageError(f"'{self.command}' needs a problem file")
        return self.source


def _first(*values):
    return next((v for v in values if v is not None), None)


def _write_json(path: Path, data: Dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_iterate(spec: RunSpec) -> int:
    problem = load_problem(spec.problem_path(), IterateProblem)
    mapping = problem.mapping.build()
    map_s = problem.S.build() if problem.S is not None else None
    use_picard = spec.picard or problem.picard
    lam = _first(spec.lam, problem.lam, lambda_from_k(problem.k) if problem.k is not None else None, 1.0)
    default_window = settings.PICARD_CYCLE_WINDOW if use_picard else settings.CYCLE_WINDOW
    config = IterationConfig(
        lam=1.0 if use_picard else lam,
        max_iters=_first(spec.max_iters, problem.max_iters, settings.MAX_ITERS),
        tol=_first(spec.tol, problem.tol, settings.TOL),
        cycle_window=_first(spec.cycle_window, problem.cycle_window, default_window),
    )
    out = spec.out_dir()

    try:
        if map_s is not None:
            trace = alternating(mapping, map_s, config, problem.p0)
        elif use_picard:
            trace = picard(mapping, config, problem.p0)
        else:
            trace = krasnoselskij(mapping, config, problem.p0)
    except NumericOverflowError as e:
        if e.trace is not None:
            e.trace.write_csv(out / "trace.csv")
        raise

    trace.write_csv(out / "trace.csv")
    residual = fix_residual(mapping, trace.final)
    line = f"status={trace.status.value} iterations={trace.iterations} residual={residual:.6e}"
    if trace.period is not None:
        line += f" period={trace.period}"
    print(line)
    return STATUS_EXIT[trace.status]


def cmd_verify(spec: RunSpec) -> int:
    problem = load_problem(spec.problem_path(), VerifyProblem)
    params = problem.params.build()
    zeta = problem.zeta.build()
    mapping = problem.mapping.build()
    map_s = problem.S.build() if problem.S is not None else None
    sampler = problem.sampler.build(seed=spec.seed)

    report = sample_verify(
        params, zeta, mapping, sampler, fix_tol=problem.fix_tol, map_s=map_s, workers=spec.workers
    )
    if problem.membership:
        report = report.model_copy(update={"membership": check_membership(zeta)})

    _write_json(spec.out_dir() / "report.json", report.to_json_dict())
    print(
        f"pairs={report.n_pairs} skipped={report.n_skipped} violations={report.n_violations} "
        f"worst_margin={report.worst_margin:.6e}"
    )
    return EXIT_OK if report.n_violations == 0 else EXIT_VIOLATION


def cmd_scfp(spec: RunSpec) -> int:
    spec_file = load_problem(spec.problem_path(), ScfpProblemSpec)
    problem = spec_file.build()
    config = IterationConfig(
        lam=_first(spec.lam, spec_file.lam, default_scfp_lambda(spec_file.k)),
        max_iters=_first(spec.max_iters, spec_file.max_iters, settings.MAX_ITERS),
        tol=_first(spec.tol, spec_file.tol, settings.TOL),
        cycle_window=_first(spec.cycle_window, settings.CYCLE_WINDOW),
    )
    p0 = spec_file.p0 if spec_file.p0 is not None else np.zeros(problem.T.cols)
    out = spec.out_dir()

    result = solve_scfp(problem, config, p0)
    result.trace.write_csv(out / "trace.csv")
    _write_json(out / "solution.json", result.to_solution().model_dump())
    print(
        f"status={result.trace.status.value} iterations={result.trace.iterations} "
        f"dist_C={result.dist_C:.6e} dist_Q={result.dist_Q:.6e}"
    )
    if result.feasible(settings.FEASIBILITY_TOL):
        return EXIT_OK
    return EXIT_CYCLE if result.trace.status is IterationStatus.CYCLE_DETECTED else EXIT_MAX_ITERS


def cmd_reproduce(spec: RunSpec) -> int:
    if not spec.source:
        raise UsageError("'reproduce' needs a target")
    result = reproduce(spec.source, spec.out_dir())
    for path in result.files:
        logger.info(f"Wrote {path}")
    print(result.summary)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunSpec], int]] = {
    "iterate": cmd_iterate,
    "verify": cmd_verify,
    "scfp": cmd_scfp,
    "reproduce": cmd_reproduce,
}
