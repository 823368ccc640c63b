import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel

from app.functional.domain import build_grid, build_potential, lattice_step, make_field
from app.functional.energy import energy, level_bound_check
from app.functional.hypotheses import check_hypotheses, check_nonexistence
from app.functional.nonlinearity import (
    ComposedNonlinearity,
    ExpTailNonlinearity,
    Nonlinearity,
    PowerNonlinearity,
    build_nonlinearity,
)
from app.functional.reduction import solve_phi
from app.models.errors import ConfigError, InvalidPotentialError
from app.models.experiment import ExperimentConfig
from app.models.main_models import DomainGrid, Field, SolveMethod, SolveOutcome, summary
from app.other.seeds import default_seeds
from app.services import report_service
from app.services.mountain_pass import mountain_pass
from app.services.solver import descend, find_e, nehari_minimize
from app.services.supercritical import build_ladder, run_truncation_pipeline

logger = logging.getLogger(__name__)

COMMANDS = ("reduce", "solve", "mpa", "nehari", "truncate", "check-nl")


class RunResult(BaseModel):
    command: str
    exit_code: int
    report: dict[str, Any]
    failed: list[str] = []
    artifacts: dict[str, str] = {}


class Problem(BaseModel):
    model_config = {"arbitrary_types_allowed": True}

    grid: DomainGrid
    V: Field
    nl: Nonlinearity


def build_problem(config: ExperimentConfig) -> Problem:
    grid = build_grid(config.domain.kind, config.domain.extent, config.domain.n_points)
    model = config.model
    if model.v_table is not None:
        V = make_field(grid, report_service.read_values(model.v_table, grid))
    else:
        V = build_potential(grid, model.constant_potential, model.v_amplitude, model.v_cells)
    if model.alpha is not None and float(V.values.min()) < model.alpha:
        raise InvalidPotentialError(float(V.values.min()))
    return Problem(grid=grid, V=V, nl=_nonlinearity(config))


def _nonlinearity(config: ExperimentConfig) -> Nonlinearity:
    section = config.nonlinearity
    if section.family == "sampled-table":
        s_table, f_table = report_service.read_table(section.table)
        return build_nonlinearity(section.family, s_table=s_table, f_table=f_table)
    params = {"p": section.p, "q": section.q, "lam": section.lam, "order": section.order}
    return build_nonlinearity(section.family, **{k: v for k, v in params.items() if v is not None})


def _seeds(config: ExperimentConfig, problem: Problem, rng: np.random.Generator) -> list[Field]:
    if config.solver.u0 is not None:
        u0, _ = report_service.read_profile(config.solver.u0, problem.grid)
        return [u0]
    return default_seeds(problem.grid, config.solver.seeds, rng)


def _header(config: ExperimentConfig, command: str, nl: Optional[Nonlinearity] = None) -> dict[str, Any]:
    header = {
        "command": command,
        "seed": config.solver.seed,
        "domain": config.domain.model_dump(mode="json"),
        "model": config.model.model_dump(mode="json", exclude_none=True),
        "nonlinearity": config.nonlinearity.model_dump(mode="json", exclude_none=True, by_alias=True),
    }
    if nl is not None:
        header["resolved_nonlinearity"] = nl.describe()
    return header


def _outcome_payload(outcome: SolveOutcome) -> dict[str, Any]:
    payload = summary(outcome, exclude={"u", "phi", "trace", "certificates"})
    payload["certificates"] = summary(outcome.certificates)
    payload["certificates"]["failed"] = ",".join(outcome.certificates.failed)
    payload["seed_levels"] = ",".join("nan" if level is None else repr(level) for level in outcome.seed_levels)
    return payload


def _write_outcome(config: ExperimentConfig, problem: Problem, outcome: SolveOutcome) -> dict[str, str]:
    if "csv" not in config.output.formats:
        return {}
    out = Path(config.output.dir)
    trace = report_service.write_trace(out / config.output.trace, outcome.trace)
    profile = report_service.write_profile(out / config.output.profile, problem.grid, outcome.u, outcome.phi)
    return {"trace": str(trace), "profile": str(profile)}


def _solve(config: ExperimentConfig, problem: Problem, method: SolveMethod, rng) -> SolveOutcome:
    solver = config.solver
    grid, V, nl = problem.grid, problem.V, problem.nl
    omega = config.model.omega
    step = lattice_step(grid, config.model.v_cells)
    seeds = _seeds(config, problem, rng)

    if method is SolveMethod.NEHARI:
        return nehari_minimize(grid, V, omega, nl, seeds, solver.stop_tol, solver.max_iter,
                               lattice_step=step, method=solver.solve_method)

    geometry = find_e(grid, V, omega, nl, seeds[0], solver.t_max, rng=rng, method=solver.solve_method)
    if method is SolveMethod.MOUNTAIN_PASS:
        return mountain_pass(grid, V, omega, nl, geometry, solver.n_path, solver.stop_tol,
                             max_iter=solver.max_iter, method=solver.solve_method)
    return descend(grid, V, omega, nl, geometry.e, solver.stop_tol, solver.max_iter, method=solver.solve_method)


def run_solve(config: ExperimentConfig, command: str, method: SolveMethod) -> RunResult:
    rng = np.random.default_rng(config.solver.seed)
    problem = build_problem(config)
    outcome = _solve(config, problem, method, rng)
    failed = list(outcome.certificates.failed)
    if not outcome.converged:
        failed.append("converged")
    payload = _header(config, command, problem.nl)
    payload["outcome"] = _outcome_payload(outcome)
    return RunResult(
        command=command,
        exit_code=0 if not failed else 1,
        report=payload,
        failed=failed,
        artifacts=_write_outcome(config, problem, outcome),
    )


def run_reduce(config: ExperimentConfig) -> RunResult:
    problem = build_problem(config)
    rng = np.random.default_rng(config.solver.seed)
    u = _seeds(config, problem, rng)[0]
    omega = config.model.omega
    solution = solve_phi(problem.grid, u, omega, config.solver.phi_tol, method=config.solver.phi_method)
    report = energy(problem.grid, problem.V, omega, problem.nl, u, method=config.solver.phi_method)

    failed = [] if solution.bounds_ok else ["phi_bounds"]
    payload = _header(config, "reduce", problem.nl)
    payload["reduction"] = summary(solution, exclude={"phi"})
    payload["energy"] = summary(report)
    payload["level_bound"] = summary(level_bound_check(report, max(report.I, 0.0)))

    artifacts = {}
    if "csv" in config.output.formats:
        path = report_service.write_profile(Path(config.output.dir) / config.output.profile,
                                            problem.grid, u, solution.phi)
        artifacts["profile"] = str(path)
    return RunResult(command="reduce", exit_code=0 if not failed else 1, report=payload, failed=failed,
                     artifacts=artifacts)


def _g_nonlinearity(config: ExperimentConfig) -> Nonlinearity:
    section = config.truncation
    if section.g_family == "exp-tail":
        return ExpTailNonlinearity(order=section.g_order)
    return PowerNonlinearity(p=section.g_p)


def run_truncate(config: ExperimentConfig) -> RunResult:
    section = config.truncation
    if section is None:
        raise ConfigError("truncation", "section required for the truncate command")
    rng = np.random.default_rng(config.solver.seed)
    problem = build_problem(config)
    g = _g_nonlinearity(config)
    ladder = build_ladder(section.q, section.lam, section.m0, section.ratio, section.rungs)
    ladder = run_truncation_pipeline(
        problem.grid, problem.V, config.model.omega, problem.nl, g, ladder,
        _seeds(config, problem, rng), config.solver.stop_tol, config.solver.max_iter,
        reference_level=section.reference_level,
        lattice_step=lattice_step(problem.grid, config.model.v_cells),
        method=config.solver.solve_method,
    )

    split = ComposedNonlinearity(f0=problem.nl, g=g, lam=section.lam, q=section.q)
    payload = _header(config, "truncate", split)
    payload["ladder"] = summary(ladder, exclude={"rung_results", "m_sequence"})
    payload["ladder"]["m_sequence"] = ",".join(repr(M) for M in ladder.m_sequence)
    for rung in ladder.rung_results:
        payload[f"rung{rung.index}"] = summary(rung, exclude={"outcome"})

    failed = []
    artifacts = {}
    accepted = ladder.accepted
    if accepted is None:
        failed.append("accepted_rung")
    else:
        payload["outcome"] = _outcome_payload(accepted.outcome)
        failed.extend(accepted.outcome.certificates.failed)
        if ladder.norm_bound_ok is False:
            failed.append("norm_bound_c0")
        if ladder.level_chain_ok is False:
            failed.append("level_chain_c0")
        artifacts = _write_outcome(config, problem, accepted.outcome)
    return RunResult(command="truncate", exit_code=0 if not failed else 1, report=payload, failed=failed,
                     artifacts=artifacts)


def run_check(config: ExperimentConfig) -> RunResult:
    problem_nl = _nonlinearity(config)
    section = config.check
    report = check_hypotheses(problem_nl, (0.0, section.s_max), section.count)
    payload = _header(config, "check-nl", problem_nl)
    for name, verdict in report.verdicts().items():
        payload[name] = summary(verdict, exclude={"witnesses"})
        payload[name]["witness_count"] = len(verdict.witnesses)
    if config.model.m0 is not None:
        verdict = check_nonexistence(problem_nl, config.model.m0, config.model.omega)
        payload["nonexistence_i_ii"] = summary(verdict, exclude={"witnesses"})
    # verdicts are the product here, so a FAIL is still a successful run
    return RunResult(command="check-nl", exit_code=0, report=payload)


def run(config: ExperimentConfig, command: Optional[str] = None) -> RunResult:
    command = command or {
        SolveMethod.DESCENT: "solve",
        SolveMethod.MOUNTAIN_PASS: "mpa",
        SolveMethod.NEHARI: "nehari",
    }[config.solver.method]
    logger.info(f"Running {command} on {config.domain.kind.value} n={config.domain.n_points}")

    if command == "reduce":
        result = run_reduce(config)
    elif command == "check-nl":
        result = run_check(config)
    elif command == "truncate":
        result = run_truncate(config)
    elif command == "mpa":
        result = run_solve(config, command, SolveMethod.MOUNTAIN_PASS)
    elif command == "nehari":
        result = run_solve(config, command, SolveMethod.NEHARI)
    elif command == "solve":
        result = run_solve(config, command, SolveMethod.DESCENT)
    else:
        raise ConfigError("command", f"unknown command {command}, expected one of {COMMANDS}")

    if "json" in config.output.formats:
        path = report_service.write_report(Path(config.output.dir) / config.output.report, result.report)
        result.artifacts["report"] = str(path)
    if result.failed:
        logger.warning(f"{command} finished with failed checks: {result.failed}")
    return result
