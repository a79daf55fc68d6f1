"""
TASK RUNNERS
Purpose: One runner per subcommand; each computes its result from a validated RunConfig,
         writes its CSV/JSON artifacts and returns a TaskResult for the manifest
Artifacts:
    validate    validate.json
    integrate   trajectory.csv, trajectory_meta.json
    jacobi      trajectory.csv, jacobi_field.csv, jacobi_meta.json
    conjugate   conjugate.json
    secondvar   second_variation.csv, second_variation_meta.json
    crosscheck  jacobi_field.csv, crosscheck.json
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.algebroid.checks import check_almost_lie, check_lie, default_samples
from src.dynamics.integrator import integrate_el
from src.dynamics.trajectory import trajectory_frame
from src.jacobi.conjugate import conjugate_scan
from src.jacobi.jacobi_fields import (
    fd_prolongation_oracle,
    integrate_jacobi,
    jacobi_field_frame,
    jacobi_residual,
    jacobi_variation,
    variation_from_generator,
)
from src.lift.tangent_lift import lifted_jacobi_crosscheck
from src.systems.riemannian import MetricField, connection_residuals, levi_civita
from src.utils.artifacts import write_csv, write_json
from src.utils.errors import ConfigError
from src.variation.second_variation import (
    jacobiator_pairing_matrix,
    morse_index,
    null_space,
    second_variation_frame,
    second_variation_matrix,
    second_variation_metadata,
)

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TaskResult:
    artifacts: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _host_residuals(traj):
    return {key: traj.metadata.get(key) for key in ("max_el_residual", "energy_drift", "max_admissibility_residual")}


def integrate_host(config, options):
    run = config.run
    return integrate_el(config.algebroid, config.lagrangian, run.x0, run.y0, run.t0, run.t1,
                        method=run.method, condition_limit=options["condition_limit"], **run.grid_kwargs())


def _initial_generator(config, options):
    """(xi0, xidot0); defaults to xi0 = 0, xidot0 = e_1."""
    k = config.algebroid.k
    xi0 = options.get("xi0")
    xidot0 = options.get("xidot0")
    if xi0 is None:
        xi0 = np.zeros(k)
    if xidot0 is None:
        xidot0 = np.zeros(k)
        xidot0[0] = 1.0
    return np.asarray(xi0, dtype=float), np.asarray(xidot0, dtype=float)


def _sup_jacobi_residual(config, jf):
    A, L, host = config.algebroid, config.lagrangian, jf.host
    xiddot = np.gradient(jf.xidot, host.times, axis=0, edge_order=2)
    worst = 0.0
    for m, t in enumerate(host.times):
        _, dyn = jacobi_residual(A, L, host, t, jf.xi[m], jf.xidot[m], xiddot[m])
        worst = max(worst, float(np.max(np.abs(dyn))))
    return worst


# ============================================================================
# RUNNERS
# ============================================================================

def run_validate(config, out_dir):
    """Almost-Lie and Lie reports, plus the Levi-Civita residuals when a metric is known."""
    options = config.options("validate")
    A = config.algebroid
    samples = default_samples(A, options["samples_per_axis"])
    almost_lie = check_almost_lie(A, samples, options["tol"])
    lie = check_lie(A, samples, options["tol"])
    lie.pop("almost_lie", None)

    D = config.lagrangian.derivatives(config.run.x0, config.run.y0)
    report = {
        "algebroid": A.label,
        "n": A.n,
        "k": A.k,
        "lagrangian": config.lagrangian.label,
        "almost_lie": almost_lie,
        "lie": lie,
        "fiber_hessian_condition": float(np.linalg.cond(D.dyy)),
    }
    if config.catalog_name is not None:
        report["catalog"] = {"name": config.catalog_name, "expected_lie": config.lie}
    if config.metric is not None and almost_lie["passed"]:
        metric = MetricField(A, config.metric)
        connection = levi_civita(A, metric, samples)
        report["connection"] = connection_residuals(A, metric, connection, samples)

    path = write_json(Path(out_dir) / "validate.json", report)
    return TaskResult(
        artifacts=[path],
        summary={
            "almost-Lie": "pass" if almost_lie["passed"] else "fail",
            "Lie": "pass" if lie["passed"] else "fail",
            "max Jacobiator": lie["max_residual"],
        },
    )


def run_integrate(config, out_dir):
    options = config.options("integrate")
    traj = integrate_host(config, options)
    out_dir = Path(out_dir)
    paths = [
        write_csv(out_dir / "trajectory.csv", trajectory_frame(traj)),
        write_json(out_dir / "trajectory_meta.json", traj.metadata),
    ]
    return TaskResult(
        artifacts=paths,
        residuals=_host_residuals(traj),
        summary={"steps": traj.steps, "energy drift": traj.metadata["energy_drift"],
                 "max EL residual": traj.metadata["max_el_residual"]},
    )


def run_jacobi(config, out_dir):
    options = config.options("jacobi")
    host = integrate_host(config, options)
    xi0, xidot0 = _initial_generator(config, options)
    jf = integrate_jacobi(config.algebroid, config.lagrangian, host, xi0, xidot0,
                          host_limit=options["host_limit"], condition_limit=options["condition_limit"])
    metadata = dict(jf.metadata)
    metadata.update({
        "xi0": xi0,
        "xidot0": xidot0,
        "max_jacobi_residual": _sup_jacobi_residual(config, jf),
        "host": host.metadata,
    })
    out_dir = Path(out_dir)
    paths = [
        write_csv(out_dir / "trajectory.csv", trajectory_frame(host)),
        write_csv(out_dir / "jacobi_field.csv", jacobi_field_frame(jf)),
        write_json(out_dir / "jacobi_meta.json", metadata),
    ]
    return TaskResult(
        artifacts=paths,
        residuals=_host_residuals(host),
        summary={"max Jacobi residual": metadata["max_jacobi_residual"],
                 "|xi(t1)|": float(np.linalg.norm(jf.xi[-1]))},
    )


def run_conjugate(config, out_dir):
    options = config.options("conjugate")
    host = integrate_host(config, options)
    report = conjugate_scan(
        config.algebroid, config.lagrangian, host,
        tol_det=options["tol_det"],
        tol_sv=options["tol_sv"],
        max_bisection=options["max_bisection"],
        host_limit=options["host_limit"],
        condition_limit=options["condition_limit"],
    )
    document = report.to_dict()
    document["host"] = host.metadata
    path = write_json(Path(out_dir) / "conjugate.json", document)
    return TaskResult(
        artifacts=[path],
        residuals=_host_residuals(host),
        summary={"conjugate times": [round(p.t, 6) for p in report.conjugate_times]},
    )


def run_secondvar(config, out_dir):
    options = config.options("secondvar")
    A, L = config.algebroid, config.lagrangian
    host = integrate_host(config, options)
    matrix = second_variation_matrix(A, L, host, host_limit=options["host_limit"])
    null = null_space(matrix, options["null_tol"])
    index = morse_index(matrix, options["null_tol"])
    metadata = second_variation_metadata(matrix, null, index)
    if options["pairing"]:
        pairing = jacobiator_pairing_matrix(A, L, host)
        scale = np.linalg.norm(matrix.B, ord=np.inf) or 1.0
        antisymmetric = matrix.B - matrix.B.T
        metadata["jacobiator_pairing_norm"] = float(np.linalg.norm(pairing, ord=np.inf) / scale)
        metadata["pairing_defect_norm"] = float(np.linalg.norm(antisymmetric - pairing, ord=np.inf) / scale)
    out_dir = Path(out_dir)
    paths = [
        write_csv(out_dir / "second_variation.csv", second_variation_frame(matrix)),
        write_json(out_dir / "second_variation_meta.json", metadata),
    ]
    residuals = _host_residuals(host)
    residuals["symmetry_defect"] = metadata["symmetry_defect_norm"]
    return TaskResult(
        artifacts=paths,
        residuals=residuals,
        summary={"size": matrix.size, "null dimension": null.dimension, "morse index": index,
                 "symmetry defect": metadata["symmetry_defect_norm"]},
    )


def run_crosscheck(config, out_dir):
    """Jacobi field against the lifted EL equation and against finite-differenced EL solutions."""
    options = config.options("crosscheck")
    A, L, run = config.algebroid, config.lagrangian, config.run
    host = integrate_host(config, options)
    xi0, xidot0 = _initial_generator(config, options)
    jf = integrate_jacobi(A, L, host, xi0, xidot0,
                          host_limit=options["host_limit"], condition_limit=options["condition_limit"])
    lifted = lifted_jacobi_crosscheck(A, L, host, jf)

    dx0, dy0 = variation_from_generator(A, run.x0, run.y0, xi0, xidot0)
    oracle = fd_prolongation_oracle(A, L, run.x0, run.y0, dx0, dy0, options["ds"], run.t0, run.t1,
                                    **run.grid_kwargs())
    dx, dy = jacobi_variation(A, jf)
    gap = max(float(np.max(np.abs(dx - oracle.dx), initial=0.0)), float(np.max(np.abs(dy - oracle.dy))))
    scale = max(1.0, float(np.max(np.abs(oracle.dy))), float(np.max(np.abs(oracle.dx), initial=0.0)))
    passed = bool(gap / scale <= options["tol"])
    if not passed:
        logger.warning("Jacobi variation differs from the finite-difference oracle by %.3e", gap)

    report = {
        "lifted": lifted,
        "fd_oracle": {"ds": oracle.ds, "max_gap": gap, "relative_gap": gap / scale, "tol": options["tol"],
                      "passed": passed},
        "xi0": xi0,
        "xidot0": xidot0,
        "host": host.metadata,
    }
    out_dir = Path(out_dir)
    paths = [
        write_csv(out_dir / "jacobi_field.csv", jacobi_field_frame(jf)),
        write_json(out_dir / "crosscheck.json", report),
    ]
    return TaskResult(
        artifacts=paths,
        residuals=_host_residuals(host),
        summary={"lifted EL residual": lifted["el_lifted_residual"], "lift agreement": lifted["agreement"],
                 "FD relative gap": gap / scale},
    )


RUNNERS = {
    "validate": run_validate,
    "integrate": run_integrate,
    "jacobi": run_jacobi,
    "conjugate": run_conjugate,
    "secondvar": run_secondvar,
    "crosscheck": run_crosscheck,
}


def run(config, subcommand, out_dir):
    """Dispatch one subcommand."""
    if subcommand not in RUNNERS:
        raise ConfigError("subcommand", f"unknown subcommand {subcommand!r}")
    logger.info("running %s into %s", subcommand, out_dir)
    return RUNNERS[subcommand](config, out_dir)
