"""
Command runner: executes a validated ExperimentConfig and writes its reports.

Every report embeds the config hash and seed and contains no timestamps, so
identical (config, seed) pairs produce byte-identical files.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from django.db import DatabaseError

from . import config as config_module
from .config import ExperimentConfig, check_seed
from .engine import ClassicalParams, resource_sweep, run_maqa, verify_appendix
from .ensemble import run_bagging_demo
from .exceptions import MaqaError, TrainingDiverged
from .qslp import qslp_hidden_outputs, qslp_predict, qslp_accuracy, qslp_train
from .utils import canonical_json, get_setting, sha256_hex, write_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_TOLERANCE = 2

DEFAULT_SEED = 42
DEFAULT_TOLERANCE = 1e-9
ORACLE_CHECK_TOLERANCE = 1e-12


def default_seed() -> int:
    return int(get_setting("MAQA_SEED", DEFAULT_SEED))


def default_tolerance() -> float:
    return float(get_setting("MAQA_TOLERANCE", DEFAULT_TOLERANCE))


def config_hash(config: ExperimentConfig, seed: int) -> str:
    data = config.as_dict()
    data["seed"] = seed
    return sha256_hex(canonical_json(data))


class CommandRunner:
    """Dispatches a config to its mode handler and writes the report files."""

    _handlers = {
        "aggregate": "_handle_aggregate",
        "qslp-train": "_handle_qslp_train",
        "ensemble": "_handle_ensemble",
        "verify-appendix": "_handle_verify_appendix",
        "resources": "_handle_resources",
    }

    @classmethod
    def execute(
        cls,
        config: ExperimentConfig,
        seed: int,
        out_dir: Path,
        tolerance: float,
        d_values: Optional[List[int]] = None,
    ) -> Dict:
        """
        Run one command.

        Returns:
            {"success": bool, "exit_code": int, "message": str, "data": report, "files": [paths]}
        """
        handler = getattr(cls, cls._handlers[config.mode])
        digest = config_hash(config, seed)
        try:
            result, tables, passed = handler(config.spec, seed, tolerance, d_values)
        except TrainingDiverged as exc:
            logger.error("%s run aborted: %s", config.mode, exc)
            return cls._failure(config, seed, digest, EXIT_INVALID, str(exc))
        except MaqaError as exc:
            logger.warning("%s run rejected: %s", config.mode, exc)
            return cls._failure(config, seed, digest, EXIT_INVALID, str(exc))

        report = {
            "mode": config.mode,
            "seed": seed,
            "config_hash": digest,
            "tolerance": tolerance,
            "passed": passed,
            "result": result,
        }
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / f"{config.mode}-report.json"
        report_path.write_text(canonical_json(report), encoding="utf-8")
        files = [str(report_path)]
        for name, (header, rows) in tables.items():
            table_path = out_dir / name
            write_csv(table_path, header, rows)
            files.append(str(table_path))
        logger.info("Report written to %s", report_path)

        exit_code = EXIT_OK if passed else EXIT_TOLERANCE
        message = (
            f"{config.mode} completed"
            if passed
            else f"{config.mode} failed its tolerance check ({tolerance:g})"
        )
        record_run(config.mode, seed, digest, exit_code, str(out_dir), _summary(config.mode, result))
        return {
            "success": passed,
            "exit_code": exit_code,
            "message": message,
            "data": report,
            "files": files,
        }

    @classmethod
    def _failure(cls, config, seed, digest, exit_code, message) -> Dict:
        record_run(config.mode, seed, digest, exit_code, "", {"error": message})
        return {
            "success": False,
            "exit_code": exit_code,
            "message": message,
            "data": None,
            "files": [],
        }

    # ------------------------------------------------------------------------
    # mode handlers: (spec, seed, tolerance, d_values) -> (result, tables, passed)
    # ------------------------------------------------------------------------

    @classmethod
    def _handle_aggregate(cls, spec, seed, tolerance, d_values):
        maqa_spec = config_module.build_maqa_spec(spec, seed)
        params = config_module.build_classical_params(spec, len(maqa_spec.x_raw))
        run = run_maqa(maqa_spec, params, workers=spec["workers"])
        result = run.aggregate.as_dict()
        result["resources"] = run.resources.as_dict()
        return result, {}, run.aggregate.abs_diff <= tolerance

    @classmethod
    def _handle_qslp_train(cls, spec, seed, tolerance, d_values):
        qslp_spec, dataset = config_module.build_qslp(spec, seed)
        report = qslp_train(
            dataset,
            qslp_spec,
            epochs=spec["epochs"],
            learning_rate=spec["learning_rate"],
            fd_step=spec["fd_step"],
        )
        trained = qslp_spec.with_parameters(
            np.concatenate([report.final_theta, report.final_beta_params])
        )
        x0 = dataset.points[0][0]
        hidden = qslp_hidden_outputs(x0, trained)
        prediction = qslp_predict(x0, trained)
        oracle_diff = abs(prediction - hidden.oracle_value)

        result = report.as_dict()
        result["hidden_neurons"] = trained.hidden_neurons
        result["final_accuracy"] = qslp_accuracy(dataset, trained)
        result["oracle_check"] = {
            "prediction": prediction,
            "oracle_value": hidden.oracle_value,
            "abs_diff": oracle_diff,
            "per_trajectory": hidden.as_dict()["per_trajectory"],
        }
        rows = [[epoch, float(loss)] for epoch, loss in enumerate(report.loss_trace)]
        tables = {"qslp-train-loss.csv": (["epoch", "loss"], rows)}
        return result, tables, oracle_diff <= ORACLE_CHECK_TOLERANCE

    @classmethod
    def _handle_ensemble(cls, spec, seed, tolerance, d_values):
        ensemble_spec, x = config_module.build_ensemble(spec, seed)
        report = run_bagging_demo(ensemble_spec, x, tolerance=tolerance)
        return report.as_dict(), {}, report.passed

    @classmethod
    def _handle_verify_appendix(cls, spec, seed, tolerance, d_values):
        control_gates = config_module.build_control_gates(spec, seed)
        report = verify_appendix(seed, control_gates=control_gates, tolerance=spec["tolerance"])
        return report.as_dict(), {}, report.passed

    @classmethod
    def _handle_resources(cls, spec, seed, tolerance, d_values):
        d_values = d_values or spec["d_values"]
        params = ClassicalParams(
            N=spec["N"], p=spec.get("p") or 2 ** spec["n"], alpha=spec["alpha"], beta=spec["beta"]
        )
        reports = resource_sweep(d_values, n=spec["n"], classical_params=params, seed=seed)
        rows = []
        passed = True
        for r in reports:
            rows.append(
                [r.d, r.controlled_g_applications, r.trajectory_count, r.classical_cost_model.cost]
            )
            passed = passed and (
                r.controlled_g_applications == 2 * r.d
                and r.f_applications == 1
                and r.trajectory_count == 2**r.d
            )
        result = {"rows": [r.as_dict() for r in reports]}
        tables = {
            "resources.csv": (["d", "controlled_gates", "trajectories", "classical_cost"], rows)
        }
        return result, tables, passed


def _summary(mode: str, result: dict) -> dict:
    keys = {
        "aggregate": ("quantum_value", "oracle_value", "abs_diff"),
        "qslp-train": ("initial_loss", "final_loss", "final_accuracy"),
        "ensemble": ("quantum_avg", "classical_avg", "abs_diff"),
        "verify-appendix": ("passed", "max_diff"),
        "resources": (),
    }[mode]
    return {key: result.get(key) for key in keys}


def record_run(mode, seed, digest, exit_code, output_dir, summary):
    """Store an ExperimentRun row; a missing table only logs a warning."""
    if str(get_setting("MAQA_RECORD_RUNS", "True")) != "True":
        return
    from .models import ExperimentRun

    try:
        ExperimentRun.objects.create(
            mode=mode,
            seed=str(seed),
            config_hash=digest,
            exit_code=exit_code,
            output_dir=output_dir,
            summary=summary,
        )
    except DatabaseError as exc:
        logger.warning("Could not record run (did you run migrate?): %s", exc)


def run_command(
    config: ExperimentConfig,
    seed: int = None,
    out_dir=None,
    tolerance: float = None,
    d_values: List[int] = None,
) -> Dict:
    """
    Resolve seed, output directory and tolerance, then execute the config.

    Seed precedence: explicit argument, then the config's seed, then MAQA_SEED.

    Raises:
        ConfigError: seed outside 0..2**64-1
    """
    if seed is not None:
        seed = check_seed(seed)
    elif config.seed is not None:
        seed = config.seed
    else:
        seed = check_seed(default_seed(), field="MAQA_SEED")
    if out_dir is None:
        out_dir = config.output_path or get_setting("MAQA_OUTPUT_DIR", "reports")
    if tolerance is None:
        tolerance = default_tolerance()
    return CommandRunner.execute(config, seed, Path(out_dir), tolerance, d_values=d_values)
