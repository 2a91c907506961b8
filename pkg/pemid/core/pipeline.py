"""Stage execution with audit records."""

import time
import uuid
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

from pemid.core.audit import AuditLogger
from pemid.core.config import ConfigManager, ExperimentConfig
from pemid.core.exceptions import ExperimentStageError, PemidError

AUDIT_FILE_NAME = "audit.jsonl"


class RunContext:
    """State of one command invocation: its id, resolved config and output directory."""

    def __init__(
        self,
        command: str,
        config: ExperimentConfig,
        out_dir: Path,
        run_id: Optional[str] = None,
    ) -> None:
        self.command = command
        self.config = config
        self.out_dir = Path(out_dir)
        self.run_id = run_id or str(uuid.uuid4())
        self.outputs: Dict[str, str] = {}

    def record(self, key: str, path: Path) -> Path:
        self.outputs[key] = str(path)
        return path


class Pipeline:
    """Runs the stages of a command, writing start/complete/error events for each."""

    def __init__(
        self,
        config_manager: ConfigManager,
        audit_logger: Optional[AuditLogger] = None,
    ) -> None:
        self.config_manager = config_manager
        self.audit_logger = audit_logger

    def logger_for(self, context: RunContext) -> AuditLogger:
        if self.audit_logger is None:
            return AuditLogger(context.out_dir / AUDIT_FILE_NAME)
        return self.audit_logger

    @contextmanager
    def run(self, context: RunContext) -> Iterator[AuditLogger]:
        """Bracket a command with ``run_start``/``run_complete`` and persist its resolved config."""
        context.out_dir.mkdir(parents=True, exist_ok=True)
        logger = self.logger_for(context)
        logger.log_event(
            "run_start",
            context.run_id,
            command=context.command,
            data={"out_dir": str(context.out_dir), "name": context.config.name},
        )
        context.record(
            "resolved_config",
            self.config_manager.save_resolved_config(context.config, context.out_dir),
        )
        try:
            yield logger
        except Exception as e:
            logger.log_event(
                "run_complete",
                context.run_id,
                command=context.command,
                success=False,
                error_message=str(e),
            )
            raise
        logger.log_event(
            "run_complete",
            context.run_id,
            command=context.command,
            data={"outputs": context.outputs},
        )

    @contextmanager
    def stage(
        self, context: RunContext, logger: AuditLogger, name: str, **data: Any
    ) -> Iterator[Dict[str, Any]]:
        """Run a block as a named stage; failures become :class:`ExperimentStageError`.

        The yielded dict is merged into the ``stage_complete`` event data.
        """
        logger.log_event(
            "stage_start", context.run_id, stage=name, command=context.command, data=data
        )
        result: Dict[str, Any] = {}
        start = time.perf_counter()
        try:
            yield result
        except ExperimentStageError:
            raise
        except (PemidError, OSError, ValueError) as e:
            logger.log_event(
                "stage_error",
                context.run_id,
                stage=name,
                command=context.command,
                success=False,
                error_message=str(e),
            )
            raise ExperimentStageError(name, e) from e
        result.setdefault("elapsed_s", time.perf_counter() - start)
        logger.log_event(
            "stage_complete", context.run_id, stage=name, command=context.command, data=result
        )
