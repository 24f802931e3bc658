"""
RunManifest Domain Model

Everything needed to re-run a command: the command name, its arguments, the
effective configuration and the seed, plus the files it read and wrote.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from ...infrastructure.exceptions import DataValidationException


@dataclass
class RunManifest:
    """Record of one CLI run.

    Output paths are stored relative to the run's output directory so that
    manifests of identical runs are byte-identical wherever they were written.
    Wall-clock ``timings`` are kept apart from the deterministic content.

    Attributes:
        command: Subcommand name
        arguments: Command arguments as given (paths as strings)
        config: Effective configuration echo
        seed: The single seed every random stream derives from
        config_path: Config file, if one was given
        inputs: Input name -> path
        outputs: Output name -> path relative to the output directory
        iterations: Per-iteration records of ``iterate``
        timings: Stage -> wall-clock seconds
    """

    command: str
    arguments: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    config_path: Optional[str] = None
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    iterations: list = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._validate()

    def _validate(self) -> None:
        if not self.command:
            raise DataValidationException("Manifest command cannot be empty", field="command")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise DataValidationException("seed must be an unsigned integer", field="seed",
                                          value=str(self.seed))

    def add_output(self, name: str, relative_path: str) -> None:
        self.outputs[name] = relative_path

    def to_dict(self) -> Dict[str, Any]:
        """Deterministic content only; timings are written separately."""
        return {
            "command": self.command,
            "arguments": dict(sorted(self.arguments.items())),
            "config": self.config,
            "seed": self.seed,
            "config_path": self.config_path,
            "inputs": dict(self.inputs),
            "outputs": dict(sorted(self.outputs.items())),
            "iterations": list(self.iterations),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunManifest':
        if "command" not in data:
            raise DataValidationException("Manifest data must contain 'command' field",
                                          field="command", value="missing")
        return cls(
            command=data["command"],
            arguments=dict(data.get("arguments", {})),
            config=dict(data.get("config", {})),
            seed=int(data.get("seed", 0)),
            config_path=data.get("config_path"),
            inputs=dict(data.get("inputs", {})),
            outputs=dict(data.get("outputs", {})),
            iterations=list(data.get("iterations", [])),
        )

    def __str__(self) -> str:
        return f"RunManifest({self.command}, seed={self.seed}, outputs={len(self.outputs)})"
