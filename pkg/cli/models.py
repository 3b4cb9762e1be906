from dataclasses import dataclass, field
from pathlib import Path

from core.exceptions import InvalidInputError


@dataclass(frozen=True)
class Artifact:
    path: str
    sha256: str


@dataclass
class RunManifest:
    """What a command read, what it wrote, and the seed it ran under"""
    command: str
    config_path: str | None
    input_paths: list
    output_dir: str
    seed: int | None
    started_at: str
    finished_at: str = ''
    artifacts: list = field(default_factory=list)

    def clean(self):
        missing = [a.path for a in self.artifacts if not (Path(self.output_dir) / a.path).is_file()]
        if missing:
            raise InvalidInputError(f"manifest lists artifacts that do not exist: {', '.join(missing)}")
