"""
Artifact writing and the run manifest.

Every file a command produces goes through write_json() or write_csv(), which
record its content hash; the manifest is written last, once every listed
artifact exists on disk.
"""

import json
import logging
from pathlib import Path

from django.utils import timezone

from datasets.ingest import file_sha256

from .models import Artifact, RunManifest
from .serializers import dump_manifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def now():
    return timezone.now().isoformat()


def start_manifest(command, output_dir, seed, config_path=None, input_paths=()):
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    return RunManifest(
        command=command,
        config_path=str(config_path) if config_path else None,
        input_paths=[str(p) for p in input_paths],
        output_dir=str(output_dir),
        seed=seed,
        started_at=now(),
    )


def _record(manifest, path):
    artifact = Artifact(path=path.name, sha256=file_sha256(path))
    manifest.artifacts.append(artifact)
    logger.info("wrote %s", path)
    return artifact


def json_text(data):
    return json.dumps(data, indent=2) + '\n'


def write_json(manifest, name, data):
    path = Path(manifest.output_dir) / name
    path.write_text(json_text(data), encoding='utf-8')
    return _record(manifest, path)


def write_csv(manifest, name, frame):
    path = Path(manifest.output_dir) / name
    frame.to_csv(path, index=False, lineterminator='\n')
    return _record(manifest, path)


def finish_manifest(manifest):
    """Stamp the end time, check every artifact exists and write manifest.json"""
    manifest.finished_at = now()
    manifest.clean()
    path = Path(manifest.output_dir) / MANIFEST_NAME
    path.write_text(json_text(dump_manifest(manifest)), encoding='utf-8')
    return path
