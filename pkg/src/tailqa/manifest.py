"""Stage manifests: digests, seeds and row counts for resumable pipelines.

Every stage writes a manifest on success (atomically, after its outputs).
Downstream stages refuse to run when the files they consume no longer match
the digests their producer recorded, which catches deleted or hand-edited
intermediates before they poison a run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from .errors import DataError
from .util import dump_json, sha256_file, write_text

MANIFEST_DIR = "manifests"


@dataclass
class StageManifest:
    stage: str
    config_digest: str
    seed: int | None = None
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    created_at: str = ""

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
            "counts": dict(sorted(self.counts.items())),
            "created_at": self.created_at,
        }


def manifest_path(output_dir: Path, stage: str) -> Path:
    return output_dir / MANIFEST_DIR / f"{stage}.json"


def write_manifest(output_dir: Path, manifest: StageManifest) -> Path:
    if not manifest.created_at:
        manifest.created_at = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    path = manifest_path(output_dir, manifest.stage)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_text(path, dump_json(manifest.to_dict()))
    return path


def load_manifest(output_dir: Path, stage: str) -> StageManifest | None:
    path = manifest_path(output_dir, stage)
    if not path.exists():
        return None
    data = json.loads(path.read_text(encoding="utf-8"))
    return StageManifest(
        stage=data["stage"], config_digest=data.get("config_digest", ""),
        seed=data.get("seed"), inputs=data.get("inputs", {}),
        outputs=data.get("outputs", {}), counts=data.get("counts", {}),
        created_at=data.get("created_at", ""))


def require_manifest(output_dir: Path, stage: str) -> StageManifest:
    manifest = load_manifest(output_dir, stage)
    if manifest is None:
        raise DataError(f"stage '{stage}' has not been run yet "
                        f"(missing {manifest_path(output_dir, stage)})")
    return manifest


def verify_outputs(output_dir: Path, upstream: StageManifest,
                   names: Mapping[str, Path] | None = None) -> None:
    """Check that upstream output files still match their recorded digests.

    With no explicit name->path mapping, every recorded output is verified
    against output_dir/<relative name>.
    """
    targets = ({name: output_dir / name for name in upstream.outputs}
               if names is None else dict(names))
    for name, path in targets.items():
        recorded = upstream.outputs.get(name)
        if recorded is None:
            raise DataError(f"stage '{upstream.stage}' did not produce '{name}'; "
                            f"rerun it before continuing")
        if not Path(path).exists():
            raise DataError(f"digest mismatch: '{name}' from stage '{upstream.stage}' "
                            f"is missing ({path}); rerun '{upstream.stage}'")
        actual = sha256_file(path)
        if actual != recorded:
            raise DataError(f"digest mismatch: '{name}' changed since stage "
                            f"'{upstream.stage}' produced it; rerun '{upstream.stage}' "
                            f"(or restore the file)")


def file_digests(paths: Mapping[str, Path]) -> dict[str, str]:
    out = {}
    for name, path in paths.items():
        if not Path(path).exists():
            raise DataError(f"input file for '{name}' not found: {path}")
        out[name] = sha256_file(path)
    return out
