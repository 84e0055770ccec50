import os
import json
import logging
from contextlib import contextmanager
import joblib
from ..exceptions import CheckpointMismatchError, DependencyError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MANIFEST_KEYS = ("schema_version", "config_hash", "seed", "taxonomy_hash",
                 "embedding_hash", "stage")


def make_manifest(stage, config_hash, seed, taxonomy_hash, embedding_hash=None, **extra):
    manifest = {"schema_version": SCHEMA_VERSION,
                "stage": stage,
                "config_hash": config_hash,
                "seed": int(seed),
                "taxonomy_hash": taxonomy_hash,
                "embedding_hash": embedding_hash}
    manifest.update(extra)
    return manifest


def check_manifest(manifest, expect, source="checkpoint"):
    """Raise CheckpointMismatchError naming every key whose value differs from ``expect``."""
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise CheckpointMismatchError("{} has schema version {}, expected {}".format(
            source, manifest.get("schema_version"), SCHEMA_VERSION))
    diffs = ["{}: found {!r}, expected {!r}".format(k, manifest.get(k), v)
             for k, v in sorted(expect.items()) if manifest.get(k) != v]
    if diffs:
        raise CheckpointMismatchError("{} is incompatible with this run ({})".format(
            source, "; ".join(diffs)))


def save_checkpoint(path, payload, manifest):
    with open(path, "wb") as f:
        joblib.dump({"manifest": dict(manifest), "payload": payload}, f)


def load_checkpoint(path, expect=None):
    if not os.path.exists(path):
        raise DependencyError("missing prerequisite checkpoint: {}".format(path))
    with open(path, "rb") as f:
        blob = joblib.load(f)
    manifest = blob["manifest"]
    check_manifest(manifest, expect or {}, source=path)
    return manifest, blob["payload"]


def read_manifest(path):
    manifest, _ = load_checkpoint(path)
    return manifest


def export_json(path, obj):
    """Canonical JSON (sorted keys, fixed separators), so equal documents are equal bytes."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")


def load_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


@contextmanager
def run_lock(out_dir):
    """Exclusive ownership of an output directory for the duration of a run."""
    os.makedirs(out_dir, exist_ok=True)
    lock_path = os.path.join(out_dir, ".lock")
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise DependencyError("output directory {} is locked by another run "
                              "(remove {} if no run is active)".format(out_dir, lock_path))
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield lock_path
    finally:
        try:
            os.remove(lock_path)
        except OSError:
            logger.warning("could not remove lock file %s", lock_path)
