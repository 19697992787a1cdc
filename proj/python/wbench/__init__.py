"""Python bindings for the wbench evaluation engine.

Sidecar writers (``write_*``) emit exactly the files the engine ingests, so an
extractor can produce a bundle and check it with :func:`validate`.
"""

import json
import os

from . import _core
from ._core import (
    ConfigError,
    DegenerateError,
    Error,
    FormatError,
    InconsistentLengthError,
    MissingPoseError,
    ParseError,
    SchemaError,
    TransportError,
    arc_length_resample,
    case_ids,
    frame_stem,
    gate_factor,
    hps_norm,
    inspect_sidecars,
    parse_depth,
    parse_embeddings,
    parse_poses,
    parse_scalars,
    parse_vp_probs,
    pearson,
    psnr_db,
    serialize_depth,
    serialize_embeddings,
    serialize_meta,
    serialize_poses,
    serialize_scalars,
    serialize_vp_probs,
    spearman,
)

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_TRANSPORT = 0, 1, 2, 3


def _overrides(overrides):
    return json.dumps(overrides) if overrides else ""


def nav_score(manifest, case_id, poses_text, overrides=None):
    return _core.nav_score(str(manifest), case_id, poses_text, _overrides(overrides))


def spatial_scores(d0, return_idx, overrides=None):
    return _core.spatial_scores(list(d0), return_idx, _overrides(overrides))


def segment_continuity(cut_probs, overrides=None):
    return _core.segment_continuity(list(cut_probs), _overrides(overrides))


def synth(manifest, artifacts, mode="perfect", sigma_t=0.0, sigma_r=0.0, seed=0, full=False):
    code, _ = _core.synth(os.fspath(manifest), os.fspath(artifacts), mode, sigma_t, sigma_r, seed, full)
    return code


def validate(manifest, artifacts):
    """Returns (exit code, per-case summary list, printable report)."""
    code, text, summary = _core.validate(os.fspath(manifest), os.fspath(artifacts))
    return code, json.loads(summary), text


def run(manifest, artifacts, out, track="full", metrics="", judge="stub", workers=1, model_id="model",
        overrides=None):
    code, _ = _core.run(os.fspath(manifest), os.fspath(artifacts), os.fspath(out), track, metrics, judge,
                        workers, model_id, _overrides(overrides))
    return code


def report(runs, out, formats=("txt", "csv", "json"), votes=None):
    code, _ = _core.report([os.fspath(r) for r in runs], list(formats), os.fspath(out),
                           os.fspath(votes) if votes else None)
    return code


def scorecards(run_dir):
    return [json.loads(s) for s in _core.scorecards(os.fspath(run_dir))]


def _write(path, data):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"newline": ""})) as f:
        f.write(data)


def case_dir(artifacts, case_id):
    return os.path.join(os.fspath(artifacts), case_id)


def write_meta(artifacts, case_id, fps, frames, turns):
    _write(os.path.join(case_dir(artifacts, case_id), "meta.txt"), serialize_meta(fps, frames, turns))


def write_poses(artifacts, case_id, frames, poses, turns):
    _write(os.path.join(case_dir(artifacts, case_id), "poses.txt"), serialize_poses(frames, poses, turns))


def write_depth(artifacts, case_id, maps, frames, intrinsics):
    _write(os.path.join(case_dir(artifacts, case_id), "depth.bin"), serialize_depth(maps, frames, intrinsics))


def write_embeddings(artifacts, case_id, role, vectors, frames):
    path = os.path.join(case_dir(artifacts, case_id), "embeddings", role + ".emb")
    _write(path, serialize_embeddings(vectors, frames))


def write_scalars(artifacts, case_id, role, frames, values):
    _write(os.path.join(case_dir(artifacts, case_id), "scalars", role + ".txt"), serialize_scalars(frames, values))


def write_vp_probs(artifacts, case_id, probs):
    _write(os.path.join(case_dir(artifacts, case_id), "vp_probs.txt"), serialize_vp_probs(probs))
