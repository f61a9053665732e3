import json

import pytest

from hexsimp import fixtures as F
from hexsimp.mesh import scaled_jacobians
from hexsimp.pipeline import (
    CheckpointError, InfeasibleInputError, SimplifyConfig, load_checkpoint, resume, run,
)


def _strip(report):
    d = report.to_dict()
    d.pop("wall_time")
    return d


def test_pillow_end_to_end(pillow):
    out, rep = run(pillow)
    assert rep.final["n_components"] == 1 and out.n_hexes == 64
    assert rep.final["hr"] <= 0.01 and scaled_jacobians(out).min() > 0
    assert rep.reduction_ratio == pytest.approx(1 - 1 / 33)
    assert rep.records[0]["kind"] == "sheet" and rep.records[0]["outcome"] == "success"


def test_cube_is_noop(cube3):
    out, rep = run(cube3)
    assert rep.initial["n_components"] == rep.final["n_components"] == 1
    assert not any(r["kind"] in ("sheet", "chord") for r in rep.records)
    assert out.n_hexes == 27


def test_crossing_chords_before_sheets(crossing):
    out, rep = run(crossing)
    assert rep.final["n_components"] == 1
    ok = [r for r in rep.records if r["outcome"] == "success" and r["kind"] != "refine"]
    first_sheet = next(i for i, r in enumerate(ok) if r["kind"] == "sheet")
    assert first_sheet > 0 and ok[0]["kind"] == "chord"
    assert ok[-1]["kind"] == "sheet"


def test_checkpoint_resume_matches_uninterrupted(tmp_path, crossing):
    cfg = SimplifyConfig()
    _, full = run(crossing, cfg)
    ck = tmp_path / "ck.json"
    mesh, partial = run(crossing, cfg, checkpoint=str(ck), stop_after=3)
    assert partial is None
    _, resumed = resume(str(ck))
    a, b = _strip(full), _strip(resumed)
    assert a["records"] == b["records"] and a["final"] == b["final"]
    assert a["termination"] == b["termination"]


def test_resume_with_new_budget(tmp_path, pillow):
    ck = tmp_path / "ck.json"
    run(pillow, SimplifyConfig(), checkpoint=str(ck), stop_after=1)
    _, rep = resume(str(ck), SimplifyConfig(r_h=0.02))
    assert rep.config["r_h"] == 0.02
    assert rep.final["n_components"] == 1


def test_corrupted_checkpoint(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(CheckpointError):
        load_checkpoint(str(bad))
    bad.write_text(json.dumps({"version": 99}))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(str(bad))


def test_infeasible_input():
    m = F.cube_mesh(1)
    with pytest.raises(InfeasibleInputError):
        run(m.with_positions(m.vertices * [1, 1, -1]))


def test_config_validation_and_roundtrip():
    with pytest.raises(ValueError):
        SimplifyConfig(r_h=0)
    with pytest.raises(ValueError):
        SimplifyConfig(target_reduction=1.5)
    cfg = SimplifyConfig(r_h=0.005, chord_cap=2)
    assert SimplifyConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_report_json_is_deterministic(pillow):
    _, a = run(pillow)
    _, b = run(pillow)
    assert _strip(a) == _strip(b)
    json.loads(a.to_json())
