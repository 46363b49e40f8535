from dataclasses import fields

import pytest

from helmetid import config as config_mod
from helmetid.cli import EXIT_INPUT, EXIT_OK, EXIT_USAGE, run_cli
from helmetid.frame_assign import FrameAssignConfig
from helmetid.metrics import IMPACT_WEIGHT, IOU_THRESHOLD
from helmetid.simulator import ScenarioConfig
from helmetid.tracker import TrackerConfig

SHORT = "n_frames = 60\nseed = 1\n"


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    (d / "run.cfg").write_text(SHORT)
    assert run_cli(["simulate", "--config", str(d / "run.cfg"), "--out", str(d)]) == EXIT_OK
    return d


def test_simulate_writes_files(sim_dir):
    for name in ("tracking.csv", "detections.csv", "ground_truth.csv"):
        assert (sim_dir / name).read_text().count("\n") > 1


def test_score_identical_files(sim_dir, tmp_path, capsys):
    gt = str(sim_dir / "ground_truth.csv")
    assert run_cli(["score", "--pred", gt, "--gt", gt, "--out", str(tmp_path / "r.csv")]) == EXIT_OK
    assert "weighted_accuracy 1.0\n" in capsys.readouterr().out
    assert (tmp_path / "r.csv").read_text().splitlines()[-1].startswith("ALL,")


def test_assign_then_score_noiseless(sim_dir, tmp_path, capsys):
    out = tmp_path / "a.csv"
    code = run_cli(["assign", "--tracking", str(sim_dir / "tracking.csv"),
                    "--detections", str(sim_dir / "detections.csv"), "--out", str(out)])
    assert code == EXIT_OK
    assert run_cli(["score", "--pred", str(out), "--gt", str(sim_dir / "ground_truth.csv"),
                    "--out", str(tmp_path / "r.csv")]) == EXIT_OK
    assert capsys.readouterr().out.rstrip().endswith("weighted_accuracy 1.0")


def test_pipeline_noiseless(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(SHORT)
    assert run_cli(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert capsys.readouterr().out.rstrip().endswith("weighted_accuracy 1.0")
    assert (tmp_path / "o" / "score.csv").exists()


def test_missing_conf_column(sim_dir, tmp_path, capsys):
    lines = (sim_dir / "detections.csv").read_text().splitlines()
    header = lines[0].split(",")
    k = header.index("conf")
    stripped = "\n".join(",".join(c for i, c in enumerate(l.split(",")) if i != k) for l in lines) + "\n"
    (tmp_path / "d.csv").write_text(stripped)
    code = run_cli(["assign", "--tracking", str(sim_dir / "tracking.csv"),
                    "--detections", str(tmp_path / "d.csv"), "--out", str(tmp_path / "a.csv")])
    assert code == EXIT_INPUT
    assert "conf" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    code = run_cli(["score", "--pred", str(tmp_path / "nope.csv"), "--gt", str(tmp_path / "nope.csv"),
                    "--out", str(tmp_path / "r.csv")])
    assert code == EXIT_INPUT
    assert "nope.csv" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["launch"], [], ["score", "--pred", "x"], ["simulate", "--bogus", "1", "--out", "x"]])
def test_usage_errors(argv, capsys):
    assert run_cli(argv) == EXIT_USAGE
    assert capsys.readouterr().err


def test_bad_override(tmp_path):
    assert run_cli(["simulate", "--set", "frames=3", "--out", str(tmp_path)]) == EXIT_INPUT
    assert run_cli(["simulate", "--set", "n_frames", "--out", str(tmp_path)]) == EXIT_INPUT


def test_validate(sim_dir, capsys):
    assert run_cli(["validate", "--bundle", str(sim_dir)]) == EXIT_OK
    assert "diagnostic" in capsys.readouterr().out


def test_outputs_are_byte_identical_and_jobs_do_not_matter(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n_frames = 40\nn_plays = 2\njitter_sigma = 1.0\nfp_rate = 0.05\nfn_rate = 0.05\n")
    one, two = tmp_path / "one", tmp_path / "two"
    assert run_cli(["pipeline", "--config", str(cfg), "--out", str(one)]) == EXIT_OK
    assert run_cli(["pipeline", "--config", str(cfg), "--out", str(two), "--jobs", "2"]) == EXIT_OK
    for name in ("tracking.csv", "detections.csv", "ground_truth.csv", "assignments.csv", "score.csv"):
        assert (one / name).read_bytes() == (two / name).read_bytes(), name


def test_config_defaults_follow_module_defaults():
    cfg = config_mod.RunConfig()
    sc, tc, fc = ScenarioConfig(), TrackerConfig(), FrameAssignConfig()
    for obj, built in ((sc, cfg.scenarios()[0]), (tc, cfg.tracker()), (fc, cfg.frame_assign())):
        for f in fields(obj):
            assert getattr(built, f.name) == getattr(obj, f.name), f.name
    assert cfg.match_iou == IOU_THRESHOLD and cfg.impact_weight == IMPACT_WEIGHT


def test_config_parsing():
    cfg = config_mod.loads("# comment\nseed = 4\nuse_teams = no\njitter_sigma=2.5\ncamera = endzone\n")
    assert (cfg.seed, cfg.use_teams, cfg.jitter_sigma, cfg.camera) == (4, False, 2.5, "endzone")
    assert config_mod.loads(config_mod.dumps(cfg)) == cfg
    with pytest.raises(ValueError, match="Seed"):
        config_mod.loads("Seed = 4\n")
    with pytest.raises(ValueError, match="n_frames"):
        config_mod.loads("n_frames = many\n")
    with pytest.raises(ValueError):
        config_mod.loads("camera = blimp\n")
