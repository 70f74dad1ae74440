import json

import pytest

from fap.cli import main
from fap.core import read_manifest

from cascade import corpus


def run(argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


@pytest.fixture
def tag_file(tmp_path):
    path = tmp_path / "tags.jsonl"
    path.write_text("".join(json.dumps({"id": t.id, "noun": t.noun, "adjective": t.adjective}) + "\n"
                            for t in corpus()))
    return path


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "synth"
    assert run(["synth", "--seed", 1, "--dim", 8, "--images", 100, "--separation", 12,
                "--out", out]) == 0
    return out


@pytest.fixture
def split_manifest(tmp_path, synth_dir):
    out = tmp_path / "split.jsonl"
    assert run(["split", "--seed", 0, "--manifest", synth_dir / "manifest.jsonl", "--out", out]) == 0
    return out


def test_compile(tmp_path, tag_file):
    out = tmp_path / "compiled"
    assert run(["compile", "--seed", 0, "--tags", tag_file, "--out", out]) == 0
    recs = read_manifest(out / "manifest.jsonl")
    assert {r.noun for r in recs} == {"dog", "man", "people"}
    log = [json.loads(l) for l in (out / "removal_log.jsonl").read_text().splitlines()]
    assert log[0] == {"rule": "min_adjective_noun_images", "target": "sad dog", "count": 19}


def test_compile_malformed_line(tmp_path, capsys):
    lines = [json.dumps({"id": str(i), "noun": "dog", "adjective": "good"}) for i in range(16)]
    lines.append("{not json")
    path = tmp_path / "bad.jsonl"
    path.write_text("\n".join(lines) + "\n")
    code = run(["compile", "--seed", 0, "--tags", path, "--out", tmp_path / "o"])
    assert code != 0
    assert ":17:" in capsys.readouterr().err


def test_compile_refuses_to_overwrite(tmp_path, tag_file):
    out = tmp_path / "compiled"
    assert run(["compile", "--seed", 0, "--tags", tag_file, "--out", out]) == 0
    assert run(["compile", "--seed", 0, "--tags", tag_file, "--out", out]) == 1
    assert run(["compile", "--seed", 0, "--tags", tag_file, "--out", out, "--force"]) == 0


def test_usage_error_exit_code(tmp_path):
    assert run(["train", "--family", "tensor_cond"]) == 1
    assert run(["nonsense"]) == 1


def test_split_prints_counts(tmp_path, capsys):
    path = tmp_path / "m.jsonl"
    path.write_text("".join(json.dumps({"id": f"d{i}", "noun": "dog", "aspect": "age", "polarity": -1,
                                        "adjective": "young"}) + "\n" for i in range(10)))
    assert run(["split", "--seed", 0, "--manifest", path, "--out", tmp_path / "s.jsonl"]) == 0
    line = [l for l in capsys.readouterr().out.splitlines() if l.startswith("dog")][0]
    assert line.split()[-3:] == ["5", "2", "3"]


def test_split_zeroshot_lists_holdouts(tmp_path, capsys, synth_dir):
    code = run(["split", "--seed", 0, "--manifest", synth_dir / "manifest.jsonl",
                "--split-kind", "zeroshot", "--holdout", "dog:age", "--out", tmp_path / "z.jsonl"])
    assert code == 0
    assert "holdouts: dog:age" in capsys.readouterr().out
    recs = read_manifest(tmp_path / "z.jsonl")
    assert {r.split for r in recs if r.noun == "dog"} == {"test"}


def test_train_epochs_zero_warns(tmp_path, caplog, synth_dir, split_manifest):
    model = tmp_path / "m.json"
    code = run(["train", "--seed", 0, "--manifest", split_manifest, "--embeddings",
                synth_dir / "embeddings.tsv", "--family", "tensor_cond", "--task", "polarity",
                "--epochs", 0, "--out", model])
    assert code == 0 and model.exists()
    assert "epochs=0" in caplog.text


def test_train_is_byte_identical(tmp_path, synth_dir, split_manifest):
    outs = []
    for k in range(2):
        model = tmp_path / f"m{k}.json"
        assert run(["train", "--seed", 3, "--manifest", split_manifest, "--embeddings",
                    synth_dir / "embeddings.tsv", "--family", "concat_mlp", "--task", "polarity",
                    "--epochs", 3, "--out", model]) == 0
        outs.append(model.read_bytes())
    assert outs[0] == outs[1]


def test_eval_model_and_baseline(tmp_path, synth_dir, split_manifest):
    model = tmp_path / "m.json"
    assert run(["train", "--seed", 0, "--manifest", split_manifest, "--embeddings",
                synth_dir / "embeddings.tsv", "--family", "lr_noun_specific", "--task", "polarity",
                "--lr", 0.05, "--epochs", 20, "--out", model]) == 0
    rep_path = tmp_path / "rep.json"
    assert run(["eval", "--model", model, "--manifest", split_manifest, "--embeddings",
                synth_dir / "embeddings.tsv", "--out", rep_path]) == 0
    rep = json.loads(rep_path.read_text())
    assert rep["overall"] >= 0.95 and rep["applicable"]
    base_path = tmp_path / "base.json"
    assert run(["eval", "--baseline", "--task", "polarity", "--seed", 4, "--manifest",
                split_manifest, "--split", "all", "--out", base_path]) == 0
    assert abs(json.loads(base_path.read_text())["overall"] - 0.5) < 0.05


def test_eval_reports_untrainable_combination(tmp_path, synth_dir, capsys):
    split = tmp_path / "z.jsonl"
    run(["split", "--seed", 0, "--manifest", synth_dir / "manifest.jsonl", "--split-kind", "zeroshot",
         "--holdout", "dog:age", "--out", split])
    model = tmp_path / "m.json"
    assert run(["train", "--seed", 0, "--manifest", split, "--embeddings", synth_dir / "embeddings.tsv",
                "--family", "lr_noun_specific", "--task", "polarity", "--epochs", 2, "--out", model]) == 0
    rep_path = tmp_path / "rep.json"
    assert run(["eval", "--model", model, "--manifest", split, "--embeddings",
                synth_dir / "embeddings.tsv", "--out", rep_path]) == 0
    assert json.loads(rep_path.read_text())["applicable"] is False


def test_gradcheck_pass_and_corrupt(capsys):
    assert run(["gradcheck", "--family", "tensor_cond", "--instances", 3]) == 0
    assert "PASS" in capsys.readouterr().out
    assert run(["gradcheck", "--family", "concat_mlp", "--instances", 2, "--corrupt"]) == 3


def test_synth_outputs(synth_dir):
    oracle = json.loads((synth_dir / "oracle.json").read_text())
    assert oracle["noun_blind_ceiling"] == pytest.approx(0.5)
    assert (synth_dir / "embeddings.tsv").read_text().startswith("#dim=8")


def test_experiment(tmp_path):
    cfg = {"synth": {"dim": 8, "images_per_cell": 60, "separation": 8.0, "seed": 2},
           "split": {"kind": "standard", "seed": 1},
           "models": [{"family": "lr_noun_agnostic", "task": "polarity", "seed": 0, "epochs": 5},
                      {"family": "tensor_cond", "task": "polarity", "seed": 0, "epochs": 5, "lr": 0.01}]}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "exp"
    assert run(["experiment", "--config", path, "--out", out]) == 0
    report = json.loads((out / "report.json").read_text())
    fams = [r["family"] for r in report["results"]]
    assert fams == ["baseline", "baseline", "lr_noun_agnostic", "tensor_cond"]
    assert report["oracle"]["noun_blind_ceiling"] == pytest.approx(0.5)
