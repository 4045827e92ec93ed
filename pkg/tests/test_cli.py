import csv
import json

import pytest

from fscompare.cli import main
from fscompare.config import ConfigError, config_from_dict, config_to_dict, load_config
from fscompare.data import load_csv
from fscompare.report import RunReport


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    assert main(["synth", "--m-per-class", "5", "--n", "40", "--planted", "4", "--effect", "2.5",
                 "--seed", "7", "-o", str(d / "toy.csv")]) == 0
    return d / "toy.csv"


def write_config(path, dataset, **extra):
    lines = [f"dataset: {dataset}", 'conditions: ["control:treated"]', "k_grid: [4, 8, 12]",
             "n_trees: 20", "seed: 3"]
    lines += [f"{k}: {v}" for k, v in extra.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, dataset):
    d = tmp_path_factory.mktemp("run")
    cfg = write_config(d / "cfg.yaml", dataset)
    assert main(["run", str(cfg), "-o", str(d / "out"), "--workers", "1"]) == 0
    return d / "out"


def test_synth_contract(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["synth", "--m-per-class", "10", "--n", "1000", "--planted", "30", "--effect", "2",
                 "--seed", "7", "-o", str(out)]) == 0
    mat = load_csv(out)
    assert (mat.m, mat.n) == (20, 1000)
    planted = (tmp_path / "d.planted.txt").read_text().split()
    assert planted == [str(i) for i in range(30)]
    first = out.read_bytes()
    assert main(["synth", "--m-per-class", "10", "--n", "1000", "--planted", "30", "--effect", "2",
                 "--seed", "7", "-o", str(out)]) == 0
    assert out.read_bytes() == first


def test_synth_missing_output_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["synth", "--n", "10"])
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_synth_invalid_spec():
    assert main(["synth", "--n", "5", "--planted", "6", "-o", "/tmp/never.csv"]) == 2


def test_run_outputs(run_dir):
    stab = read_csv(run_dir / "stability.csv")
    assert stab[0] == ["condition", "method", "k", "stab"]
    assert len(stab) == 1 + 3 * 3
    acc = read_csv(run_dir / "accuracy.csv")
    assert acc[0] == ["condition", "method", "classifier", "k", "auc"] and len(acc) == 1 + 36
    comp = read_csv(run_dir / "comparisons.csv")
    assert comp[0][:3] == ["condition", "measure", "classifier"]
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["seed"] == 3 and summary["config"]["k_grid"] == [4, 8, 12]
    assert "timing" not in json.dumps(summary)
    assert (run_dir / "timing.csv").exists()


def test_summary_round_trip(run_dir):
    text = (run_dir / "summary.json").read_text()
    report = RunReport.from_json(text)
    assert report.to_json() == text
    assert RunReport.from_json(report.to_json()) == report


def test_rerun_from_summary(run_dir, tmp_path):
    assert main(["run", str(run_dir / "summary.json"), "-o", str(tmp_path), "--workers", "2"]) == 0
    for name in ("stability.csv", "accuracy.csv", "comparisons.csv", "summary.json"):
        assert (tmp_path / name).read_bytes() == (run_dir / name).read_bytes()


def test_run_k_too_large(dataset, tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"dataset: {dataset}\nconditions: ['control:treated']\nk_grid: [4, 41]\n")
    assert main(["run", str(cfg), "-o", str(tmp_path / "o")]) == 1
    assert "k=41" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["dataset: [unclosed\n", "conditions: ['a:b']\n",
                                  "dataset: x.csv\nconditions: ['a:b']\nbogus: 1\n",
                                  "dataset: x.csv\nconditions: ['a']\n",
                                  "dataset: x.csv\nconditions: ['a:b']\nmethods: [LDA]\n"])
def test_run_config_errors(tmp_path, text):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(text)
    assert main(["run", str(cfg), "-o", str(tmp_path / "o")]) == 2


def test_run_missing_config(tmp_path):
    assert main(["run", str(tmp_path / "nope.yaml"), "-o", str(tmp_path)]) == 2


def test_run_missing_dataset(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", tmp_path / "absent.csv")
    assert main(["run", str(cfg), "-o", str(tmp_path / "o")]) == 1


def test_run_with_failed_cells(tmp_path, capsys):
    data = tmp_path / "d.csv"
    rows = ["sample_id,label,a,b,c"] + [f"s{i},{'x' if i < 4 else 'y'},{i},{i * i % 5},{i % 3}"
                                        for i in range(6)]
    data.write_text("\n".join(rows) + "\n")
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"dataset: {data}\nconditions: ['x:y']\nk_grid: [1, 2]\nmethods: [SAM]\n"
                   "n_trees: 5\n")
    assert main(["run", str(cfg), "-o", str(tmp_path / "o"), "--workers", "1"]) == 1
    err = capsys.readouterr().err
    assert "failed cell" in err and "method=SAM" in err
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["failures"]


def test_report_stability(run_dir, tmp_path, capsys):
    assert main(["report", str(run_dir), "stability", "-o", str(tmp_path)]) == 0
    (table,) = tmp_path.glob("stability__*.csv")
    rows = read_csv(table)
    assert rows[0] == ["k", "GEODE", "MRMR", "SAM"]
    assert [r[0] for r in rows[1:]] == ["4", "8", "12"]
    assert "GEODE" in capsys.readouterr().out


def test_report_accuracy(run_dir, tmp_path):
    assert main(["report", str(run_dir / "accuracy.csv"), "accuracy", "-o", str(tmp_path)]) == 0
    tables = sorted(p.name for p in tmp_path.glob("accuracy__*.csv"))
    assert len(tables) == 2
    wide = read_csv(tmp_path / tables[0])
    assert len(wide[0]) == 1 + 12


def test_report_tukey(run_dir, tmp_path):
    assert main(["report", str(run_dir), "tukey", "--all", "-o", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "tukey.csv")
    assert rows[0] == ["dataset", "condition", "measure", "classifier", "better", "relation",
                       "worse", "p_adj"]
    assert len(rows) == 1 + 3 + 4 * 3
    assert all(r[5] == "is better than" for r in rows[1:])


def test_report_errors(run_dir, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["report", str(run_dir), "figures"])
    assert info.value.code == 2
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["report", str(empty), "stability"]) == 1
    header_only = tmp_path / "h.csv"
    header_only.write_text("condition,method,k,stab\n")
    assert main(["report", str(header_only), "stability"]) == 1
    assert main(["report", str(tmp_path / "missing"), "stability"]) == 1


def test_config_echo_round_trip(tmp_path, dataset):
    cfg = load_config(write_config(tmp_path / "c.yaml", dataset, log2="true", svm_c=0.5))
    assert cfg.log2 and cfg.train.c == 0.5
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_config_relative_paths_and_multi_dataset(tmp_path):
    (tmp_path / "sub").mkdir()
    cfg_path = tmp_path / "sub" / "c.yaml"
    cfg_path.write_text("datasets: [a.csv, ../b.csv]\nconditions: ['a:ctl:low', 'b:ctl:high']\n")
    cfg = load_config(cfg_path)
    assert cfg.datasets[0] == ("a", str(tmp_path / "sub" / "a.csv"))
    assert cfg.datasets[1] == ("b", str(tmp_path / "b.csv"))
    assert [c.id for c in cfg.conditions] == ["a/low_vs_ctl", "b/high_vs_ctl"]
    with pytest.raises(ConfigError, match="must name its dataset"):
        config_from_dict({"datasets": ["a.csv", "b.csv"], "conditions": ["x:y"]})
