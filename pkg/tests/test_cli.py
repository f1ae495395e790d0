import json
import subprocess
import sys

import pytest

from congest_ftp.cli import EXIT_OK, EXIT_TIMEOUT, EXIT_USAGE, EXIT_VERIFY, main


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "g.txt"
    assert main(["generate", "--generator", "erdos_renyi", "--n", "20", "--p", "0.25", "--seed", "2",
                 "--out", str(path)]) == EXIT_OK
    return path


def test_build_and_verify(graph_file, tmp_path, capsys):
    out = tmp_path / "h.txt"
    prov = tmp_path / "prov.json"
    code = main(["ftmbfs", "--graph", str(graph_file), "--sources", "0,3", "--verify", "--json", "-",
                 "--out", str(out), "--provenance", str(prov)])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["verify"]["pass"] is True and doc["sources"] == ["0", "3"]
    assert set(json.loads(prov.read_text())) == {f"{u} {v}" for u, v in doc["edges"]}
    assert main(["verify", "--graph", str(graph_file), "--subgraph", str(out), "--sources", "0,3"]) == EXIT_OK


def test_verify_failure_exit_code(graph_file, tmp_path):
    tree = tmp_path / "tree.txt"
    main(["ftmbfs", "--graph", str(graph_file), "--sources", "0", "--sample-prob", "0", "--out", str(tree)])
    assert main(["verify", "--graph", str(graph_file), "--subgraph", str(tree), "--sources", "0",
                 "--f", "2"]) == EXIT_VERIFY


def test_usage_errors(graph_file, tmp_path):
    assert main(["ftmbfs", "--graph", str(tmp_path / "missing")]) == EXIT_USAGE
    assert main(["ftmbfs", "--graph", str(graph_file), "--sources", "zz"]) == EXIT_USAGE
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["ftmbfs", "--graph", str(graph_file), "--config", str(bad)]) == EXIT_USAGE
    with pytest.raises(SystemExit):
        main(["no-such-command"])


def test_timeout_exit_code(graph_file):
    assert main(["dual-ftmbfs", "--graph", str(graph_file), "--max-rounds", "50"]) == EXIT_TIMEOUT


def test_config_file_with_flag_override(graph_file, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nseed = 4\nsample-prob = 0\nnum_sources = 2\n")
    main(["ftmbfs", "--graph", str(graph_file), "--config", str(cfg), "--json", "-"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["seed"] == 4 and len(doc["sources"]) == 2
    main(["ftmbfs", "--graph", str(graph_file), "--config", str(cfg), "--seed", "9", "--json", "-"])
    assert json.loads(capsys.readouterr().out)["seed"] == 9


def test_experiment_output_identical_across_processes(tmp_path):
    args = ["experiment", "--sizes", "16", "--num-sources", "1,2", "--seeds", "0,1", "--p", "0.3",
            "--algorithms", "ftmbfs,spanner1", "--json", "-"]
    runs = [
        subprocess.run([sys.executable, "-m", "congest_ftp.cli", *args], capture_output=True, text=True, check=True)
        .stdout
        for _ in range(3)
    ]
    assert runs[0] == runs[1] == runs[2]
    assert len(json.loads(runs[0])) == 8
