import pytest

from cutdarcy import cli
from cutdarcy.geometry import DegenerateCut
from cutdarcy.harness import CSV_COLUMNS, LevelFailure
from cutdarcy.linalg import read_matrix_market


def test_run_prints_csv(capsys):
    assert cli.main(["run", "--example", "2", "--nx", "6,12", "--no-timing"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == ",".join(CSV_COLUMNS)
    assert len(out) == 3


def test_run_writes_file_and_dumps(tmp_path):
    out = tmp_path / "res.csv"
    code = cli.main(["run", "--example", "1", "--nx", "8", "--faces", "macro", "--stab", "sc-hat",
                     "--impl", "face", "--out", str(out), "--dump-mesh", "--dump-system",
                     "--dump-macro"])
    assert code == 0
    assert out.read_text().startswith("example,")
    A = read_matrix_market(tmp_path / "res_nx8_matrix.mtx")
    assert A.shape[0] == int(out.read_text().splitlines()[1].split(",")[6])
    assert (tmp_path / "res_nx8_mesh.txt").exists()
    assert (tmp_path / "res_nx8_macro.csv").read_text().startswith("element,root,distance")


def test_penalty_on_purely_essential_problem_exits_2(capsys):
    assert cli.main(["run", "--example", "2", "--method", "penalty", "--nx", "6"]) == 2
    assert "natural boundary" in capsys.readouterr().err


def test_geometry_failure_exits_3(monkeypatch, capsys):
    def broken(cfg, keep_levels=False):
        raise LevelFailure(10, DegenerateCut("sliver")) from DegenerateCut("sliver")

    monkeypatch.setattr(cli, "run_experiment", broken)
    assert cli.main(["run", "--nx", "10"]) == 3
    assert "sliver" in capsys.readouterr().err


def test_bad_arguments_exit_with_usage_error():
    with pytest.raises(SystemExit) as info:
        cli.main(["run", "--nx", "20,10"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["run", "--stab", "nope"])
