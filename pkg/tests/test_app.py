import json
import math

import pandas as pd
import pytest

from app import main
from cli_io import load_state_file, save_state_file
from constants import EXIT_CODES
from tensor_core import SpaceShape, expand_product, random_product, standard_state, werner_state

FAST = ["--restarts", "4", "--seed", "1"]


def run(capsys, *args):
    code = main([*FAST, *args])
    return code, json.loads(capsys.readouterr().out)


def test_make_maximal_then_inj_norm(tmp_path, capsys):
    path = tmp_path / "max.json"
    code, report = run(capsys, "make-maximal", "--dims", "2,2", "-o", str(path))
    assert code == EXIT_CODES["success"]
    assert report["output"] == str(path)
    code, report = run(capsys, "inj-norm", str(path))
    assert code == 0
    assert report["injective_norm"]["lower"] == pytest.approx(1 / math.sqrt(2), abs=1e-8)
    assert report["injective_norm"]["upper"] == pytest.approx(1 / math.sqrt(2), abs=1e-8)
    assert len(report["nearest_product"]) == 2


def test_distance_of_product_is_zero(tmp_path, capsys):
    path = tmp_path / "product.json"
    save_state_file(expand_product(random_product(SpaceShape((2, 3)), 0)), str(path))
    code, report = run(capsys, "distance", str(path))
    assert code == 0
    assert report["distance"]["upper"] == pytest.approx(0.0, abs=1e-6)


def test_reports_are_byte_identical(tmp_path, capsys):
    path = tmp_path / "max.json"
    main(["--seed", "3", "make-maximal", "--dims", "2,2,4", "-o", str(path)])
    capsys.readouterr()
    main([*FAST, "proj-norm", str(path)])
    first = capsys.readouterr().out
    main([*FAST, "proj-norm", str(path)])
    assert capsys.readouterr().out == first


def test_inner_radius_closed_form(capsys):
    code, report = run(capsys, "inner-radius", "--dims", "2,3,6")
    assert code == 0
    assert report["mode"] == "closed-form"
    assert report["inner_radius"]["lower"] == 1 / math.sqrt(6)


def test_unsupported_shape_exit_code(capsys):
    code, report = run(capsys, "vball", "--dims", "2,2,2")
    assert code == EXIT_CODES["unsupported_shape"]
    assert "n_N >= n_1" in report["error"]["message"]


def test_malformed_file_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"dims": [2, 2], "re": [1, 0')
    code, report = run(capsys, "inj-norm", str(path))
    assert code == EXIT_CODES["validation_error"]
    assert report["error"]["kind"] == "StateFileError"
    assert "line 1" in report["error"]["message"]


def test_strict_undecided_exit_code(tmp_path, capsys):
    path = tmp_path / "ghz.json"
    save_state_file(standard_state("ghz", SpaceShape((2, 2, 2))), str(path))
    code = main([*FAST, "--strict", "is-maximal", str(path)])
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "unknown-inner-radius"
    assert code == EXIT_CODES["undecided"]


def test_classify_with_csv(tmp_path, capsys):
    rho_path, csv_path = tmp_path / "rho.json", tmp_path / "out.csv"
    save_state_file(werner_state(1.0), str(rho_path))
    code = main([*FAST, "--csv", str(csv_path), "classify", str(rho_path)])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["verdict"] == "maximally-entangled"
    assert report["witness"]["operator"]["rows"] == 4
    frame = pd.read_csv(csv_path)
    assert list(frame["quantity"]) == ["entanglement"]


def test_demo_divergence(capsys):
    code, report = run(capsys, "demo-divergence", "--k", "3")
    assert code == 0
    assert [row["k"] for row in report["table"]] == [1, 2, 3]
    assert report["table"][1]["lower_bound"] == pytest.approx(2.0)


def test_connect(tmp_path, capsys):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    main(["--seed", "1", "make-maximal", "--dims", "2,2,4", "-o", str(first)])
    main(["--seed", "2", "make-maximal", "--dims", "2,2,4", "-o", str(second)])
    capsys.readouterr()
    code, report = run(capsys, "connect", str(first), str(second))
    assert code == 0
    assert report["residual"] <= 1e-8
    assert load_state_file(str(first)).dims == (2, 2, 4)


class TestFlagPlacement:
    def test_seed_after_subcommand(self, tmp_path, capsys):
        before, after = tmp_path / "before.json", tmp_path / "after.json"
        assert main(["--seed", "7", "make-maximal", "--dims", "2,2", "-o", str(before)]) == 0
        assert main(["make-maximal", "--dims", "2,2", "--seed", "7", "-o", str(after)]) == 0
        capsys.readouterr()
        assert load_state_file(str(before)).amplitudes.tolist() == load_state_file(str(after)).amplitudes.tolist()

    def test_solver_flags_after_subcommand(self, tmp_path, capsys):
        path = tmp_path / "bell.json"
        save_state_file(standard_state("bell", SpaceShape((2, 2))), str(path))
        code = main(["inj-norm", str(path), "--restarts", "4", "--seed", "1", "--tol", "1e-10"])
        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert report["injective_norm"]["upper"] == pytest.approx(1 / math.sqrt(2), abs=1e-8)

    def test_search_flags_after_subcommand(self, capsys):
        code = main(["inner-radius", "--dims", "2,2", "--search", "--seed", "1", "--restarts", "4"])
        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert report["mode"] == "search"

    def test_strict_and_csv_after_subcommand(self, tmp_path, capsys):
        path, csv_path = tmp_path / "ghz.json", tmp_path / "out.csv"
        save_state_file(standard_state("ghz", SpaceShape((2, 2, 2))), str(path))
        code = main(["is-maximal", str(path), "--strict", "--csv", str(csv_path), *FAST])
        capsys.readouterr()
        assert code == EXIT_CODES["undecided"]
        assert csv_path.exists()

    def test_leading_flags_survive_subcommand_defaults(self, tmp_path, capsys):
        path = tmp_path / "ghz.json"
        save_state_file(standard_state("ghz", SpaceShape((2, 2, 2))), str(path))
        assert main(["--strict", *FAST, "is-maximal", str(path)]) == EXIT_CODES["undecided"]
        capsys.readouterr()


@pytest.mark.parametrize("argv", [
    ["--seed", "-1", "inner-radius", "--dims", "2,2"],
    ["inner-radius", "--dims", "2,2", "--seed", "-1"],
])
def test_negative_seed_is_a_validation_error(argv, capsys):
    code = main(argv)
    report = json.loads(capsys.readouterr().out)
    assert code == EXIT_CODES["validation_error"]
    assert report["error"]["kind"] == "BoundsError"
