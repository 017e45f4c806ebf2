import json

import numpy as np
import pandas as pd
import pytest

from cli_io import (
    bracket_report,
    csv_row,
    dumps_report,
    load_state_file,
    parse_state_document,
    save_state_file,
    state_document,
    write_csv,
)
from injective_norm import injective_norm
from maximal_vectors import make_maximal
from tensor_core import DensityOperator, PureState, SpaceShape, random_density, random_state
from utils import StateFileError


class TestStateFiles:
    def test_round_trip_is_bit_exact(self, tmp_path):
        state = random_state(SpaceShape((2, 3, 2)), 42)
        path = tmp_path / "state.json"
        save_state_file(state, str(path))
        loaded = load_state_file(str(path))
        assert isinstance(loaded, PureState)
        assert loaded.dims == (2, 3, 2)
        np.testing.assert_array_equal(loaded.amplitudes, state.amplitudes)

    def test_density_round_trip(self, tmp_path):
        rho = random_density(SpaceShape((2, 2)), 3)
        path = tmp_path / "rho.json"
        save_state_file(rho, str(path))
        loaded = load_state_file(str(path))
        assert isinstance(loaded, DensityOperator)
        np.testing.assert_array_equal(loaded.matrix, rho.matrix)
        assert json.loads(path.read_text())["kind"] == "density"

    def test_malformed_json_reports_position(self):
        with pytest.raises(StateFileError, match="line 2"):
            parse_state_document('{"dims": [2, 2],\n "re": [1, 0, 0 0]}')

    def test_missing_key(self):
        with pytest.raises(StateFileError, match="'im'"):
            parse_state_document('{"dims": [2, 2], "re": [1, 0, 0, 0]}')

    def test_length_mismatch(self):
        with pytest.raises(StateFileError, match="expected 4 amplitudes"):
            parse_state_document('{"dims": [2, 2], "re": [1, 0, 0], "im": [0, 0, 0]}')

    def test_invariant_failure_is_named(self):
        with pytest.raises(StateFileError, match="unit norm"):
            parse_state_document('{"dims": [2, 2], "re": [1, 1, 0, 0], "im": [0, 0, 0, 0]}')

    def test_load_tolerance(self):
        state = parse_state_document('{"dims": [2, 2], "re": [1.000000005, 0, 0, 0], "im": [0, 0, 0, 0]}')
        assert state.amplitudes[0] == pytest.approx(1.0)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(StateFileError, match="cannot read"):
            load_state_file(str(tmp_path / "missing.json"))


class TestReports:
    def test_dumps_is_deterministic_and_sorted(self):
        report = {"b": 0.1 + 0.2, "a": [1.0, 2.5]}
        text = dumps_report(report)
        assert text == dumps_report(dict(reversed(list(report.items()))))
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text)["b"] == 0.1 + 0.2

    def test_non_finite_values_rejected(self):
        with pytest.raises(ValueError):
            dumps_report({"x": float("nan")})

    def test_bracket_report(self, opts):
        state = make_maximal(SpaceShape((2, 2)), 7)
        report = bracket_report(injective_norm(state, opts))
        assert report["lower"] == pytest.approx(2 ** -0.5, abs=1e-8)
        assert set(report) == {"lower", "upper", "upper_certificate", "iterations", "restarts_used"}

    def test_state_document_layout(self):
        state = random_state(SpaceShape((2, 2)), 1)
        document = state_document(state)
        assert document["dims"] == [2, 2]
        assert len(document["re"]) == len(document["im"]) == 4


def test_write_csv(tmp_path):
    path = tmp_path / "out.csv"
    write_csv([csv_row("injective_norm", 0.5, 0.5000001, "note")], str(path))
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["quantity", "lower", "upper", "notes"]
    assert frame.loc[0, "upper"] == 0.5000001
