import json

import numpy as np
import pytest

from povm_coherence.cli import exit_code_for, main
from povm_coherence.errors import (
    BadAlpha,
    CompletionFailure,
    InvalidState,
    MalformedInput,
    NoConvergence,
    NotPSD,
    SolverFailure,
)
from povm_coherence.file_management import write_json, write_measurement, write_state
from povm_coherence.quantum import Povm


@pytest.fixture
def files(tmp_path, plus, basis2, trine, mixed2):
    paths = {
        "plus": tmp_path / "plus.json",
        "mixed": tmp_path / "mixed.json",
        "basis": tmp_path / "basis.json",
        "trine": tmp_path / "trine.json",
        "trivial": tmp_path / "trivial.json",
    }
    write_state(str(paths["plus"]), plus)
    write_state(str(paths["mixed"]), mixed2)
    write_measurement(str(paths["basis"]), basis2)
    write_measurement(str(paths["trine"]), trine)
    write_measurement(str(paths["trivial"]), Povm.trivial(2))
    return {key: str(value) for key, value in paths.items()}


def _values(report):
    return {entry["measure"]: entry["value"] for entry in report["results"]}


@pytest.mark.parametrize(
    "error, code",
    [
        (MalformedInput("x"), 2),
        (BadAlpha("x"), 2),
        (InvalidState("x"), 3),
        (NotPSD("x"), 3),
        (SolverFailure("x"), 4),
        (NoConvergence("x"), 4),
        (CompletionFailure("x"), 5),
    ],
)
def test_exit_code_for(error, code):
    assert exit_code_for(error) == code


def test_measure_plus_state(files, capsys):
    code = main(["measure", "--state", files["plus"], "--measurement", files["basis"],
                 "--measures", "l1,rel"])

    assert code == 0
    values = _values(json.loads(capsys.readouterr().out))
    assert abs(values["l1"] - 1.0) <= 1e-6
    assert abs(values["rel"] - 1.0) <= 1e-6


def test_measure_trivial_povm_all_zero(files, capsys):
    code = main(["measure", "--state", files["plus"], "--measurement", files["trivial"],
                 "--measures", "l1,tsallis:2,rel,trace,weight,renyi:0.5"])

    assert code == 0
    values = _values(json.loads(capsys.readouterr().out))
    assert len(values) == 6
    assert all(abs(value) <= 1e-5 for value in values.values())


def test_measure_trine(files, capsys):
    code = main(["measure", "--state", files["mixed"], "--measurement", files["trine"],
                 "--measures", "l1", "--route", "both"])

    assert code == 0
    report = json.loads(capsys.readouterr().out)
    routes = {entry["route"]: entry["value"] for entry in report["results"]}
    assert abs(routes["direct"] - 1.0) <= 1e-6
    assert abs(routes["difference"]) <= 1e-8


def test_measure_is_byte_identical(files, capsys):
    argv = ["measure", "--state", files["plus"], "--measurement", files["trine"],
            "--measures", "l1,renyi:0.6,weight"]

    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out

    assert first == second


def test_measure_table_and_out(files, tmp_path, capsys):
    out = tmp_path / "reports" / "report.json"

    code = main(["measure", "--state", files["plus"], "--measurement", files["basis"],
                 "--measures", "l1", "--format", "table", "--out", str(out)])

    assert code == 0
    assert "wall_time" in capsys.readouterr().out
    assert json.loads(out.read_text())["results"][0]["measure"] == "l1"


@pytest.mark.parametrize(
    "measures, code",
    [("negativity", 2), ("tsallis:3", 2), ("renyi:1", 2)],
)
def test_measure_bad_measures(files, measures, code):
    argv = ["measure", "--state", files["plus"], "--measurement", files["basis"],
            "--measures", measures]

    assert main(argv) == code


def test_measure_bad_files(files, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    negative = tmp_path / "negative.json"
    write_json(str(negative), {"dim": 2, "rho": [[1.5, 0], [0, -0.5]]})
    incomplete = tmp_path / "incomplete.json"
    write_json(str(incomplete), {"type": "povm", "effects": [[[0.5, 0], [0, 0.5]]]})

    def run(state, measurement):
        return main(["measure", "--state", state, "--measurement", measurement,
                     "--measures", "l1"])

    assert run(str(broken), files["basis"]) == 2
    assert run(str(tmp_path / "missing.json"), files["basis"]) == 2
    assert run(str(negative), files["basis"]) == 3
    assert run(files["plus"], str(incomplete)) == 3
    assert run(files["plus"], files["trine"].replace("trine", "nothing")) == 2
    assert main(["measure", "--state", files["plus"], "--measurement", files["basis"],
                 "--measures", "l1", "--tol", "-1"]) == 2


def test_measure_dimension_mismatch(files, tmp_path):
    big = tmp_path / "big.json"
    write_state(str(big), np.eye(3) / 3)

    assert main(["measure", "--state", str(big), "--measurement", files["basis"],
                 "--measures", "l1"]) == 3


def test_naimark_trine(files, tmp_path, capsys):
    out = tmp_path / "v.json"

    code = main(["naimark", "--povm", files["trine"], "--out", str(out), "--verify"])

    assert code == 0
    payload = json.loads(out.read_text())
    assert np.array(payload["V"]).shape == (6, 6, 2)
    residuals = json.loads(capsys.readouterr().out)
    assert residuals["unitarity"] <= 1e-10
    assert residuals["statistics"] <= 1e-9


def test_naimark_single_outcome(files, tmp_path):
    out = tmp_path / "v.json"

    assert main(["naimark", "--povm", files["trivial"], "--out", str(out)]) == 0
    v = np.array(json.loads(out.read_text())["V"])
    assert np.allclose(v[..., 0] + 1j * v[..., 1], np.eye(2))


def test_naimark_projective_file(files, tmp_path):
    out = tmp_path / "v.json"

    assert main(["naimark", "--povm", files["basis"], "--out", str(out),
                 "--completion", "random"]) == 0


@pytest.mark.parametrize(
    "flags",
    [["--trials", "0"], ["--dim-max", "1"], ["--workers", "0"]],
)
def test_verify_rejects_arguments(flags):
    assert main(["verify", "--suite", "matcore", *flags]) == 2


def test_verify_matcore(tmp_path, capsys):
    summary = tmp_path / "out" / "summary.csv"

    code = main(["verify", "--suite", "matcore", "--trials", "5", "--seed", "7",
                 "--summary-csv", str(summary)])

    assert code == 0
    assert "eigh_reconstruction" in capsys.readouterr().out
    assert summary.exists()


def test_random_then_measure(tmp_path, capsys):
    state = tmp_path / "state.json"
    povm = tmp_path / "povm.json"
    blocks = tmp_path / "blocks.json"

    assert main(["random", "--kind", "state", "--dim", "2", "--seed", "1",
                 "--out", str(state)]) == 0
    assert main(["random", "--kind", "povm", "--dim", "2", "--outcomes", "3",
                 "--seed", "1", "--out", str(povm)]) == 0
    assert main(["random", "--kind", "projective", "--dim", "4", "--blocks", "2,2",
                 "--seed", "1", "--out", str(blocks)]) == 0
    assert main(["measure", "--state", str(state), "--measurement", str(povm),
                 "--measures", "l1,rel,tsallis:0.5"]) == 0
    assert json.loads(blocks.read_text())["type"] == "projective"


@pytest.mark.parametrize(
    "argv",
    [
        ["--kind", "state", "--dim", "2", "--blocks", "1,1"],
        ["--kind", "projective", "--dim", "4", "--blocks", "2,1"],
        ["--kind", "povm", "--dim", "2", "--outcomes", "0"],
        ["--kind", "projective", "--dim", "4", "--blocks", "a,b"],
    ],
)
def test_random_rejects(argv, tmp_path):
    assert main(["random", *argv, "--out", str(tmp_path / "x.json")]) == 2


def test_seed_environment(monkeypatch, tmp_path):
    out = tmp_path / "state.json"
    monkeypatch.setenv("COHERENCE_SEED", "five")

    assert main(["random", "--kind", "state", "--dim", "2", "--out", str(out)]) == 2

    monkeypatch.setenv("COHERENCE_SEED", "5")
    assert main(["random", "--kind", "state", "--dim", "2", "--out", str(out)]) == 0
    first = out.read_text()
    assert main(["random", "--kind", "state", "--dim", "2", "--seed", "5",
                 "--out", str(out)]) == 0
    assert out.read_text() == first
