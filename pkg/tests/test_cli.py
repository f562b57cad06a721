import json
from pathlib import Path

import numpy as np
import pytest

from torus_killing import io
from torus_killing.cli import main, run
from torus_killing.field import FourierField, random_real_field
from torus_killing.lattice import HONEYCOMB, DualLattice
from torus_killing.reconstruct import Potential

FIX = Path(__file__).resolve().parent.parent / "fixtures"


def fx(name):
    return str(FIX / name)


def test_fit_on_cosine_passes():
    out = run(["check-killing", "--field", fx("cos_x.json"), "--fit"])
    assert out.exit_code == 0
    assert out.report["constants"]["c"] == pytest.approx([0, 1], abs=1e-12)
    assert out.report["schema"] == 1 and out.report["version"]
    assert len(out.report["inputs"][fx("cos_x.json")]) == 64


def test_fit_on_two_cosines_fails_check():
    assert main(["check-killing", "--field", fx("cos_x_cos_y.json"), "--fit", "--tol", "1e-9"]) == 2


def test_explicit_constants_and_per_equation(tmp_path):
    out_path = tmp_path / "r.json"
    out = run(["check-killing", "--field", fx("cos_x.json"), "--constants", fx("killing_x_axis.json"),
               "--per-equation", "--out", str(out_path)])
    assert out.exit_code == 0
    doc = json.loads(out_path.read_text())
    assert doc["residual"]["norm"] == 0 and "perEquation" in doc["residual"]


def test_constant_sequence_residual():
    out = run(["trilinear", "--seq", fx("constant_212.json"), "--action", "residual"])
    assert out.exit_code == 0
    assert out.report["residual"]["maxAbs"] == 0


@pytest.mark.parametrize("action", ["symmetry=2", "moduli", "extend=5"])
def test_trilinear_actions(action):
    assert main(["trilinear", "--seq", fx("constant_212.json"), "--action", action]) == 0


def test_growth_action():
    out = run(["trilinear", "--action", "growth", "--r0", "0.5", "--steps", "20"])
    assert out.exit_code == 0
    assert out.report["growth"]["r"][3] == pytest.approx(0.2)
    assert run(["trilinear", "--action", "growth", "--phase", "3.14159"]).exit_code == 1


def test_check_cubic():
    out = run(["check-cubic", "--field", fx("honeycomb.json")])
    assert out.exit_code == 0
    assert out.report["admissibleDirections"][0] == pytest.approx([0, 1], abs=1e-12)
    assert run(["check-cubic", "--field", fx("cos_x_cos_y.json")]).exit_code == 2


def test_reconstruct_writes_potential(tmp_path):
    u_path, rep_path = tmp_path / "u.json", tmp_path / "rep.json"
    code = main(["reconstruct", "--field", fx("cos_x.json"), "--constants", fx("killing_x_axis.json"),
                 "--out", str(u_path), "--report", str(rep_path)])
    assert code == 0
    u = io.potential_from_json(io.read_json(u_path))
    assert u.linear == pytest.approx((-0.045, 0.0))
    assert json.loads(rep_path.read_text())["hessianResidual"] <= 1e-9


def test_reconstruct_reports_inconsistency():
    out = run(["reconstruct", "--field", fx("cos_x_cos_y.json"), "--constants", fx("killing_x_axis.json")])
    assert out.exit_code == 2
    assert len(out.report["worstNode"]) == 2


def test_geodesic(tmp_path):
    csv = tmp_path / "t.csv"
    out = run(["geodesic", "--field", fx("cos_x.json"), "--init", "0.5,0,0.8,0.6", "--T", "5", "--h", "0.01",
               "--check", "energy,clairaut,clairautCube", "--csv", str(csv)])
    assert out.exit_code == 0
    assert io.read_trajectory_csv(csv).shape == (501, 5)
    assert run(["geodesic", "--field", fx("cos_x_cos_y.json"), "--init", "0,0,1,0", "--T", "1", "--h", "0.1",
                "--check", "clairaut"]).exit_code == 1


def test_search_and_shift():
    out = run(["search", "--problem", fx("search_honeycomb.json"), "--seed", "1"])
    assert out.exit_code == 0 and out.report["observational"]
    assert out.report["verificationDiscrepancy"] <= 1e-12
    out = run(["shift", "--problem", fx("search_honeycomb_barrier.json"), "--lam0", "1"])
    assert out.exit_code == 0 and out.report["jointResidual"] > 1e-6


def test_exit_codes(tmp_path):
    assert main(["check-killing", "--field", str(tmp_path / "missing.json"), "--fit"]) == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["check-killing", "--field", str(bad), "--fit"]) == 1
    assert main(["check-killing", "--field", fx("cos_x.json")]) == 1
    assert main(["no-such-command"]) == 1
    assert main(["trilinear", "--action", "residual"]) == 1
    wrong = tmp_path / "v2.json"
    wrong.write_text(json.dumps({"schema": 2, "lattice": {"basis": [[1, 0], [0, 1]]}, "coeffs": []}))
    assert main(["check-killing", "--field", str(wrong), "--fit"]) == 1


def test_commands_are_idempotent():
    a = run(["check-killing", "--field", fx("cos_x_cos_y.json"), "--fit"]).report
    b = run(["check-killing", "--field", fx("cos_x_cos_y.json"), "--fit"]).report
    assert a == b


def test_field_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    for dual in (DualLattice(np.array([[1.0, 0.3], [0.0, 0.8]])), HONEYCOMB):
        f = random_real_field(dual.dual() if dual is HONEYCOMB else dual, 2, rng)
        path = tmp_path / "f.json"
        io.save_field(f, path)
        back = io.load_field(path)
        assert np.array_equal(back.coeffs, f.coeffs)
        doc = io.read_json(path)
        assert all(e["n"][0] > 0 or (e["n"][0] == 0 and e["n"][1] >= 0) for e in doc["coeffs"])


def test_field_reader_rejects_lower_half():
    doc = {"lattice": {"basis": [[1, 0], [0, 1]]}, "coeffs": [{"n": [-1, 0], "re": 1}]}
    with pytest.raises(io.SchemaError):
        io.field_from_json(doc)


def test_constants_reader():
    assert io.constants_from_json({"a": [0, 1], "c": [1, 0]}).c == (1.0, 0.0)
    with pytest.raises(io.SchemaError):
        io.constants_from_json({"a": [0], "c": [1, 0]})


def test_sequence_file_round_trip(tmp_path):
    s = io.load_sequence(fx("constant_212.json"))
    path = tmp_path / "s.json"
    io.write_json(io.sequence_to_json(s), path)
    back = io.load_sequence(path)
    assert np.array_equal(back.x, s.x) and back.band == 4


def test_potential_file_round_trip():
    dual = DualLattice(np.eye(2))
    u = Potential((0.5, -0.25), FourierField.from_dict(dual, {(1, 2): 0.1j}))
    back = io.potential_from_json(json.loads(io.write_json(io.potential_to_json(u))))
    assert back.linear == u.linear and np.array_equal(back.periodic.coeffs, u.periodic.coeffs)
