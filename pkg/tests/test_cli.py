import json
from fractions import Fraction as F
from pathlib import Path
from xml.etree import ElementTree

import pytest

from asianmot.cli import EXIT_FINDING, EXIT_INVALID, EXIT_OK, InputError, RunConfig, main
from asianmot.mot import Coupling
from asianmot.report import PlotBox, coupling_csv, emit_support_svg
from asianmot.structure import SupportStructure, extract_support

FIX = Path(__file__).parent / "fixtures"
SVG_NS = "{http://www.w3.org/2000/svg}"


def run(capsys, *args):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def branch_groups(svg: str) -> list:
    root = ElementTree.fromstring(svg)
    return [g.get("id") for g in root.iter(f"{SVG_NS}g") if (g.get("id") or "").startswith("branch-")]


def test_bounds_forward_example(capsys, tmp_path):
    code, out, _ = run(capsys, "bounds", FIX / "forward_example.json", "--out", tmp_path)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["lower"] == rep["upper"] == "1/4"
    assert json.loads((tmp_path / "bounds.json").read_text()) == rep


def test_bounds_double_mode(capsys, tmp_path):
    code, out, _ = run(capsys, "bounds", FIX / "forward_example.json", "--mode", "double", "--out", tmp_path)
    assert code == EXIT_OK
    assert json.loads(out)["upper"] == pytest.approx(0.25)


def test_outputs_are_byte_identical(capsys, tmp_path):
    for sub in ("a", "b"):
        assert run(capsys, "bounds", FIX / "small_abs.json", "--out", tmp_path / sub)[0] == EXIT_OK
    assert (tmp_path / "a" / "bounds.json").read_bytes() == (tmp_path / "b" / "bounds.json").read_bytes()


def test_hedge_then_verify(capsys, tmp_path):
    assert run(capsys, "hedge", FIX / "small_abs.json", "--out", tmp_path)[0] == EXIT_OK
    cert = tmp_path / "certificate.json"
    code, out, _ = run(capsys, "verify", FIX / "small_abs.json", cert, "--out", tmp_path)
    assert code == EXIT_OK and json.loads(out)["hedge_holds"]
    # lowering a static payoff breaks the superhedge
    data = json.loads(cert.read_text())
    atom, value = data["static"][0][0]
    data["static"][0][0] = [atom, str(F(value) - 1)]
    cert.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify", FIX / "small_abs.json", cert, "--out", tmp_path)
    assert code == EXIT_FINDING and not json.loads(out)["hedge_holds"]


def test_btp_check_empty(capsys, tmp_path):
    code, out, _ = run(capsys, "btp-check", FIX / "btp_empty.json", "--out", tmp_path)
    rep = json.loads(out)
    assert code == EXIT_OK
    assert (rep["checked"], rep["falsifications"]) == (0, 0)


def test_btp_check_plans(capsys, tmp_path):
    code, out, _ = run(capsys, "btp-check", FIX / "btp_plans.json", "--out", tmp_path)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["checked"] == 2
    assert rep["results"][0]["verdict"] == "left_dominated"
    assert rep["cases"]["L1"] >= 1


def test_structure_on_coarse_figure(capsys, tmp_path):
    code, out, _ = run(capsys, "structure", FIX / "figure_marginals.json", "--mode", "double", "--grid", "40",
                       "--out", tmp_path)
    assert code == EXIT_OK
    rep = json.loads(out)["min"]
    assert rep["breaches"] == []
    assert float(rep["residual_mass"]) <= 0.01
    svg = (tmp_path / "structure_min.svg").read_text()
    assert set(branch_groups(svg)) >= {"branch-upper", "branch-lower", "branch-diagonal"}
    lines = (tmp_path / "coupling_min.csv").read_text().splitlines()
    assert lines[0] == "x,y,mass,branch"


@pytest.mark.parametrize("task, fixture, key", [
    ("one-marginal", "one_marginal.json", "lower"),
    ("hedge-audit", "hedge_paths.json", "min_slack"),
    ("hedge-audit", "hedge_random.json", "min_slack"),
    ("conjecture", "conjecture.json", "min_slack"),
])
def test_asian_tasks(capsys, tmp_path, task, fixture, key):
    code, out, _ = run(capsys, "asian-ct", task, FIX / fixture, "--out", tmp_path)
    assert code == EXIT_OK
    assert key in json.loads(out)


def test_one_marginal_values(capsys, tmp_path):
    _, out, _ = run(capsys, "asian-ct", "one-marginal", FIX / "one_marginal.json", "--out", tmp_path)
    rep = json.loads(out)
    assert (rep["lower"], rep["upper"]) == ("0", "1")
    assert (rep["lp"]["lower"], rep["lp"]["upper"]) == ("0", "1")


def test_counterexample(capsys, tmp_path):
    code, out, _ = run(capsys, "asian-ct", "counterexample", "--out", tmp_path)
    rep = json.loads(out)
    assert code == EXIT_OK
    assert (rep["price_candidate"], rep["price_constancy"]) == ("41/28", "3/2")


@pytest.mark.parametrize("args, needle", [
    (["bounds", "malformed.json"], "malformed JSON"),
    (["bounds", "does_not_exist.json"], "no such file"),
    (["bounds", "missing_marginals.json"], "marginals: missing"),
    (["bounds", "bad_atom.json"], "marginals[1]"),
    (["bounds", "not_ordered.json"], "marginals[0], marginals[1]"),
    (["bounds", "bad_payoff.json"], "payoff"),
    (["bounds", "bad_direction.json"], "direction"),
    (["structure", "forward_example.json"], "marginals"),
    (["btp-check", "btp_bad_order.json"], "plans[0]"),
    (["btp-check", "btp_missing_node.json"], "plans[0].x_plus"),
    (["btp-check", "forward_example.json"], "plans"),
    (["asian-ct", "one-marginal", "one_marginal_nonconvex.json"], "phi"),
    (["asian-ct", "conjecture", "conjecture_no_strike.json"], "strike"),
    (["verify", "small_abs.json", "forward_example.json"], "certificate.direction"),
])
def test_error_paths(capsys, tmp_path, args, needle):
    argv = [args[0]] + ([args[1]] if args[0] == "asian-ct" else []) + \
        [str(FIX / a) for a in args[(2 if args[0] == "asian-ct" else 1):]]
    code, out, err = run(capsys, *argv, "--out", tmp_path)
    assert code == EXIT_INVALID
    assert needle in err
    assert out == ""


@pytest.mark.parametrize("kwargs", [{"tol": 0}, {"grid": 1}, {"mode": "fast"}, {"command": "plot"}])
def test_config_validation(kwargs):
    base = dict(command="bounds", inputs=["x"])
    base.update(kwargs)
    with pytest.raises(InputError):
        RunConfig(**base)


def test_bad_flag_value(capsys):
    with pytest.raises(SystemExit):
        main(["bounds", "x.json", "--mode", "fast"])


class TestSvg:
    def test_empty_structure_has_axes_only(self):
        svg = emit_support_svg(SupportStructure((), (), 0))
        root = ElementTree.fromstring(svg)
        assert root.get("width") == root.get("height") == "640"
        assert branch_groups(svg) == []
        assert root.find(f".//{SVG_NS}g[@id='axes']") is not None

    def test_identity_is_one_cloud(self):
        c = Coupling(((1, 1), (2, 2), (3, 3)), (F(1, 3),) * 3)
        svg = emit_support_svg(extract_support(c, diag_tol=0))
        assert branch_groups(svg) == ["branch-upper"]

    def test_guides_are_dotted(self):
        svg = emit_support_svg(SupportStructure((), (), 0), PlotBox(-1, 1, -1, 1))
        root = ElementTree.fromstring(svg)
        guides = root.find(f".//{SVG_NS}g[@id='guides']")
        assert guides.get("stroke-dasharray") and len(list(guides)) == 2

    def test_deterministic(self):
        c = Coupling(((0, -1), (0, 1), (1, 1)), (F(1, 4), F(1, 4), F(1, 2)))
        s = extract_support(c, diag_tol=0)
        assert emit_support_svg(s) == emit_support_svg(s)
        assert coupling_csv(s).splitlines()[1] == "0,-1,1/4,lower"
