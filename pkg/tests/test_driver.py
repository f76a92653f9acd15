import json
import math
import re

import numpy as np
import pytest
import yaml

from densify import cli
from densify.driver import (COLUMN_NAMES, Scenario, iterate_scenario, load_scenario,
                            parse_text, run_scenario, scenario_from_mapping, schema_path,
                            yield_section)
from densify.errors import ParameterError, ScenarioParseError, ScenarioRunError
from densify.yield_surface import lode_g

from conftest import PC0, SMOKE

# compact two-leg program: compaction past pcb, then partial unloading
SHORT_PATH = [
    {"type": "isostatic", "target": {"p": 1.0}, "steps": 12},
    {"type": "isostatic", "target": {"p": 0.6}, "steps": 4},
]


def mapping(material=None, path=None, **extra):
    return {"name": "test", "units": "MPa", "material": dict(material or SMOKE),
            "initial": {"pc0": PC0}, "path": path or SHORT_PATH, **extra}


def write_yaml(tmp_path, data, name="scenario.yaml"):
    f = tmp_path / name
    f.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
    return f


@pytest.fixture(scope="module")
def short_run():
    scenario = scenario_from_mapping(mapping())
    return scenario, run_scenario(scenario)


def csv_rows(text):
    lines = text.split("\r\n")
    assert lines[-1] == ""
    header = [h.strip() for h in lines[0].split(",")]
    rows = [dict(zip(header, (c.strip() for c in ln.split(",")))) for ln in lines[1:-1]]
    return lines[:-1], header, rows


class TestLoad:
    def test_minimal(self, tmp_path):
        data = mapping(path=[{"type": "isostatic", "target": {"p": 2.0}, "steps": 10}])
        s = load_scenario(write_yaml(tmp_path, data))
        assert isinstance(s, Scenario) and len(s.legs) == 1
        assert s.legs[0].target == 2.0 and s.pc0 == PC0 and s.params.n == 2.0

    def test_smoke_file(self):
        s = load_scenario("scenarios/smoke.yaml")
        assert [leg.type for leg in s.legs] == ["isostatic", "isostatic"]

    def test_exponent_notation(self):
        text = yaml.safe_dump(mapping()).replace("steps: 12", "steps: 12\n  max_substep: 1e-4")
        data = parse_text(text)
        assert data["path"][0]["max_substep"] == "1e-4"  # YAML 1.1 wants a dot
        assert scenario_from_mapping(data).legs[0].max_substep == 1e-4

    def test_compaction_domain(self):
        with pytest.raises(ParameterError, match=r"a1 \+ a2 must be < 1"):
            scenario_from_mapping(mapping({**SMOKE, "a1": 0.7, "a2": 0.4}))

    def test_missing_exponent(self):
        material = {k: v for k, v in SMOKE.items() if k != "n"}
        with pytest.raises(ParameterError, match="elastic exponent n required"):
            scenario_from_mapping(mapping(material))

    def test_all_problems_listed(self):
        material = {**SMOKE, "gamma": 1.5, "M": -1.0}
        del material["n"]
        bad = mapping(material, path=[{"type": "shear", "steps": 0}], units="kPa")
        with pytest.raises(ParameterError) as exc:
            scenario_from_mapping(bad)
        v = exc.value.violations
        assert len(v) >= 6
        for key in ("units", "gamma", "M must be positive", "elastic exponent n",
                    "path[0].type", "path[0].steps"):
            assert any(key in line for line in v), key

    def test_initial_outside_surface(self):
        with pytest.raises(ParameterError, match="outside the yield surface"):
            scenario_from_mapping({**mapping(), "initial": {"pc0": 0.05}})

    def test_parse_error_position(self):
        with pytest.raises(ScenarioParseError) as exc:
            parse_text("material:\n  kappa: [0.02\nname: x\n")
        assert exc.value.line is not None and "line" in str(exc.value)

    def test_not_a_mapping(self):
        with pytest.raises(ScenarioParseError):
            parse_text("- 1\n- 2\n")


class TestRun:
    def test_csv_layout(self, short_run):
        _, summary = short_run
        lines, header, rows = csv_rows(summary.text)
        assert header == list(COLUMN_NAMES)
        assert len(rows) == summary.rows_written == 17
        widths = {len(ln) for ln in lines}
        assert len(widths) == 1
        cell_widths = [tuple(len(c) for c in ln.split(",")) for ln in lines]
        assert len(set(cell_widths)) == 1
        assert sum(ln.startswith("step") for ln in lines) == 1
        assert "nan" not in summary.text.lower() and "inf" not in summary.text.lower()
        assert rows[0]["step"] == "0" and rows[0]["mode"] == "elastic"

    def test_compaction_then_unloading(self, short_run):
        _, summary = short_run
        _, _, rows = csv_rows(summary.text)
        pc = np.array([float(r["pc"]) for r in rows])
        lam = np.array([float(r["Lambda"]) for r in rows])
        modes = [r["mode"] for r in rows]
        load, unload = slice(1, 13), slice(13, 17)
        # on the hydrostatic cap vertex p_c tracks the applied pressure
        assert np.all(np.diff(pc[:13]) > 0.0) and pc[12] == pytest.approx(1.0, rel=1e-6)
        assert "plastic" in modes[load]
        assert all(m == "elastic" for m in modes[unload])
        assert np.all(lam[13:] == lam[12])
        assert float(rows[-1]["p"]) == pytest.approx(0.6, rel=1e-8)

    def test_deterministic(self, tmp_path):
        scenario = scenario_from_mapping(mapping(path=SHORT_PATH[:1]))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_scenario(scenario, out=a)
        run_scenario(scenario, out=b)
        assert a.read_bytes() == b.read_bytes()

    def test_schema_written(self, tmp_path):
        scenario = scenario_from_mapping(mapping(path=[SHORT_PATH[0] | {"steps": 2}]))
        out = tmp_path / "h.csv"
        run_scenario(scenario, out=out)
        schema = json.loads(open(schema_path(out)).read())
        assert [c["name"] for c in schema["columns"]] == list(COLUMN_NAMES)
        assert {c["unit"] for c in schema["columns"] if c["name"].startswith("T_")} == {"MPa"}

    def test_stride_and_columns(self):
        data = mapping(path=[{"type": "isostatic", "target": {"p": 0.09}, "steps": 7}],
                       output={"columns": ["p", "step", "mode"], "stride": 3})
        summary = run_scenario(scenario_from_mapping(data))
        _, header, rows = csv_rows(summary.text)
        assert header == ["step", "p", "mode"]
        assert [int(r["step"]) for r in rows] == [0, 3, 6, 7]

    def test_other_legs(self):
        path = [{"type": "oedometric", "target": {"E_zz": -0.01}, "steps": 5},
                {"type": "triaxial", "target": {"E_zz": -0.015}, "steps": 3},
                {"type": "custom-strain", "target": {"E1": [-0.004, -0.004, -0.016,
                                                             0.0, 0.0, 0.001]}, "steps": 3}]
        rows = list(iterate_scenario(scenario_from_mapping(mapping(path=path))))
        assert rows[5].E1[0, 0] == 0.0 and rows[5].E1[2, 2] == pytest.approx(-0.01)
        lateral = rows[5].T1[0, 0]
        for r in rows[6:9]:
            assert r.T1[0, 0] == pytest.approx(lateral, abs=1e-8 * 1.1 * r.pc)
        assert rows[-1].E1[0, 1] == pytest.approx(0.001)
        assert all(math.isfinite(r.F) for r in rows)

    def test_integrator_failure_reports_step(self):
        material = {**SMOKE, "c_inf": 1.5, "kappa": 0.04}
        scenario = scenario_from_mapping(mapping(material, path=[SHORT_PATH[0]]))
        with pytest.raises(ScenarioRunError) as exc:
            run_scenario(scenario)
        assert exc.value.step >= 1 and exc.value.leg == 1
        assert "step" in str(exc.value) and "pc=" in str(exc.value)


class TestYieldSection:
    @pytest.fixture
    def scenario(self):
        return scenario_from_mapping(mapping())

    def test_meridian_vertices(self, scenario):
        pts = yield_section(scenario, "meridian", 0.0, 51, pc=3.0)
        assert pts[0].q == 0.0 and pts[-1].q == 0.0
        assert pts[-1].p == 3.0
        assert all(abs(s.residual) <= 1e-10 * SMOKE["M"] * 3.0 for s in pts)
        assert all(s.q > 0.0 for s in pts[1:-1])

    def test_circular_deviatoric_section(self):
        scenario = scenario_from_mapping(mapping({**SMOKE, "beta": 1.0, "gamma": 0.0}))
        pts = yield_section(scenario, "deviatoric", 1.0, 73, pc=3.0)
        q = np.array([s.q for s in pts])
        assert np.ptp(q) <= 1e-9 * q.mean()

    def test_deviatoric_shape_follows_g(self, scenario):
        params = scenario.params
        pts = yield_section(scenario, "deviatoric", 1.0, 37, pc=3.0)
        for s in pts:
            th = math.acos(max(-1.0, min(1.0, math.cos(3 * s.theta)))) / 3
            ref = pts[0].q * lode_g(th, params) / lode_g(0.0, params)
            assert s.q == pytest.approx(ref, rel=1e-8)

    def test_peak_moves_toward_pc_as_alpha_vanishes(self):
        peaks = []
        for alpha in (1.5, 1.0, 0.5, 0.1, 0.01):
            scenario = scenario_from_mapping(mapping({**SMOKE, "alpha": alpha}))
            pts = yield_section(scenario, "meridian", 0.5, 401, pc=3.0)
            peaks.append(max(pts, key=lambda s: s.q).p)
        assert np.all(np.diff(peaks) > 0.0)

    def test_bad_plane_values(self, scenario):
        with pytest.raises(ParameterError):
            yield_section(scenario, "meridian", 2.0)
        with pytest.raises(ParameterError):
            yield_section(scenario, "deviatoric", 50.0)


def run_cli(argv, capsys):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


class TestCli:
    def test_check(self, tmp_path, capsys):
        code, out = run_cli(["check", write_yaml(tmp_path, mapping())], capsys)
        assert code == 0 and out.out.startswith("ok:")

    def test_run(self, tmp_path, capsys):
        f = write_yaml(tmp_path, mapping(path=[SHORT_PATH[0] | {"steps": 3}]))
        out = tmp_path / "r.csv"
        code, _ = run_cli(["run", f, "--out", out, "--stride", 2], capsys)
        assert code == 0 and out.exists() and schema_path(out).endswith(".schema.json")
        assert len(out.read_text().splitlines()) == 4  # header, steps 0, 2 and 3

    def test_yield_section(self, tmp_path, capsys):
        f = write_yaml(tmp_path, mapping())
        code, out = run_cli(["yield-section", f, "--plane", "meridian", "--at", 0.3,
                             "--resolution", 11, "--pc", 2.0], capsys)
        assert code == 0 and len(out.out.splitlines()) == 12

    @pytest.mark.parametrize("text, code, kind", [
        ("material: [1,\n", 2, "parse"),
        (yaml.safe_dump({**mapping(), "material": {k: v for k, v in SMOKE.items() if k != "n"}}),
         3, "validation"),
    ])
    def test_error_codes(self, tmp_path, capsys, text, code, kind):
        f = tmp_path / "bad.yaml"
        f.write_text(text)
        rc, out = run_cli(["check", f], capsys)
        assert rc == code
        lines = out.err.strip().splitlines()
        assert len(lines) == 1 and lines[0].startswith(f"error[{kind}]: ")

    def test_parse_error_has_position(self, tmp_path, capsys):
        f = tmp_path / "bad.yaml"
        f.write_text("name: x\nmaterial: [1,\n")
        _, out = run_cli(["check", f], capsys)
        assert re.search(r"line \d+, column \d+", out.err)

    def test_missing_file(self, tmp_path, capsys):
        rc, out = run_cli(["check", tmp_path / "nope.yaml"], capsys)
        assert rc == 5 and out.err.startswith("error[io]: ")

    def test_unwritable_output(self, tmp_path, capsys):
        f = write_yaml(tmp_path, mapping(path=[SHORT_PATH[0] | {"steps": 1}]))
        rc, out = run_cli(["run", f, "--out", tmp_path / "no" / "dir.csv"], capsys)
        assert rc == 5 and out.err.startswith("error[io]: ")

    def test_integrator_failure(self, tmp_path, capsys):
        material = {**SMOKE, "c_inf": 1.5, "kappa": 0.04}
        f = write_yaml(tmp_path, mapping(material, path=[SHORT_PATH[0]]))
        rc, out = run_cli(["run", f, "--out", tmp_path / "x.csv"], capsys)
        assert rc == 4 and out.err.startswith("error[integrator]: step ")
        assert len(out.err.strip().splitlines()) == 1
