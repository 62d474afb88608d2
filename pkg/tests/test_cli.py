import json

import jsonschema
import pytest

from causalatom.cli import main, resolve_preset
from causalatom.observables import hydrogen_1s2p_preset


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def schema():
    from importlib import resources
    ref = resources.files("causalatom").joinpath("schema/result.schema.json")
    return json.loads(ref.read_text())


class TestPresets:
    def test_builtin_matches_computed(self):
        a = resolve_preset("hydrogen-1s2p")
        b = hydrogen_1s2p_preset()
        assert a.m_g == pytest.approx(b.m_g, rel=1e-14)
        assert a.omega_eg == pytest.approx(b.omega_eg, rel=1e-14)
        assert a.d_eg_abs == pytest.approx(b.d_eg_abs, rel=1e-14)

    def test_synthetic(self):
        a = resolve_preset("synthetic:1e-2")
        assert a.delta_u == pytest.approx(1e-2, rel=1e-12)

    def test_unknown_preset(self):
        from causalatom.errors import PresetError
        with pytest.raises(PresetError):
            resolve_preset("no-such-atom")


class TestRatioCommand:
    def test_json_fields(self, capsys, schema):
        code, out, err = run_cli(capsys, "ratio", "--preset", "hydrogen-1s2p",
                                 "--format", "json")
        assert code == 0
        doc = json.loads(out)
        jsonschema.validate(doc, schema)
        assert doc["results"]["ratio_magnitude"] == pytest.approx(0.0551, abs=5e-4)
        assert doc["results"]["ratio_signed"] < 0
        assert set(doc["metadata"]["notes"]) == {"c_ordering",
                                                 "gamma_denominator_power",
                                                 "ratio_sign"}

    def test_byte_determinism(self, capsys):
        _, out1, _ = run_cli(capsys, "ratio", "--format", "json")
        _, out2, _ = run_cli(capsys, "ratio", "--format", "json")
        assert out1 == out2


class TestGammaCommand:
    def test_value(self, capsys, schema):
        code, out, _ = run_cli(capsys, "gamma")
        assert code == 0
        doc = json.loads(out)
        jsonschema.validate(doc, schema)
        assert doc["results"]["gamma_leading_per_s"] == pytest.approx(6.26e8, rel=0.01)
        assert doc["results"]["ratio_exact_to_leading_minus_one"] < 0

    def test_csv_format(self, capsys):
        code, out, _ = run_cli(capsys, "gamma", "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 2
        header = lines[0].split(",")
        values = lines[1].split(",")
        assert "gamma_leading_per_s" in header
        idx = header.index("gamma_leading_per_s")
        assert float(values[idx]) == pytest.approx(6.26e8, rel=0.01)

    def test_round_trip_preset(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "gamma")
        doc = json.loads(out)
        preset_file = tmp_path / "atom.json"
        preset_file.write_text(json.dumps(doc["inputs"]["atom"]))
        code2, out2, _ = run_cli(capsys, "gamma", "--preset", str(preset_file))
        assert code2 == 0
        doc2 = json.loads(out2)
        assert doc2["results"] == doc["results"]


class TestShiftCommand:
    def test_solved_constants_and_values(self, capsys, schema):
        code, out, _ = run_cli(capsys, "shift")
        assert code == 0
        doc = json.loads(out)
        jsonschema.validate(doc, schema)
        res = doc["results"]
        assert res["solved_normalization"]["c0"] == pytest.approx(-3.5, abs=1e-10)
        assert res["solved_normalization"]["c1"] == pytest.approx(8.0, abs=1e-10)
        assert res["solved_normalization"]["c2"] == pytest.approx(-29 / 6, abs=1e-10)
        assert res["series_with_solved_c"]["c3"] == pytest.approx(-24.0, abs=1e-8)
        assert res["delta_final_per_s"] == pytest.approx(3.4165e9, rel=1e-4)
        assert res["log_bracket"] == pytest.approx(-34.289, rel=1e-4)


class TestSplitCheckCommand:
    def test_csv_row_count_and_tolerance(self, capsys):
        # the 50-point grid on [1.05, 5]
        code, out, _ = run_cli(capsys, "split-check", "--u-min", "1.05",
                               "--u-max", "5", "--points", "50",
                               "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "u,re_closed,im_closed,re_numeric,im_numeric,im_rel_err"
        assert len(lines) == 1 + 50
        for line in lines[1:]:
            assert float(line.split(",")[-1]) <= 1e-8

    def test_json_carries_real_fit(self, capsys, schema):
        code, out, _ = run_cli(capsys, "split-check", "--points", "6")
        doc = json.loads(out)
        jsonschema.validate(doc, schema)
        assert doc["results"]["max_im_rel_err"] <= 1e-8
        ext = doc["results"]["real_difference_fit_extended"]
        assert ext["max_abs_deviation_bracket_units"] < 1e-6
        assert "real_agreement_status" in doc["results"]


class TestSeriesCheckCommand:
    def test_agreement(self, capsys, schema):
        code, out, _ = run_cli(capsys, "series-check", "--c0", "1.5",
                               "--c1", "-2.0", "--c2", "0.5")
        assert code == 0
        doc = json.loads(out)
        jsonschema.validate(doc, schema)
        assert doc["results"]["max_rel_error"] < 1e-6
        assert doc["results"]["analytic"]["c_log3"] == -48.0


class TestWavepacketCommand:
    def test_csv_columns(self, capsys):
        code, out, _ = run_cli(capsys, "wavepacket-check", "--preset",
                               "synthetic:1e-2", "--plateau-periods", "10", "100",
                               "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "t_g,rel_error,regime_flag"
        assert len(lines) == 3
        assert lines[1].endswith("ok")

    def test_monotone_field(self, capsys, schema):
        code, out, _ = run_cli(capsys, "wavepacket-check", "--preset",
                               "synthetic:1e-2", "--plateau-periods", "10", "100",
                               "1000")
        doc = json.loads(out)
        jsonschema.validate(doc, schema)
        assert doc["results"]["monotone"] is True


class TestWWSimCommand:
    def test_trace_and_summary(self, capsys, tmp_path):
        trace_path = tmp_path / "trace.csv"
        code, out, err = run_cli(capsys, "ww-sim", "--n-modes", "1200",
                                 "--bandwidth-gammas", "60", "--out",
                                 str(trace_path))
        assert code == 0
        doc = json.loads(out)
        assert doc["results"]["rate_over_gamma_leading"] == pytest.approx(1.0, abs=0.02)
        assert doc["results"]["norm_drift"] <= 1e-6
        assert doc["metadata"]["ww_backend"] in ("numba", "numpy")
        lines = trace_path.read_text().strip().splitlines()
        assert lines[0] == "t,population,re_c_e,im_c_e"
        assert len(lines) > 100

    def test_stdout_mode_keeps_summary_on_stderr(self, capsys):
        code, out, err = run_cli(capsys, "ww-sim", "--n-modes", "1000",
                                 "--bandwidth-gammas", "50")
        assert code == 0
        assert out.startswith("t,population")
        doc = json.loads(err)
        assert "rate_per_s" in doc["results"]


class TestErrorPaths:
    def test_unknown_command_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["no-such-command"])
        assert exc.value.code == 2

    def test_unknown_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["gamma", "--frobnicate"])
        assert exc.value.code == 2

    def test_bad_preset_file_exits_one(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"m_g_kg": 1e-27, "mystery": 3}')
        code, out, err = run_cli(capsys, "gamma", "--preset", str(bad))
        assert code == 1
        diag = json.loads(err)
        assert diag["error"] == "PresetError"

    def test_unknown_preset_name_exits_one(self, capsys):
        code, out, err = run_cli(capsys, "gamma", "--preset", "unobtainium")
        assert code == 1
        assert json.loads(err)["error"] == "PresetError"

    def test_unwritable_output_exits_one(self, capsys):
        code, out, err = run_cli(capsys, "gamma", "--out",
                                 "/no/such/directory/out.json")
        assert code == 1


class TestFloatFormatting:
    def test_seventeen_digit_round_trip(self, capsys):
        code, out, _ = run_cli(capsys, "constants")
        doc = json.loads(out)
        assert doc["results"]["hbar_J_s"] == 1.054571817e-34
        assert doc["results"]["alpha_consistency_rel"] < 1e-6
        assert doc["results"]["c_m_s"] == 299792458.0
