import numpy as np
import pytest
from scipy.special import jn_zeros

from spindrive.cli import load_config, main, run, validate_config

BASE_SOLVE = """
[model]
n_sites = 2
geometry = dipolar_chain
j_perp = 1.0
j_z = -3.0

[pulse]
shape = cosine
strength = 0.5
subcycle_time = 1.0

[task]
kind = solve
target = ising

[output]
directory = {out}
"""


def write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


class TestValidateConfig:
    def test_valid_config_ok_with_defaults_listed(self, tmp_path):
        cfg = write(tmp_path, BASE_SOLVE.format(out=tmp_path / "out"))
        diag = validate_config(cfg)
        assert diag.ok
        assert any("convention" in d for d in diag.defaults)

    def test_missing_pulse_shape_named(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace("shape = cosine\n", "")
        diag = validate_config(write(tmp_path, text))
        assert not diag.ok
        assert any("shape" in e for e in diag.errors)

    def test_singular_ising_anisotropy_flagged(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace("j_z = -3.0", "j_z = 1.0")
        diag = validate_config(write(tmp_path, text))
        assert not diag.ok
        assert any("singular" in e for e in diag.errors)

    def test_site_cap_flagged_for_validation_runs(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace("n_sites = 2", "n_sites = 14")
        text = text.replace("kind = solve", "kind = validate")
        diag = validate_config(write(tmp_path, text))
        assert not diag.ok
        assert any("cap" in e for e in diag.errors)

    def test_unreadable_file(self, tmp_path):
        diag = validate_config(tmp_path / "missing.ini")
        assert not diag.ok

    def test_acyclic_tabulated_pulse_flagged(self, tmp_path):
        np.savetxt(tmp_path / "pulse.txt", np.column_stack([np.arange(64) / 64, np.ones(64)]))
        text = BASE_SOLVE.format(out=tmp_path / "out").replace(
            "shape = cosine", "shape = tabulated\nshape_file = pulse.txt"
        )
        diag = validate_config(write(tmp_path, text))
        assert not diag.ok
        assert any("cyclicity" in e for e in diag.errors)


class TestSolveTask:
    def test_roots_match_bessel_zeros(self, tmp_path):
        cfg = write(tmp_path, BASE_SOLVE.format(out=tmp_path / "out"))
        assert run(cfg) == 0
        header, rows = read_csv(tmp_path / "out" / "solutions.csv")
        v_col = header.index("v")
        roots = sorted(float(r[v_col]) for r in rows if r[v_col] != "nan")
        # s = -3 makes the condition's right side zero, so the strengths sit
        # at the Bessel zeros over four
        zeros = jn_zeros(0, 5) / 4.0
        positive = [r for r in roots if r > 0]
        for got, want in zip(positive, zeros):
            assert got == pytest.approx(want, abs=1e-9)

    def test_no_roots_exits_three(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace("j_z = -3.0", "j_z = 2.0")
        assert run(write(tmp_path, text)) == 3
        report = (tmp_path / "out" / "report.txt").read_text()
        assert "failure" in report

    def test_sweep_reports_domain_boundary(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out") + "\n[sweep]\nparameter = s\nstart = -4\nstop = 0\nsteps = 41\n"
        assert run(write(tmp_path, text)) == 0
        report = (tmp_path / "out" / "report.txt").read_text()
        assert "largest s with a solution" in report

    def test_schema_error_exits_two(self, tmp_path):
        assert run(write(tmp_path, "[model]\nnonsense")) == 2
        assert run(tmp_path / "does_not_exist.ini") == 2


class TestSurfaceTask:
    def test_csv_covers_requested_orders(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace(
            "kind = solve\ntarget = ising", "kind = surface\np_max_list = 1,8,16,closed\nv_step = 0.05"
        )
        assert run(write(tmp_path, text)) == 0
        header, rows = read_csv(tmp_path / "out" / "surface.csv")
        assert header == ["family", "p_max", "v", "s", "pole"]
        labels = {r[1] for r in rows}
        assert labels == {"1", "8", "16", "closed"}

    def test_deterministic_artifacts(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace(
            "kind = solve\ntarget = ising", "kind = surface\np_max_list = 1,closed\nv_step = 0.05"
        )
        cfg = write(tmp_path, text)
        assert run(cfg) == 0
        first = (tmp_path / "out" / "surface.csv").read_bytes()
        assert run(cfg) == 0
        assert (tmp_path / "out" / "surface.csv").read_bytes() == first


class TestMomentsTask:
    def test_moment_table_written(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace("kind = solve\ntarget = ising", "kind = moments\np_max = 6")
        assert run(write(tmp_path, text)) == 0
        header, rows = read_csv(tmp_path / "out" / "moments.csv")
        assert header == ["p", "moment"]
        assert len(rows) == 6
        # cosine subcycle mean of the squared integral is 1/2; full-cycle halves it
        assert float(rows[0][1]) == pytest.approx(0.25)

    def test_convention_override_flag(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace("kind = solve\ntarget = ising", "kind = moments\np_max = 2")
        cfg = write(tmp_path, text)
        assert main(["run", str(cfg), "--convention", "subcycle"]) == 0
        _, rows = read_csv(tmp_path / "out" / "moments.csv")
        assert float(rows[0][1]) == pytest.approx(0.5)


class TestRepresentTask:
    def test_two_axis_schedule_not_factorizable(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace("kind = solve\ntarget = ising", "kind = represent")
        assert run(write(tmp_path, text)) == 0
        _, rows = read_csv(tmp_path / "out" / "represent.csv")
        assert rows[0][0] == "0"

    def test_single_axis_schedule_factorizable(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace("kind = solve\ntarget = ising", "kind = represent")
        text = text.replace("subcycle_time = 1.0", "subcycle_time = 1.0\naxes = 1")
        assert run(write(tmp_path, text)) == 0
        _, rows = read_csv(tmp_path / "out" / "represent.csv")
        assert rows[0][0] == "1"


class TestValidateTask:
    def test_zero_strength_gives_null_infidelity(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace(
            "kind = solve\ntarget = ising", "kind = validate\nn_cycles = 4"
        ).replace("strength = 0.5", "strength = 0.0")
        assert run(write(tmp_path, text)) == 0
        header, rows = read_csv(tmp_path / "out" / "trajectory.csv")
        infid = [float(r[header.index("infidelity")]) for r in rows]
        assert max(infid) < 1e-10

    def test_cycles_sweep_reports_scaling(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace(
            "kind = solve\ntarget = ising",
            "kind = validate\ntotal_time = 2.0\ninitial_state = plus_x",
        ).replace("n_sites = 2", "n_sites = 3").replace("strength = 0.5", "strength = 0.6012063894239429")
        text += "\n[sweep]\nparameter = cycles\nstart = 8\nstop = 64\nsteps = 4\n"
        assert run(write(tmp_path, text)) == 0
        report = (tmp_path / "out" / "report.txt").read_text()
        assert "log-log slope" in report
        header, rows = read_csv(tmp_path / "out" / "validate_summary.csv")
        assert len(rows) >= 3

    def test_report_echoes_convention(self, tmp_path):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace(
            "kind = solve\ntarget = ising", "kind = validate\nn_cycles = 2"
        )
        assert run(write(tmp_path, text)) == 0
        report = (tmp_path / "out" / "report.txt").read_text()
        assert "averaging window: full_cycle" in report


class TestCommandLine:
    def test_check_command_exits_zero_with_diagnostics(self, tmp_path, capsys):
        text = BASE_SOLVE.format(out=tmp_path / "out").replace("j_z = -3.0", "j_z = 1.0")
        cfg = write(tmp_path, text)
        assert main(["check", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "error" in out and "config has errors" in out

    def test_check_valid_config(self, tmp_path, capsys):
        cfg = write(tmp_path, BASE_SOLVE.format(out=tmp_path / "out"))
        assert main(["check", str(cfg)]) == 0
        assert "config ok" in capsys.readouterr().out

    def test_output_dir_override(self, tmp_path):
        cfg = write(tmp_path, BASE_SOLVE.format(out=tmp_path / "ignored"))
        override = tmp_path / "elsewhere"
        assert main(["run", str(cfg), "--output-dir", str(override)]) == 0
        assert (override / "solutions.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_environment_default_output_dir(self, tmp_path, monkeypatch):
        env_dir = tmp_path / "env_out"
        monkeypatch.setenv("SPINDRIVE_OUTPUT_DIR", str(env_dir))
        text = BASE_SOLVE.format(out=tmp_path / "unused")
        text = text.replace("directory = ", "ignored = ")  # drop the explicit directory
        cfg = write(tmp_path, text)
        assert run(cfg) == 0
        assert (env_dir / "solutions.csv").exists()

    def test_load_config_assembles_model_and_pulse(self, tmp_path):
        cfg, diag = load_config(write(tmp_path, BASE_SOLVE.format(out=tmp_path / "out")))
        assert diag.ok
        assert cfg.model.n_sites == 2
        assert cfg.profile.shape.kind == "cosine"
        assert cfg.task == "solve"
