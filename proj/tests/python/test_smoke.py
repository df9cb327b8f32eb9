import math
import os
import subprocess
from pathlib import Path

import pytest

import swarmot

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_point_masses_distance():
    a = swarmot.Density.point((0.0, 1.0), 0.2)
    b = swarmot.Density.point((0.0, 1.0), 0.7)
    assert swarmot.wasserstein2(a, b) == pytest.approx(0.5, abs=1e-15)
    assert swarmot.squared_wasserstein2(a, b) == pytest.approx(0.25, abs=1e-15)


def test_atom_against_uniform_matches_plan_cost():
    a = swarmot.Density.point((0.0, 1.0), 0.0)
    u = swarmot.Density.uniform((0.0, 1.0))
    assert swarmot.squared_wasserstein2(a, u) == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert swarmot.plan_cost(a, u) == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_quantile_and_partition():
    r = swarmot.Density((0.0, 2.0), atoms=[(0.5, 0.25), (1.5, 0.75)])
    q = swarmot.quantile_of(r)
    assert q(0.1) == 0.5
    assert q(0.9) == 1.5
    cells = swarmot.partition_cells(r)
    assert [c[2] for c in cells] == [0.5, 1.5]
    avg = swarmot.averaged_density(swarmot.Density.uniform((0.0, 2.0)), r)
    # Uniform on [0, 2]: cell means 0.25 and 1.25.
    assert [round(x, 12) for x, _ in avg.atoms] == [0.25, 1.25]


def test_bad_density_raises_value_error():
    with pytest.raises(ValueError):
        swarmot.Density((0.0, 1.0), atoms=[(0.5, 0.3)])
    assert issubclass(swarmot.InvalidInput, ValueError)


def test_scalar_static_closed_form():
    alpha, horizon = 2.0, 10.0
    assert swarmot.riccati(alpha, horizon, 0.0) == pytest.approx(alpha * math.tanh(horizon / alpha), abs=1e-15)
    s = swarmot.solve_scalar(alpha, horizon, 0.3, [1.8] * 1001)
    assert s.cost == pytest.approx(1.5**2 * alpha * math.tanh(horizon / alpha), rel=1e-10)
    assert s.r[-1] == pytest.approx(0.3 + 1.5 * (1 - 1 / math.cosh(horizon / alpha)), abs=1e-12)


def test_static_config_solve():
    text = (CONFIGS / "static_bimodal.cfg").read_text()
    sol = swarmot.solve_config(text, "static")
    assert sol.predicted_cost > sol.K > 0
    assert sol.realized_cost == pytest.approx(sol.predicted_cost, rel=1e-2)
    rows = sol.atom_positions()
    assert len(rows) == len(sol.times)
    assert all(row[i] < row[i + 1] for row in rows for i in range(len(row) - 1))


def test_periodic_gain():
    text = (CONFIGS / "periodic_mixture.cfg").read_text()
    sol = swarmot.solve_config(text, "periodic", simulate=False)
    for _, _, omega, _, _, gain in sol.frequency_table:
        assert gain == pytest.approx(1.0 / (sol.alpha**2 * omega**2 + 1.0), abs=1e-12)


def test_run_reports_exit_codes(tmp_path):
    code, _, err = swarmot.run("solve-static", "alpha = -1\n")
    assert code == 2 and "alpha" in err
    text = (CONFIGS / "static_bimodal.cfg").read_text() + f"\noutput_dir = {tmp_path}\n"
    text = text.replace("output_dir = out/static_bimodal\n", "")
    code, _, err = swarmot.run("solve-static", text)
    assert code == 0, err
    assert (tmp_path / "summary.txt").exists()


@pytest.mark.skipif("SWARMOT_TOOL" not in os.environ, reason="tool path not provided")
def test_tool_binary(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text((CONFIGS / "static_bimodal.cfg").read_text())
    out = subprocess.run([os.environ["SWARMOT_TOOL"], "solve-static", "--config", str(cfg), "--out", str(tmp_path / "o")],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "o" / "summary.txt").exists()
