import csv
import math

import pytest

import main
from sampler import generate_offsets
from src.constants import EXIT_ARGUMENT, EXIT_DATA, EXIT_OK, FORMAT_BASE_OFFSET
from src.data_management import DataManagement


def read_table(path):
    """(metadata, rows as dicts) of a '#'-headed CSV"""
    metadata = {}
    body = []
    with open(path, newline='', encoding='utf-8') as f:
        for line in f:
            if line.startswith('#'):
                key, _, value = line[1:].strip().partition('=')
                metadata[key] = value
            else:
                body.append(line)
    return metadata, list(csv.DictReader(body))


def test_det_command(tmp_path, capsys):
    out = tmp_path / "det.csv"
    code = main.main(["det", "--s", "0.1,0.5", "--xi", "0.6", "--trace", "--out", str(out)])
    assert code == EXIT_OK
    metadata, rows = read_table(out)
    assert metadata['command'] == 'det'
    assert metadata['xi'] == '0.6'
    assert [float(r['s']) for r in rows] == [0.1, 0.5]
    assert all(0.0 < float(r['value']) < 1.0 for r in rows)
    assert 'det_correction' in rows[0]
    assert "det kernel=sine" in capsys.readouterr().out


def test_det_with_config_file(tmp_path):
    out = tmp_path / "det.csv"
    config = tmp_path / "job.cfg"
    config.write_text(f"xi = 0.5\ns = 0.2\nout = {out}\nconditioned = 1\n", encoding="utf-8")
    assert main.main(["det", "--config", str(config), "--xi", "0.8"]) == EXIT_OK
    metadata, rows = read_table(out)
    # explicit flags win over the file
    assert metadata['xi'] == '0.8'
    assert len(rows) == 1 and 'E1' in rows[0]


def test_unknown_config_key(tmp_path):
    config = tmp_path / "job.cfg"
    config.write_text("colour = red\n", encoding="utf-8")
    assert main.main(["det", "--config", str(config), "--out", str(tmp_path / "x.csv")]) == EXIT_ARGUMENT


def test_usage_errors_exit_with_argument_code(tmp_path):
    assert main.main(["det"]) == EXIT_ARGUMENT
    assert main.main(["det", "--xi", "1.5", "--out", str(tmp_path / "x.csv")]) == EXIT_ARGUMENT
    assert main.main(["det", "--kernel", "finite", "--out", str(tmp_path / "x.csv")]) == EXIT_ARGUMENT
    assert main.main(["zeros", "thin", "--input", "p.csv", "--xi", "0.5", "--seed", "-3",
                      "--out", "q.csv"]) == EXIT_ARGUMENT


def test_missing_input_exits_with_data_code(tmp_path):
    code = main.main(["zeros", "unfold", "--input", str(tmp_path / "absent.txt"), "--out", str(tmp_path / "p.csv")])
    assert code == EXIT_DATA


def test_solve_command_round_trip(tmp_path):
    out = tmp_path / "sigma0.json"
    code = main.main(["solve", "sigma0", "--xi", "0.6", "--s-max", "5", "--out", str(out)])
    assert code == EXIT_OK
    solution = DataManagement().read_solution(str(out))
    assert solution.xi.xi == 0.6
    assert solution.s_max == pytest.approx(5.0)
    metadata, rows = read_table(tmp_path / "sigma0.csv")
    assert metadata['kind'] == 'sigma0'
    assert float(rows[0]['value']) == 0.0
    assert len(rows) == 51


def test_spacing_command_both_paths(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    table = tmp_path / "discrepancy.csv"
    code = main.main(["spacing", "--xi", "0.6", "--grid-max", "1", "--grid-step", "0.1",
                      "--out", str(out), "--discrepancy-out", str(table)])
    assert code == EXIT_OK
    curve = DataManagement().read_curve(str(out))
    assert curve.grid.size == 11
    assert float(curve.metadata['max_discrepancy']) < 1e-5
    _, rows = read_table(table)
    assert len(rows) == 11
    assert "max_discrepancy" in capsys.readouterr().out


def test_zeros_pipeline_on_poisson_control(tmp_path):
    base = 10 ** 12
    heights = tmp_path / "heights.txt"
    DataManagement().write_zeros(str(heights), base, generate_offsets("poisson", 100_000, base, seed=5),
                                 FORMAT_BASE_OFFSET)
    points = tmp_path / "points.csv"
    thinned = tmp_path / "thinned.csv"
    hist = tmp_path / "hist.csv"
    residuals = tmp_path / "residuals.csv"

    assert main.main(["zeros", "unfold", "--input", str(heights), "--format", FORMAT_BASE_OFFSET,
                      "--chunk-size", "30000", "--out", str(points)]) == EXIT_OK
    assert main.main(["zeros", "thin", "--input", str(points), "--xi", "0.6", "--seed", "99",
                      "--chunk-size", "30000", "--out", str(thinned)]) == EXIT_OK
    assert main.main(["zeros", "twopoint", "--input", str(thinned), "--rescale", "--bin-width", "0.5",
                      "--out", str(hist)]) == EXIT_OK
    assert main.main(["zeros", "compare", "--input", str(hist), "--theory", "poisson",
                      "--out", str(residuals)]) == EXIT_OK

    metadata, rows = read_table(residuals)
    assert metadata['statistic'] == 'twopoint'
    assert float(metadata['xi']) == pytest.approx(0.6)
    assert float(metadata['max_scaled_residual']) < 4.5
    assert len(rows) == 20


def test_thinning_command_is_deterministic(tmp_path):
    dm = DataManagement()
    points = tmp_path / "points.csv"
    dm.write_points(str(points), [generate_offsets("lattice", 5000, 10 ** 8)], {'rho_bar': 1.0})
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out, chunk in ((first, "1000"), (second, "777")):
        assert main.main(["zeros", "thin", "--input", str(points), "--xi", "0.3", "--seed", "12345",
                          "--chunk-size", chunk, "--out", str(out)]) == EXIT_OK
    assert (dm.read_points(str(first)).points == dm.read_points(str(second)).points).all()


def test_det_conditioned_column(tmp_path):
    out = tmp_path / "det.csv"
    assert main.main(["det", "--s", "0.5,1.0", "--conditioned", "0", "--out", str(out)]) == EXIT_OK
    _, rows = read_table(out)
    for row in rows:
        assert float(row['E0']) == pytest.approx(float(row['value']), abs=1e-14)


def test_extrapolate_command(tmp_path, capsys):
    out = tmp_path / "extrapolate.csv"
    code = main.main(["extrapolate", "--s", "0.5", "--n-from", "40", "--n-to", "60", "--count", "4",
                      "--out", str(out)])
    assert code == EXIT_OK
    metadata, rows = read_table(out)
    assert metadata['n_values'] == "40,47,53,60"
    assert 0.5 < float(rows[0]['limit']) < 0.7
    assert float(rows[0]['painleve_leading']) == pytest.approx(float(rows[0]['limit']), abs=1e-3)
    assert math.isfinite(float(rows[0]['painleve_correction']))
    assert float(metadata['max_leading_diff']) < 1e-3
    assert "extrapolate xi=1.0" in capsys.readouterr().out


def test_extrapolate_rejects_too_few_n_values(tmp_path):
    out = tmp_path / "extrapolate.csv"
    assert main.main(["extrapolate", "--count", "2", "--out", str(out)]) == EXIT_ARGUMENT


def test_nnspacing_on_poisson_control(tmp_path):
    dm = DataManagement()
    offsets = generate_offsets("poisson", 50_000, 10 ** 8, seed=21)
    points = tmp_path / "points.csv"
    dm.write_points(str(points), [offsets * (offsets.size / offsets[-1])], {'rho_bar': 1.0})
    hist = tmp_path / "nn.csv"
    residuals = tmp_path / "residuals.csv"
    assert main.main(["zeros", "nnspacing", "--input", str(points), "--bin-width", "0.25",
                      "--s-max", "4", "--out", str(hist)]) == EXIT_OK
    assert main.main(["zeros", "compare", "--input", str(hist), "--theory", "poisson",
                      "--out", str(residuals)]) == EXIT_OK
    metadata, rows = read_table(residuals)
    assert metadata['statistic'] == 'nnspacing'
    assert len(rows) == 16
    assert float(metadata['max_scaled_residual']) < 4.5
