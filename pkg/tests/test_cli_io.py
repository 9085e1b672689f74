import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robust_ecf.cli_io import (
    EXIT_INVALID,
    EXIT_NUMERIC,
    EXIT_OK,
    FIDELITY_NOTES,
    RunReport,
    fmt,
    ingest_csv,
    load_scenario,
    main,
    parse_expression,
    parse_scenario,
    to_long,
    write_long_csv,
)
from robust_ecf.errors import ConfigError, InsufficientData, ParseError, SchemaError, TooFewGroups
from robust_ecf.simulation import ScenarioConfig, generate


def write(path, text):
    path.write_text(text)
    return path


def sim_csv(path, model="M2", seed=4, sizes=(60, 60), dup=False):
    s = generate(ScenarioConfig(model=model, sizes=sizes, seed=seed), 0)
    if dup:
        s = [s[0], s[0]]
    labels = ["a", "b"]
    with open(path, "w", newline="") as fh:
        write_long_csv(fh, [labels[j] for j, v in enumerate(s) for _ in range(v.n)],
                       np.concatenate([v.x for v in s]), np.concatenate([v.y for v in s]))
    return path


class TestIngest:
    def test_small_fixture(self, tmp_path):
        p = write(tmp_path / "d.csv", "group,x,y\na,0.1,1\nb,0.2,2\na,0.3,3\nb,0.4,4\n")
        ds = ingest_csv(p)
        assert ds.groups == ["a", "b"]
        assert ds.counts() == {"a": 2, "b": 2}

    def test_first_appearance_order(self, tmp_path):
        p = write(tmp_path / "d.csv", "x,y,group\n0.1,1,zeta\n0.2,2,alpha\n")
        assert ingest_csv(p).groups == ["zeta", "alpha"]

    def test_bad_number_line(self, tmp_path):
        p = write(tmp_path / "d.csv", "group,x,y\na,0.1,1\nb,0.2,oops\n")
        with pytest.raises(ParseError) as err:
            ingest_csv(p)
        assert err.value.line == 3

    def test_non_finite_rejected(self, tmp_path):
        p = write(tmp_path / "d.csv", "group,x,y\na,0.1,1\nb,inf,2\n")
        with pytest.raises(ParseError) as err:
            ingest_csv(p)
        assert err.value.line == 3

    def test_single_group(self, tmp_path):
        p = write(tmp_path / "d.csv", "group,x,y\na,0.1,1\na,0.2,2\n")
        with pytest.raises(TooFewGroups):
            ingest_csv(p)

    def test_missing_column(self, tmp_path):
        p = write(tmp_path / "d.csv", "group,x,response\na,0.1,1\n")
        with pytest.raises(SchemaError):
            ingest_csv(p)

    def test_custom_columns(self, tmp_path):
        p = write(tmp_path / "d.csv", "site,t,v\na,0.1,1\nb,0.2,2\n")
        assert ingest_csv(p, "site", "t", "v").groups == ["a", "b"]

    def test_too_few_rows_for_test(self, tmp_path):
        p = write(tmp_path / "d.csv", "group,x,y\na,0.1,1\nb,0.2,2\n")
        with pytest.raises(InsufficientData):
            ingest_csv(p).check_testable()


class TestToLong:
    def test_wide(self, tmp_path):
        p = write(tmp_path / "w.csv", "x_a,y_a,x_b,y_b\n0.1,1,0.5,2\n0.2,3,,\n")
        assert to_long([p]) == [("a", 0.1, 1.0), ("b", 0.5, 2.0), ("a", 0.2, 3.0)]

    def test_multi_file(self, tmp_path):
        a = write(tmp_path / "north.csv", "x,y\n0.1,1\n")
        b = write(tmp_path / "south.csv", "x,y\n0.2,2\n")
        assert to_long([a, b]) == [("north", 0.1, 1.0), ("south", 0.2, 2.0)]

    def test_cli_round_trip(self, tmp_path):
        a = write(tmp_path / "a.csv", "x,y\n0.1,1.5\n")
        b = write(tmp_path / "b.csv", "x,y\n0.2,2.5\n")
        out = tmp_path / "long.csv"
        assert main(["to-long", str(a), str(b), "-o", str(out)]) == EXIT_OK
        ds = ingest_csv(out)
        assert ds.groups == ["a", "b"] and list(ds.y) == [1.5, 2.5]


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(v):
    assert float(fmt(v)) == v


class TestExpressions:
    def test_matches_numpy(self):
        f = parse_expression("exp(x) + 0.5 * x - sin(2 * pi * x) ** 2")
        x = np.linspace(0, 1, 11)
        np.testing.assert_allclose(f(x), np.exp(x) + 0.5 * x - np.sin(2 * np.pi * x) ** 2)

    def test_constant_broadcasts(self):
        assert parse_expression("1")(np.zeros(3)).shape == (3,)

    @pytest.mark.parametrize("text", ["__import__('os')", "x.real", "open('f')", "[x]", "x +"])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_expression(text)


class TestScenario:
    base = {"schema_version": 1, "replications": 3, "bandwidth": 0.3, "n_draws": 200}

    def test_product(self):
        sf = parse_scenario({**self.base, "models": ["M1", "M2"],
                             "contaminations": ["C0", "C4"], "sizes": [[50, 50], [60, 70]]})
        assert len(sf.scenarios) == 8

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as err:
            parse_scenario({**self.base, "replicatons": 5})
        assert err.value.field == "replicatons"

    def test_version_required(self):
        with pytest.raises(ConfigError) as err:
            parse_scenario({"models": "M1"})
        assert err.value.field == "schema_version"

    def test_field_paths(self):
        with pytest.raises(ConfigError) as err:
            parse_scenario({**self.base, "models": ["M1", "M9"]})
        assert err.value.field == "models[1]"
        with pytest.raises(ConfigError) as err:
            parse_scenario({**self.base, "sizes": [10, 10]})
        assert err.value.field == "sizes"

    def test_custom_regressions(self):
        sf = parse_scenario({**self.base, "regressions": ["x", "x + 0.5 * x"]})
        sc = sf.scenarios[0]
        assert sc.model == "custom"
        np.testing.assert_allclose(sc.regression(1)(np.array([2.0])), [3.0])

    def test_json_line_number(self, tmp_path):
        p = write(tmp_path / "s.json", '{\n"schema_version": 1,\n"models": [M1]\n}\n')
        with pytest.raises(ParseError) as err:
            load_scenario(p)
        assert err.value.line == 3


@pytest.fixture(scope="module")
def m2_csv(tmp_path_factory):
    return sim_csv(tmp_path_factory.mktemp("data") / "m2.csv")


class TestCommands:
    def test_test_both(self, m2_csv, tmp_path, capsys):
        code = main(["test", str(m2_csv), "--method", "both", "--bandwidth", "0.25",
                     "--draws", "2000", "--out", str(tmp_path)])
        assert code == EXIT_OK
        payload = json.loads((tmp_path / "report.json").read_text())
        reps = [RunReport.from_dict(d) for d in payload["reports"]]
        assert [r.method for r in reps] == ["classical", "robust"]
        assert all(p.bandwidth == 0.25 for r in reps for p in r.populations)
        assert all(0 < r.p_value <= 1 for r in reps)
        assert all(tuple(r.notes) == FIDELITY_NOTES for r in reps)
        assert "p-value" in capsys.readouterr().out

    def test_report_round_trip(self, m2_csv, tmp_path):
        main(["test", str(m2_csv), "--draws", "500", "--out", str(tmp_path)])
        d = json.loads((tmp_path / "report.json").read_text())["reports"][0]
        r = RunReport.from_dict(d)
        assert RunReport.from_json(r.to_json()) == r
        assert r.populations[0].n == 60

    def test_duplicated_groups(self, tmp_path):
        p = sim_csv(tmp_path / "dup.csv", dup=True)
        main(["test", str(p), "--draws", "2000", "--out", str(tmp_path)])
        r = RunReport.from_dict(json.loads((tmp_path / "report.json").read_text())["reports"][0])
        assert r.T < 1e-20
        assert r.p_value > 0.9

    def test_deterministic(self, m2_csv, tmp_path):
        outs = []
        for d in ("a", "b"):
            main(["test", str(m2_csv), "--draws", "500", "--seed", "3",
                  "--out", str(tmp_path / d)])
            outs.append((tmp_path / d / "report.json").read_text())
        assert outs[0] == outs[1]

    def test_invalid_exit_code(self, tmp_path, capsys):
        p = write(tmp_path / "d.csv", "group,x,y\na,0.1,1\n")
        assert main(["test", str(p), "--out", str(tmp_path)]) == EXIT_INVALID
        assert "error" in capsys.readouterr().err
        assert main(["test", str(tmp_path / "missing.csv")]) == EXIT_INVALID

    def test_numeric_exit_code(self, tmp_path):
        x = np.linspace(0, 1, 25)
        with open(tmp_path / "flat.csv", "w", newline="") as fh:
            write_long_csv(fh, ["a"] * 25 + ["b"] * 25, np.r_[x, x], np.ones(50))
        assert main(["test", str(tmp_path / "flat.csv"), "--out", str(tmp_path)]) == EXIT_NUMERIC

    def test_argparse_errors_exit_2(self, m2_csv):
        with pytest.raises(SystemExit) as err:
            main(["test", str(m2_csv), "--bandwidth", "-1"])
        assert err.value.code == 2

    def test_power_surface(self, m2_csv, tmp_path):
        code = main(["power-surface", str(m2_csv), "--h1", "0.2,0.3", "--h2", "0.25,0.35",
                     "--draws", "500", "--out", str(tmp_path)])
        assert code == EXIT_OK
        rows = list(csv.reader(open(tmp_path / "surface.csv")))
        P = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        assert P.shape == (2, 2)
        assert np.all((P >= 0) & (P <= 1))

    def test_bandwidth(self, m2_csv, tmp_path, capsys):
        assert main(["bandwidth", str(m2_csv), "--grid", "0.1,0.2,0.3",
                     "--out", str(tmp_path)]) == EXIT_OK
        rows = list(csv.DictReader(open(tmp_path / "bandwidth.csv")))
        assert len(rows) == 6
        assert sum(int(r["selected"]) for r in rows) == 2
        assert "h =" in capsys.readouterr().out


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps({
        "schema_version": 1, "models": ["M1", "MA1"], "contaminations": ["C0", "C4"],
        "sizes": [30, 30], "replications": 4, "seed": 2, "bandwidth": 0.3, "n_draws": 300,
        "delta_grid": [0, 4],
    }))
    return p


class TestSimulateCommands:
    def test_simulate_shape_and_determinism(self, scenario, tmp_path):
        texts = []
        for d in ("a", "b"):
            assert main(["simulate", str(scenario), "--out", str(tmp_path / d)]) == EXIT_OK
            texts.append((tmp_path / d / "table.csv").read_bytes())
        assert texts[0] == texts[1]
        rows = list(csv.DictReader(texts[0].decode().splitlines()))
        keys = {(r["contamination"], r["model"], r["sizes"], r["test"]) for r in rows}
        assert len(rows) == len(keys) == 8

    def test_contiguous(self, scenario, tmp_path):
        assert main(["contiguous", str(scenario), "--method", "robust",
                     "--out", str(tmp_path)]) == EXIT_OK
        rows = list(csv.DictReader(open(tmp_path / "table.csv")))
        assert [float(r["delta"]) for r in rows[:2]] == [0.0, 4.0]

    def test_bad_scenario_exit_code(self, tmp_path, capsys):
        p = write(tmp_path / "s.json", json.dumps({"schema_version": 1, "colour": "red"}))
        assert main(["simulate", str(p)]) == EXIT_INVALID
        assert "colour" in capsys.readouterr().err
