"""CLI: exit codes, file formats, overrides, campaign aggregation."""

import csv
import math

import pytest

from swarmgames.cli import CampaignSummary, main, summarize_runs

TWO_TASK_INSTANCE = """\
gamma: [2, 2]
signals: [0.2, 0.4]
costs: [[0, 0]]
counts: [[1, 0, 0]]
"""


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def no_tmp_litter(directory):
    return not any(p.name.endswith(".tmp") for p in directory.iterdir())


# -- allocate ----------------------------------------------------------


def test_allocate_two_task_split(tmp_path, capsys):
    inst = tmp_path / "inst.yaml"
    inst.write_text(TWO_TASK_INSTANCE)
    out = tmp_path / "strategy.csv"
    assert main(["allocate", str(inst), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["group", "action", "probability"]
    parsed = [(int(g), int(a), float(p)) for g, a, p in rows[1:]]
    assert [(g, a) for g, a, _ in parsed] == [(1, 1), (1, 2)]
    assert parsed[0][2] == pytest.approx(0.7, abs=1e-9)
    assert parsed[1][2] == pytest.approx(0.3, abs=1e-9)
    assert "verified" in capsys.readouterr().out
    assert no_tmp_litter(tmp_path)


def test_allocate_dominated_instance_goes_idle(tmp_path):
    inst = tmp_path / "inst.yaml"
    inst.write_text("gamma: [0.5]\nsignals: [1.0]\ncosts: [[0]]\ncounts: [[1, 0]]\n")
    out = tmp_path / "strategy.csv"
    assert main(["allocate", str(inst), "--out", str(out)]) == 0
    assert read_csv(out)[1:] == [["1", "0", "1"]]


def test_allocate_missing_key_exits_1(tmp_path, capsys):
    inst = tmp_path / "inst.yaml"
    inst.write_text("signals: [0.5]\ncosts: [[0]]\ncounts: [[1, 0]]\n")
    out = tmp_path / "strategy.csv"
    assert main(["allocate", str(inst), "--out", str(out)]) == 1
    assert "gamma" in capsys.readouterr().err
    assert not out.exists()


def test_allocate_parse_error_names_line(tmp_path, capsys):
    inst = tmp_path / "inst.yaml"
    inst.write_text("gamma: [2\nsignals: [0.5]\n")
    assert main(["allocate", str(inst), "--out", str(tmp_path / "s.csv")]) == 1
    err = capsys.readouterr().err
    assert f"{inst}:" in err
    assert any(part.isdigit() for part in err.split(":")[1:3])


def test_allocate_rejects_out_of_range_signal(tmp_path, capsys):
    inst = tmp_path / "inst.yaml"
    inst.write_text("gamma: [2]\nsignals: [1.5]\ncosts: [[0]]\ncounts: [[1, 0]]\n")
    assert main(["allocate", str(inst), "--out", str(tmp_path / "s.csv")]) == 1
    assert "signals" in capsys.readouterr().err


def test_allocate_missing_file_exits_1(tmp_path):
    assert main(["allocate", str(tmp_path / "nope.yaml"),
                 "--out", str(tmp_path / "s.csv")]) == 1


# -- sim ---------------------------------------------------------------


def test_sim_is_deterministic_and_atomic(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        code = main(["sim", "--scenario", "colony", "--seed", "5",
                     "--t-final", "60", "--out", str(out)])
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_csv(a)) == 601
    assert no_tmp_litter(tmp_path)


def test_sim_monitoring_information_columns_clamped(tmp_path):
    out = tmp_path / "mon.csv"
    assert main(["sim", "--scenario", "monitoring", "--seed", "1",
                 "--t-final", "60", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0][:6] == ["t", "R_1", "R_2", "R_3", "R_4", "R_5"]
    for row in rows[1:]:
        for value in row[1:6]:
            assert 0.0 <= float(value) <= 1.0


def test_sim_energy_depletion_exits_3(tmp_path, capsys):
    out = tmp_path / "drain.csv"
    code = main(["sim", "--scenario", "colony", "--set", "colony.E_drain=10",
                 "--out", str(out)])
    assert code == 3
    assert "EnergyDepleted" in capsys.readouterr().err
    rows = read_csv(out)
    # 50 J store at 10 J/s leak dies at t = 5.0 s
    assert rows[-1][0] == "5"
    assert float(rows[-1][1]) <= 0.0


def test_sim_unknown_scenario_exits_1(tmp_path, capsys):
    assert main(["sim", "--scenario", "warehouse",
                 "--out", str(tmp_path / "x.csv")]) == 1
    assert "warehouse" in capsys.readouterr().err


def test_sim_bad_override_exits_1(tmp_path, capsys):
    assert main(["sim", "--scenario", "colony", "--set", "colony.bogus=1",
                 "--out", str(tmp_path / "x.csv")]) == 1
    assert "bogus" in capsys.readouterr().err


def test_sim_dotted_event_override(tmp_path):
    out = tmp_path / "ev.csv"
    assert main(["sim", "--scenario", "colony", "--seed", "0",
                 "--t-final", "40", "--set", "events.0.time=20",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[200][3] == "0"
    assert rows[201][3] == "10"


# -- montecarlo --------------------------------------------------------


def parse_runs_csv(path):
    stats = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            stats.append({
                "seed": int(row["seed"]),
                "steps": int(row["steps"]),
                "failure": row["failure"],
                "final_energy": float(row["final_energy"]) if row["final_energy"] else None,
                "all_cargo_delivered_time": (float(row["all_cargo_delivered_time"])
                                             if row["all_cargo_delivered_time"] else None),
                "incomplete": int(row["incomplete"]),
                "deadlock_robot_steps": int(row["deadlock_robot_steps"]),
                "robot_steps": int(row["robot_steps"]),
                "max_conservation_residual": float(row["max_conservation_residual"]),
            })
    return stats


def parse_summary_csv(path):
    campaign = {}
    bins = []
    times = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for record, key, value in reader:
            if record == "campaign":
                campaign[key] = int(value)
            elif record == "energy_bin":
                bins.append((float(key), int(value)))
            elif record == "delivery_time":
                times.append((int(key), float(value)))
    return CampaignSummary(
        runs=campaign["runs"],
        energy_failures=campaign["energy_failures"],
        energy_histogram=tuple(bins),
        delivery_times=tuple(times),
        incomplete=campaign["incomplete_deliveries"],
        deadlock_robot_steps=campaign["deadlock_robot_steps"],
        robot_steps=campaign["robot_steps"],
    )


def run_campaign(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["montecarlo", "--scenario", "colony", "--runs", "3",
                 "--seed", "0", "--t-final", "120", "--jobs", "1",
                 "--out", str(out), *extra])
    assert code == 0
    return out


def test_montecarlo_writes_all_artifacts(tmp_path):
    out = run_campaign(tmp_path, "mc")
    names = sorted(p.name for p in out.iterdir())
    assert names == ["run_0.csv", "run_1.csv", "run_2.csv",
                     "runs.csv", "summary.csv", "summary.txt"]
    text = (out / "summary.txt").read_text()
    assert "runs                  3" in text


def test_montecarlo_summary_recomputable_from_run_artifacts(tmp_path):
    out = run_campaign(tmp_path, "mc")
    stats = parse_runs_csv(out / "runs.csv")
    recomputed = summarize_runs(stats)
    assert recomputed == parse_summary_csv(out / "summary.csv")
    # per-run rows agree with the metrics files they summarize
    for row in stats:
        csv_rows = read_csv(out / f"run_{row['seed']}.csv")
        assert len(csv_rows) - 1 == row["steps"]
        assert float(csv_rows[-1][1]) == pytest.approx(row["final_energy"], abs=1e-9)


def test_montecarlo_histogram_counts_sum_to_runs(tmp_path):
    out = run_campaign(tmp_path, "mc")
    summary = parse_summary_csv(out / "summary.csv")
    assert sum(count for _, count in summary.energy_histogram) == summary.runs
    for lo, _ in summary.energy_histogram:
        assert lo == 5.0 * math.floor(lo / 5.0)


def test_montecarlo_same_base_seed_reproduces(tmp_path):
    a = run_campaign(tmp_path, "mc_a")
    b = run_campaign(tmp_path, "mc_b")
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
    assert (a / "runs.csv").read_bytes() == (b / "runs.csv").read_bytes()
    assert (a / "run_2.csv").read_bytes() == (b / "run_2.csv").read_bytes()


def test_montecarlo_singleton_matches_single_run(tmp_path):
    out = tmp_path / "one"
    assert main(["montecarlo", "--scenario", "colony", "--runs", "1",
                 "--seed", "7", "--t-final", "120", "--jobs", "1",
                 "--out", str(out)]) == 0
    solo = tmp_path / "solo.csv"
    assert main(["sim", "--scenario", "colony", "--seed", "7",
                 "--t-final", "120", "--out", str(solo)]) == 0
    assert (out / "run_7.csv").read_bytes() == solo.read_bytes()
    summary = parse_summary_csv(out / "summary.csv")
    assert summary.runs == 1
    assert sum(c for _, c in summary.energy_histogram) == 1


def test_montecarlo_rejects_zero_runs(tmp_path):
    assert main(["montecarlo", "--scenario", "colony", "--runs", "0",
                 "--seed", "0", "--out", str(tmp_path / "x")]) == 1
