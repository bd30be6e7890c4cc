import json

import pytest

from streetsim.benchmark.reports import read_records
from streetsim.cli import main
from streetsim.providers.server import MockProviderServer
from streetsim.world import read_world, save_world, world_to_document


@pytest.fixture(scope="module")
def world_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("w") / "world.json"
    assert main(["world", "generate", "--seed", "7", "--nodes", "80", "--out", str(p)]) == 0
    return p


def test_generate_is_reproducible(tmp_path, world_file):
    other = tmp_path / "again.json"
    assert main(["world", "generate", "--seed", "7", "--nodes", "80", "--out", str(other)]) == 0
    assert other.read_bytes() == world_file.read_bytes()


def test_generate_from_config(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("world_params:\n  node_count: 30\n  place_density: 0\n")
    out = tmp_path / "nested" / "w.json"  # parent created on demand
    assert main(["world", "generate", "--config", str(cfg), "--out", str(out)]) == 0
    w = read_world(out)
    assert len(w.nodes) == 30 and not w.places


def test_validate(world_file, tmp_path, capsys):
    assert main(["world", "validate", str(world_file)]) == 0
    doc = world_to_document(read_world(world_file))
    doc["places"][0]["types"] = ["not_a_type"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["world", "validate", str(bad)]) == 1
    assert "not_a_type" in capsys.readouterr().err


def test_validate_schema_path(world_file, tmp_path, capsys):
    doc = world_to_document(read_world(world_file))
    doc["nodes"][2]["lng"] = "west"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["world", "validate", str(bad)]) == 1
    assert "nodes/2/lng" in capsys.readouterr().err


def test_stats_counts_match(world_file, capsys):
    assert main(["world", "stats", str(world_file)]) == 0
    out = capsys.readouterr().out
    total = [ln for ln in out.splitlines() if ln.startswith("total")][0].split()
    w = read_world(world_file)
    assert int(total[1]) == 80 == len(w.nodes)
    assert int(total[2]) == len(w.places)
    rows = [ln.split() for ln in out.splitlines()[1:] if ln[:1] == "R"]
    assert sum(int(r[1]) for r in rows) == 80


def run(world_file, out, *extra):
    return main(["run", "--world", str(world_file), "--seed", "3", "--out", str(out), "--workers", "2", *extra])


def test_vln_oracle_success(world_file, tmp_path):
    assert run(world_file, tmp_path, "--task", "vln") == 0
    records, agg = read_records(tmp_path)
    assert agg["success"] == 1.0
    assert len(records) == 18
    assert (tmp_path / "suite.json").exists()


def test_route_optimize_prints_savings(world_file, tmp_path, capsys):
    assert run(world_file, tmp_path, "--task", "route-optimize") == 0
    out = capsys.readouterr().out
    assert "saves" in out and "->" in out
    (rec,), agg = read_records(tmp_path)
    assert len(rec["waypoints"]) == 5
    assert rec["optimized_length_m"] <= rec["in_order_length_m"] + 1e-6


def test_detect_bench_noisy_is_byte_stable(world_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(world_file, a, "--task", "detect-bench", "--provider", "noisy") == 0
    assert run(world_file, b, "--task", "detect-bench", "--provider", "noisy", "--workers", "1") == 0
    for name in ("records.jsonl", "aggregate.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert main(["report", str(a)]) == 0
    assert main(["report", str(b)]) == 0
    assert (a / "report" / "detection_recall.csv").read_bytes() == (b / "report" / "detection_recall.csv").read_bytes()


def test_report_recomputes_aggregate(world_file, tmp_path):
    assert run(world_file, tmp_path, "--task", "vqa-bench", "--provider", "noisy") == 0
    assert main(["report", str(tmp_path)]) == 0
    records, agg = read_records(tmp_path)
    csv_rows = (tmp_path / "report" / "vqa_by_region.csv").read_text().splitlines()
    header = csv_rows[0].split(",")
    last = dict(zip(header, csv_rows[-1].split(",")))
    assert last["region"] == "ALL"
    assert float(last["macc_plain"]) == pytest.approx(agg["macc_plain"], abs=1e-5)
    assert float(last["macc_circular"]) == pytest.approx(agg["macc_circular"], abs=1e-5)
    # independent fold over raw records
    by = {}
    for r in records:
        if r["kind"] == "vqa":
            by.setdefault(r["category"], []).append(r["plain_correct"])
    assert agg["macc_plain"] == pytest.approx(sum(sum(v) / len(v) for v in by.values()) / len(by))


def test_report_detection_footnote(tmp_path):
    (tmp_path / "records.jsonl").write_text(json.dumps(
        {"region": "R00", "AR": 1.0, "per_category": {"cafe": {"tp": 2, "fn": 0, "recall": 1.0},
                                                      "zoo": {"tp": 0, "fn": 0, "recall": None}}}) + "\n")
    (tmp_path / "aggregate.json").write_text(json.dumps({"task": "detect-bench"}))
    assert main(["report", str(tmp_path)]) == 0
    text = (tmp_path / "report" / "detection_recall.csv").read_text()
    assert "excluded from AR (no ground truth): zoo" in text
    assert "ALL,AR,,,1" in text


def test_clean_writes_cleaned_world(world_file, tmp_path):
    assert run(world_file, tmp_path, "--task", "clean") == 0
    cleaned = read_world(tmp_path / "cleaned_world.json")
    records, agg = read_records(tmp_path)
    assert len(cleaned.places) == agg["n_kept"]


def test_region_sweep_counts_with_oracle(world_file, tmp_path):
    assert run(world_file, tmp_path, "--task", "region-sweep") == 0
    _, agg = read_records(tmp_path)
    assert agg["counts"] == agg["ground_truth"]


def test_exit_codes(world_file, tmp_path, capsys):
    with pytest.raises(SystemExit) as bad_task:
        main(["run", "--task", "fly", "--out", str(tmp_path)])
    assert bad_task.value.code == 1
    assert main(["run", "--task", "vln"]) == 1
    assert main(["run", "--task", "vln", "--world", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    assert main(["run", "--task", "vln", "--provider", "external", "--out", str(tmp_path)]) == 1
    assert main(["report", str(tmp_path / "nothing")]) == 2
    (tmp_path / "records.jsonl").write_text("{broken\n")
    (tmp_path / "aggregate.json").write_text("{}")
    assert main(["report", str(tmp_path)]) == 2
    # provider unreachable
    assert run(world_file, tmp_path / "x", "--task", "detect-bench", "--provider", "external",
               "--endpoint", "http://127.0.0.1:9") == 3
    # engine error: waypoint that is not in the world
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"route-optimize": {"start": "n0000", "waypoints": ["zzz"]}}))
    assert run(world_file, tmp_path / "y", "--task", "route-optimize", "--config", str(cfg)) == 4


def test_flags_override_config(world_file, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(f"task: clean\nseed: 99\nout: {tmp_path / 'from_cfg'}\n")
    assert main(["run", "--config", str(cfg), "--world", str(world_file), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "aggregate.json").exists()
    assert not (tmp_path / "from_cfg").exists()


def test_external_provider_end_to_end(world_file, tmp_path):
    w = read_world(world_file)
    with MockProviderServer(w) as srv:
        assert run(world_file, tmp_path / "ext", "--task", "detect-bench", "--provider", "external",
                   "--endpoint", srv.url) == 0
        assert any(r == "detect" for r, _ in srv.requests)
    assert run(world_file, tmp_path / "orc", "--task", "detect-bench") == 0
    ext = json.loads((tmp_path / "ext" / "aggregate.json").read_text())
    orc = json.loads((tmp_path / "orc" / "aggregate.json").read_text())
    # the reference server wraps the oracle detector
    assert ext["AR"] == orc["AR"]
    assert save_world(w) == world_file.read_bytes()
