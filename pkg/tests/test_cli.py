import json

import numpy as np

from shadowlab import build_disk_system, is_pseudo_orbit, true_orbit
from shadowlab.cli import main
from shadowlab.serialize import CONFIG_SCHEMA, load_orbit, save_block_plan_manifest, save_orbit


def write_config(tmp_path, **overrides):
    data = {
        "schema": CONFIG_SCHEMA,
        "seed": 11,
        "horizon": 400,
        "out": str(tmp_path / "out"),
        "system": {
            "space": {"kind": "unit-disk-2d"},
            "maps": [{"kind": "permutation", "perm": [1, 0]},
                     {"kind": "scale", "factors": [0.5, 0.5]}],
            "word": {"kind": "periodic", "m": 2, "pattern": [1, 2]},
            "start": [0.6, 0.3],
        },
        "thresholds": {"delta": 0.8, "epsilon": 0.3, "alpha": 0.8,
                       "tol": 0.05, "density_tol": 0.05},
        "net_mesh": 0.25,
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def test_generate_true_orbit_classifies_as_pseudo_orbit(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["generate", "--config", str(cfg)]) == 0
    xi = load_orbit(tmp_path / "out" / "orbit.json")
    for delta in (1e-9, 0.5):
        assert is_pseudo_orbit(xi, delta)


def test_generate_deterministic_bytes(tmp_path):
    cfg = write_config(tmp_path, corruption={"indices": {"kind": "squares"},
                                             "jump": {"kind": "uniform"}})
    assert main(["generate", "--config", str(cfg)]) == 0
    first = (tmp_path / "out" / "orbit.json").read_bytes()
    assert main(["generate", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "orbit.json").read_bytes() == first


def test_classify_pipeline(tmp_path):
    cfg = write_config(tmp_path, corruption={"indices": {"kind": "squares"},
                                             "jump": {"kind": "uniform"}})
    assert main(["generate", "--config", str(cfg)]) == 0
    assert main(["classify", "--config", str(cfg)]) == 0
    verdicts = json.loads((tmp_path / "out" / "classification.json").read_text())
    assert set(verdicts) == {"pseudo_orbit", "ergodic_pseudo_orbit", "average_pseudo_orbit",
                             "weak_asymptotic_average", "asymptotic_average"}
    assert verdicts["ergodic_pseudo_orbit"]["verdict"] is True
    for v in verdicts.values():
        assert "params" in v and v["params"]


def test_classify_tampered_checksum_exits_2(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["generate", "--config", str(cfg)]) == 0
    orbit_path = tmp_path / "out" / "orbit.json"
    data = json.loads(orbit_path.read_text())
    data["step_error_checksum"] = "f" * 64
    orbit_path.write_text(json.dumps(data))
    assert main(["classify", "--config", str(cfg)]) == 2


def test_repair_pipeline_and_rejection(tmp_path):
    cfg = write_config(tmp_path, horizon=2000,
                       corruption={"indices": {"kind": "squares"},
                                   "jump": {"kind": "uniform"}})
    assert main(["generate", "--config", str(cfg)]) == 0
    assert main(["repair", "--config", str(cfg)]) == 0
    audit = json.loads((tmp_path / "out" / "repair.json").read_text())
    assert audit["average_verdict"]["verdict"] is True
    assert set(audit["diff_set"]) <= set(audit["blocks"])

    dense = write_config(tmp_path, corruption={"indices": {"kind": "evens"},
                                               "jump": {"kind": "uniform"}})
    assert main(["generate", "--config", str(dense)]) == 0
    assert main(["repair", "--config", str(dense)]) == 3


def test_search_average_and_resource_cap(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["search", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "out" / "search.json").read_text())
    assert report["success"] is True
    curve = (tmp_path / "out" / "search_curve.csv").read_text().splitlines()
    assert curve[0] == "n,prefix_mean"
    assert len(curve) == 402

    tiny = write_config(tmp_path, net_mesh=1e-4)
    assert main(["search", "--config", str(tiny)]) == 4


def test_search_modes(tmp_path):
    cfg = write_config(tmp_path, search={"mode": "m-alpha"})
    assert main(["search", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "out" / "search.json").read_text())
    assert report["objective"] == "hit_lower_density"

    cfg = write_config(tmp_path, search={"mode": "refined", "levels": 2,
                                         "mesh_schedule": [0.3, 0.2]})
    assert main(["search", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "out" / "search.json").read_text())
    assert report["succeeded"] is True


def test_cesaro_subcommand(tmp_path):
    values = np.zeros(5000)
    for k in range(71):
        values[k * k] = 1.0
    csv = tmp_path / "values.csv"
    csv.write_text("\n".join(str(v) for v in values))
    cfg = write_config(tmp_path, cesaro={"input_csv": str(csv)})
    assert main(["cesaro", "--config", str(cfg)]) == 0
    result = json.loads((tmp_path / "out" / "cesaro.json").read_text())
    assert result["equivalence"]["verdict"] is True
    assert result["boundaries"]
    means = (tmp_path / "out" / "cesaro_means.csv").read_text().splitlines()
    assert means[0] == "n,cesaro_mean"


def test_cesaro_rejects_non_null_sequence(tmp_path):
    csv = tmp_path / "values.csv"
    csv.write_text("\n".join("0.5" for _ in range(200)))
    cfg = write_config(tmp_path, cesaro={"input_csv": str(csv)})
    assert main(["cesaro", "--config", str(cfg)]) == 3


def test_concat_subcommand(tmp_path):
    family, word = build_disk_system()
    b1 = true_orbit(family, word, (0.7, 0.1), 10)
    b2 = true_orbit(family, word.shifted(11), (0.2, 0.5), 30)
    save_orbit(b1, tmp_path / "b1.json")
    save_orbit(b2, tmp_path / "b2.json")
    save_block_plan_manifest(["b1.json", "b2.json"], [1, 1], tmp_path / "plan.json")
    cfg = write_config(tmp_path, concat={"manifest": str(tmp_path / "plan.json")})
    assert main(["concat", "--config", str(cfg)]) == 0
    cert = json.loads((tmp_path / "out" / "concat_certificate.json").read_text())
    assert cert["verdict"] is True
    stitched = load_orbit(tmp_path / "out" / "concatenated.json")
    assert len(stitched.points) == 42


def test_example_disk_default_config(tmp_path):
    assert main(["example-disk", "--horizon", "500", "--out", str(tmp_path / "demo")]) == 0
    rows = (tmp_path / "demo" / "example_disk.csv").read_text().splitlines()
    assert rows[0] == "n,lhs,rhs,mean"
    final = rows[-1].split(",")
    assert float(final[1]) <= float(final[2]) + 1e-9
    summary = json.loads((tmp_path / "demo" / "example_disk.json").read_text())
    assert summary["all_prefixes_bounded"] is True


def test_equivalence_suite(tmp_path):
    cfg = write_config(tmp_path, horizon=2000,
                       corruption={"indices": {"kind": "squares"},
                                   "jump": {"kind": "uniform"}})
    assert main(["equivalence-suite", "--config", str(cfg)]) == 0
    matrix = json.loads((tmp_path / "out" / "equivalence_matrix.json").read_text())
    assert matrix["original_classification"]["ergodic_pseudo_orbit"]["verdict"] is True
    assert matrix["repaired_classification"]["average_pseudo_orbit"]["verdict"] is True
    assert "m_alpha_shadowing_on_original" in matrix["searches"]
    assert matrix["params"]["seed"] == 11


def test_invalid_config_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\"schema\": \"nope\"}")
    assert main(["generate", "--config", str(path)]) == 2
    path.write_text("not json at all")
    assert main(["generate", "--config", str(path)]) == 2


def test_full_pipeline_byte_identical_across_runs(tmp_path):
    cfg = write_config(tmp_path, horizon=2000,
                       corruption={"indices": {"kind": "squares"},
                                   "jump": {"kind": "uniform"}})
    outputs = {}
    for run in ("first", "second"):
        for command in ("generate", "classify", "repair", "search"):
            assert main([command, "--config", str(cfg)]) == 0
        outputs[run] = {p.name: p.read_bytes()
                        for p in sorted((tmp_path / "out").iterdir())}
    assert outputs["first"] == outputs["second"]
