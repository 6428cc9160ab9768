import json
import subprocess
import sys

from onesided.cli import EXIT_FAIL, EXIT_INPUT, EXIT_PASS, main
from onesided.gridfile import read_field, write_pair, write_set
from onesided.generators import make_pair, make_set
from onesided.grid import CellSet, GridDomain


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main(list(argv) + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_unit_constant_is_one(tmp_path):
    code, doc = run(tmp_path, "constant", "--dim", "2", "--depth", "3", "--gen", "unit")
    assert code == EXIT_PASS
    assert doc["results"]["restricted"]["value"] == 1.0
    assert doc["summary"] == {"passed": True, "vacuous": False, "finding": False, "exit_code": 0}
    assert doc["config"]["dim"] == 2 and "timing" not in doc


def test_constant_oracle(tmp_path):
    code, doc = run(tmp_path, "constant", "--depth", "3", "--gen", "loguniform(seed=7)", "--oracle")
    assert code == EXIT_PASS and doc["results"]["oracle"]["match"]


def test_verify_dyadic_example_and_csv(tmp_path):
    code, doc = run(tmp_path, "verify", "dyadic", "--depth", "2", "--p", "1", "--gen-set", "box(lo=1/2,hi=3/4)",
                    "--t", "0.4")
    assert code == EXIT_PASS
    row = doc["results"]["rows"][0]
    assert (row["lhs"], row["rhs"], row["ratio"]) == (0.5, 20.0, 0.025)
    csv = (tmp_path / "out.csv").read_text().splitlines()
    assert csv[0] == "t,lhs,rhs,ratio,passed" and len(csv) == 2


def test_input_errors_write_nothing(tmp_path):
    code, doc = run(tmp_path, "verify", "dyadic", "--pair", str(tmp_path / "missing.grid"))
    assert code == EXIT_INPUT and doc is None
    code, doc = run(tmp_path, "verify", "planar", "--dim", "1")
    assert code == EXIT_INPUT and doc is None
    code, doc = run(tmp_path, "verify", "dyadic", "--gen", "nosuch")
    assert code == EXIT_INPUT and doc is None
    assert main(["verify", "bogus"]) == EXIT_INPUT
    code, doc = run(tmp_path, "maximal", "--operator", "quarter1")
    assert code == EXIT_INPUT and doc is None


def test_strict_turns_vacuous_into_failure(tmp_path):
    d = GridDomain(1, 2)
    from onesided.grid import WeightField, WeightPair
    pair = WeightPair(WeightField(d, [1.0, 1.0, 1.0, 1.0]), WeightField(d, [1.0, 0.0, 0.0, 1.0]), 1.0)
    path = write_pair(tmp_path / "p.grid", pair)
    code, doc = run(tmp_path, "constant", "--pair", str(path))
    assert code == EXIT_PASS and doc["summary"]["vacuous"]
    code, doc = run(tmp_path, "constant", "--pair", str(path), "--strict")
    assert code == EXIT_FAIL
    assert run(tmp_path, "verify", "dyadic", "--gen", "step", "--strict")[0] == EXIT_PASS


def test_files_match_generators(tmp_path):
    d = GridDomain(2, 3)
    pair = make_pair("loguniform(seed=7)", d, 2.0)
    E = make_set("bernoulli(density=0.3,seed=2)", d)
    write_pair(tmp_path / "p.grid", pair, "f64le")
    write_set(tmp_path / "E.grid", E, "bits")
    a = run(tmp_path, "verify", "dyadic", "--pair", str(tmp_path / "p.grid"), "--set", str(tmp_path / "E.grid"),
            name="a.json")[1]
    b = run(tmp_path, "verify", "dyadic", "--dim", "2", "--depth", "3", "--gen", "loguniform(seed=7)",
            "--gen-set", "bernoulli(density=0.3,seed=2)", name="b.json")[1]
    assert a["results"] == b["results"]


def test_byte_identical_reruns(tmp_path):
    argv = ["verify", "planar", "--dim", "2", "--depth", "4", "--gen", "loguniform(seed=7)", "--seed", "3"]
    texts = []
    for sub in ("x", "y"):
        (tmp_path / sub).mkdir()
        main(argv + ["--out", str(tmp_path / sub / "r.json")])
    for sub in ("x", "y"):
        texts.append((tmp_path / sub / "r.json").read_bytes())
    # same out path name, different directories: config echo differs only by directory
    a, b = (json.loads(t) for t in texts)
    a["config"].pop("out"), b["config"].pop("out")
    assert a == b
    main(argv + ["--out", str(tmp_path / "x" / "r.json")])
    assert (tmp_path / "x" / "r.json").read_bytes() == texts[0]


def test_maximal_dump_and_oracle(tmp_path):
    base = ["maximal", "--dim", "2", "--depth", "4", "--seed", "9"]
    for op in ("plus", "minus", "anchored", "quarter1", "quarter2", "quarter3"):
        fast, slow = tmp_path / f"{op}.grid", tmp_path / f"{op}-o.grid"
        assert main(base + ["--operator", op, "--dump", str(fast), "--out", str(tmp_path / "f.json")]) == 0
        assert main(base + ["--operator", op, "--dump", str(slow), "--oracle",
                            "--out", str(tmp_path / "o.json")]) == 0
        assert (tmp_path / f"{op}.values.f64").read_bytes() == (tmp_path / f"{op}-o.values.f64").read_bytes()
    dom, vals = read_field(tmp_path / "plus.grid")
    assert dom == GridDomain(2, 4) and vals.max() <= 1
    # a dumped field re-enters as a set through its level set
    E = (vals > 0.25)
    write_set(tmp_path / "L.grid", CellSet(dom, E))
    assert main(["maximal", "--set", str(tmp_path / "L.grid"), "--out", str(tmp_path / "l.json")]) == 0


def test_figures_and_sharpness(tmp_path):
    code, doc = run(tmp_path, "verify", "sharpness", "--depth", "3", "--budget", "2", "--figures",
                    str(tmp_path / "fig"))
    assert code == EXIT_PASS and len(doc["figures"]) == 1
    assert (tmp_path / "fig" / "verify-sharpness-trials.png").exists()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "onesided.cli", "constant", "--gen", "unit"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["results"]["restricted"]["value"] == 1.0
