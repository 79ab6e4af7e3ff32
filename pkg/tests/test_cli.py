from __future__ import annotations

import json
import shutil

import pytest

from datasus_openehr.archetypes import shipped_registry_dir
from datasus_openehr.cli import main

from conftest import TEMPLATES


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_registry_check(capsys):
    code, out, _ = run(capsys, "registry-check")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "archetypes=22 new=8 specialized=5 ckm=9 attributes=62"
    assert lines[1] == ("DV_QUANTITY=6 DV_BOOLEAN=7 DV_CODED_TEXT=23 DV_COUNT=7 DV_DATE=7 DV_DATE_TIME=3 "
                        "DV_PROPORTION=2 DV_TEXT=7")


def test_registry_check_json(capsys):
    code, out, _ = run(capsys, "registry-check", "--format", "json")
    report = json.loads(out)
    assert code == 0 and report["ok"] and report["archetypes"] == 22
    assert report["types"]["DV_CODED_TEXT"] == 23


def test_registry_check_missing_file(capsys, tmp_path):
    target = tmp_path / "reg"
    shutil.copytree(shipped_registry_dir(), target)
    (target / "cluster.fluid.schema").unlink()
    code, out, err = run(capsys, "registry-check", "--registry", target)
    assert code == 1
    assert out.startswith("archetypes=21 ")
    assert "archetypes=21" in err


def test_registry_env_var(capsys, tmp_path, monkeypatch):
    target = tmp_path / "reg"
    shutil.copytree(shipped_registry_dir(), target)
    (target / "cluster.fluid.schema").unlink()
    monkeypatch.setenv("DATASUS_OPENEHR_REGISTRY", str(target))
    code, _, _ = run(capsys, "registry-check")
    assert code == 1


def test_registry_missing_dir(capsys, tmp_path):
    code, _, err = run(capsys, "registry-check", "--registry", tmp_path / "none")
    assert code == 2 and "not found" in err


def test_generate_unknown_template(capsys):
    code, _, err = run(capsys, "generate", "--template", "xyz", "--count", "3")
    assert code == 2
    for t in TEMPLATES:
        assert t in err


def test_generate_then_validate(capsys, tmp_path):
    docs = tmp_path / "d.ndjson"
    code, _, err = run(capsys, "generate", "--template", "demographic_data", "--count", 1000, "--seed", 1,
                       "--out", docs)
    assert code == 0
    report = json.loads(err)
    assert report["count"] == 1000 and report["compositions_per_second"] > 0
    assert len(docs.read_text(encoding="utf-8").splitlines()) == 1000
    code, out, _ = run(capsys, "validate", docs, "--template", "demographic_data")
    assert code == 0 and out.strip().endswith("1000 documents, 0 invalid")


def test_generate_benchmark(capsys):
    code, out, _ = run(capsys, "generate", "--template", "hospitalisation", "--count", 1, "--benchmark")
    report = json.loads(out)
    assert code == 0 and report["generate_per_second"] > 0 and report["generate_serialize_per_second"] > 0


def test_generate_bad_count(capsys):
    code, _, _ = run(capsys, "generate", "--template", "hospitalisation", "--count", 0)
    assert code == 2


def test_validate_corrupted(capsys, tmp_path):
    docs = tmp_path / "d.ndjson"
    run(capsys, "generate", "--template", "outpatient_high_complex_procedures", "--count", 5, "--seed", 2,
        "--null-rate", 0, "--out", docs)
    rows = [json.loads(x) for x in docs.read_text(encoding="utf-8").splitlines()]
    for entry in rows[3]["content"]:
        for item in entry["items"]:
            if item["name"] == "weight":
                item["value"] = {"_type": "DV_TEXT", "value": "heavy"}
    docs.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    code, out, _ = run(capsys, "validate", docs, "--template", "outpatient_high_complex_procedures")
    assert code == 1
    (line,) = [x for x in out.splitlines() if x.startswith("document")]
    assert line.startswith("document 4:") and "weight" in line and "expected Quantity" in line
    code, out, _ = run(capsys, "validate", docs, "--template", "outpatient_high_complex_procedures",
                       "--format", "json")
    report = json.loads(out)
    assert report["invalid"] == 1 and report["violations"][0]["document"] == 4


def test_validate_parse_error(capsys, tmp_path):
    docs = tmp_path / "d.ndjson"
    docs.write_text('{"_format": 1\n', encoding="utf-8")
    code, out, _ = run(capsys, "validate", docs, "--template", "demographic_data")
    assert code == 1 and "document 1:" in out


def test_validate_empty(capsys, tmp_path):
    docs = tmp_path / "empty.ndjson"
    docs.write_text("", encoding="utf-8")
    code, out, _ = run(capsys, "validate", docs, "--template", "demographic_data")
    assert code == 0 and "0 documents" in out


def test_validate_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "validate", tmp_path / "none", "--template", "demographic_data")
    assert code == 2


@pytest.fixture
def hundred(capsys, tmp_path):
    src = tmp_path / "h.csv"
    code, _, _ = run(capsys, "generate", "--template", "hospitalisation", "--count", 100, "--seed", 5,
                     "--emit-source", src)
    assert code == 0
    return src


def test_transform_valid(capsys, tmp_path, hundred):
    out = tmp_path / "o.ndjson"
    code, _, err = run(capsys, "transform", hundred, "--manifest", "hospitalisation", "--out", out)
    assert code == 0
    assert len(out.read_text(encoding="utf-8").splitlines()) == 100
    assert err.splitlines()[0] == "records=100 compositions=100 failed=0"


def test_transform_bad_gender(capsys, tmp_path):
    src = tmp_path / "d.txt"
    run(capsys, "generate", "--template", "demographic_data", "--count", 10, "--seed", 5, "--emit-source", src)
    lines = src.read_text(encoding="latin-1").splitlines()
    lines[4] = "X" + lines[4][1:]
    src.write_text("\n".join(lines) + "\n", encoding="latin-1")
    errors = tmp_path / "errors.txt"
    code, _, err = run(capsys, "transform", src, "--manifest", "demographic_data", "--out", tmp_path / "o",
                       "--errors", errors)
    assert code == 1
    assert "not in enumeration: 1" in err.splitlines()
    assert errors.read_text(encoding="utf-8").startswith("line 5:")
    code, _, _ = run(capsys, "transform", src, "--manifest", "demographic_data", "--out", tmp_path / "o",
                     "--tolerate", 1)
    assert code == 0
    code, _, err = run(capsys, "transform", src, "--manifest", "demographic_data", "--out", tmp_path / "o",
                       "--format", "json")
    assert json.loads(err)["reasons"] == {"not in enumeration": 1}


def test_transform_manifest_path(capsys, tmp_path, hundred):
    from datasus_openehr.ingestion import shipped_manifests_dir
    path = shipped_manifests_dir() / "hospitalisation.map"
    code, _, _ = run(capsys, "transform", hundred, "--manifest", path, "--out", tmp_path / "o", "--threads", 3)
    assert code == 0


def test_transform_missing_manifest(capsys, hundred):
    code, _, _ = run(capsys, "transform", hundred, "--manifest", "nope")
    assert code == 2


def test_transform_bad_header(capsys, tmp_path):
    src = tmp_path / "bad.csv"
    src.write_text("A;B\n1;2\n", encoding="latin-1")
    code, _, err = run(capsys, "transform", src, "--manifest", "hospitalisation", "--out", tmp_path / "o")
    assert code == 2 and "header" in err


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["generate"])
    assert info.value.code == 2


@pytest.mark.parametrize("template", TEMPLATES)
def test_pipeline_closure(capsys, tmp_path, template):
    src, direct, mapped = tmp_path / "src", tmp_path / "direct", tmp_path / "mapped"
    assert run(capsys, "generate", "--template", template, "--count", 300, "--seed", 12, "--out", direct,
               "--emit-source", src)[0] == 0
    assert run(capsys, "transform", src, "--manifest", template, "--out", mapped)[0] == 0
    assert run(capsys, "validate", mapped, "--template", template)[0] == 0
    assert mapped.read_bytes() == direct.read_bytes()
