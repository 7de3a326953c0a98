import io
import json

import fitz
import numpy as np
import pandas as pd
import pytest

from src.cli import reports
from src.core.penalties import PenaltyKind


def _report(table=None, **results):
    manifest = reports.RunManifest(
        command=["pairwise-select", "fit", "--seed", "5"],
        config={"solver": {"kkt_tol": 1e-6}, "folds": 5},
        seeds={"seed": 5},
        input_digest="sha256:abc",
        timings={"fit": 0.123},
    )
    if table is None:
        table = pd.DataFrame({
            "column": ["x1", "x2", "x3"],
            "gamma": [1.0 / 3.0, 0.0, -2.0e-17],
            "selected": [1, 0, 1],
        })
    base = {"penalty": PenaltyKind.SCAD, "lambda": 0.1, "objective": np.float64(2.0 / 3.0),
            "n": np.int64(234), "support": ["x1", "x3"]}
    base.update(results)
    return reports.Report("fit", manifest, base, table)


def test_text_report_reads_back_exactly():
    report = _report()
    values, table = reports.parse_text(reports.render_text(report))
    assert values["kind"] == "fit"
    assert values["penalty"] == "scad"
    assert values["objective"] == 2.0 / 3.0
    assert values["n"] == 234
    assert values["support"] == ["x1", "x3"]
    assert values["manifest.seeds"] == {"seed": 5}
    assert list(table["gamma"]) == [1.0 / 3.0, 0.0, -2.0e-17]


def test_text_report_omits_timings():
    text = reports.render_text(_report())
    assert "timings" not in text
    assert "0.123" not in text


def test_text_layout():
    lines = reports.render_text(_report()).splitlines()
    separator = lines.index("---")
    assert lines[0] == 'kind: "fit"'
    assert lines[separator + 1] == "column,gamma,selected"
    assert lines[separator + 2].startswith("x1,0.33333333333333331,")


def test_json_report():
    payload = json.loads(reports.render_json(_report()))
    assert payload["results"]["objective"] == 2.0 / 3.0
    assert payload["table"][0]["column"] == "x1"
    assert "timings" not in payload["manifest"]


def test_json_rejects_nan_in_results():
    with pytest.raises(ValueError):
        reports.render_json(_report(objective=float("nan")))


def test_json_writes_missing_cells_as_null():
    table = pd.DataFrame({"method": ["proposed", "mar"], "intercept": [np.nan, 0.5]})
    payload = json.loads(reports.render_json(_report(table=table)))
    assert payload["table"][0]["intercept"] is None


def test_write_report_with_sidecar(tmp_path):
    path = tmp_path / "fit.txt"
    reports.write_report(_report(), path=str(path))
    values, _ = reports.read_text_report(path)
    assert values["manifest_file"] == "fit.txt.manifest.json"
    sidecar = json.loads((tmp_path / "fit.txt.manifest.json").read_text())
    assert sidecar["timings"] == {"fit": 0.123}
    assert sidecar["input_digest"] == "sha256:abc"


def test_write_report_to_stream():
    stream = io.StringIO()
    reports.write_report(_report(), fmt="json", stream=stream)
    assert json.loads(stream.getvalue())["kind"] == "fit"


def test_identical_reports_are_byte_identical(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    first.mkdir()
    second.mkdir()
    reports.write_report(_report(), path=str(first / "r.txt"))
    late = _report()
    late.manifest.timings = {"fit": 99.0}
    reports.write_report(late, path=str(second / "r.txt"))
    assert (first / "r.txt").read_bytes() == (second / "r.txt").read_bytes()


def test_unknown_format():
    with pytest.raises(ValueError):
        reports.write_report(_report(), fmt="xml", stream=io.StringIO())


def test_pdf_needs_a_path():
    with pytest.raises(ValueError, match="--out"):
        reports.write_report(_report(), fmt="pdf", stream=io.StringIO())


def test_pdf_summary_table(tmp_path):
    summary = pd.DataFrame({
        "method": ["proposed", "mar"],
        "penalty": ["scad", "scad"],
        "fp_mean": [0.98, 2.5],
        "fp_sd": [1.25, 1.0],
        "fn_mean": [0.0, 0.14],
        "fn_sd": [0.0, 0.35],
        "reps": [50, 50],
    })
    report = _report(table=summary)
    path = tmp_path / "summary.pdf"
    reports.write_report(report, path=str(path), fmt="pdf")

    with fitz.open(str(path)) as doc:
        text = "".join(page.get_text() for page in doc)
    assert "Fit report" in text
    assert "0.98 (1.25)" in text
    assert "0.14 (0.35)" in text
    assert "#FP" in text
    assert (tmp_path / "summary.pdf.manifest.json").exists()


def test_pdf_paginates_long_tables(tmp_path):
    table = pd.DataFrame({"lambda": np.geomspace(1.0, 0.01, 200), "cv": np.linspace(5, 3, 200)})
    path = tmp_path / "cv.pdf"
    reports.write_report(_report(table=table), path=str(path), fmt="pdf")
    with fitz.open(str(path)) as doc:
        assert doc.page_count >= 2
        assert "lambda" in doc[1].get_text()


def test_file_digest(tmp_path):
    path = tmp_path / "data.csv"
    path.write_bytes(b"y,x\n1,2\n")
    assert reports.file_digest(path) == reports.file_digest(str(path))
    assert reports.file_digest(path).startswith("sha256:")
