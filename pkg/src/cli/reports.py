"""Report files: a run manifest plus scalar results and one rectangular table.

Text layout::

    kind: "fit"
    manifest.seed: 12345
    ...
    objective: 0.61234567890123451
    ---
    column,gamma,selected
    x1,1.2345678901234567,1

Header values are JSON, except floats, which are written with 17 significant
digits; the CSV body uses the same float format. Reading a report back
reproduces every value exactly.
"""
import enum
import hashlib
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from src.config import settings
from src.core.pdf_generator import ReportPDFGenerator

logger = logging.getLogger(__name__)


@dataclass
class RunManifest:
    command: list
    config: dict
    seeds: dict
    input_digest: str = None
    version: str = settings.VERSION
    timings: dict = field(default_factory=dict)

    def deterministic(self):
        data = asdict(self)
        data.pop("timings")
        return data


@dataclass
class Report:
    kind: str
    manifest: RunManifest
    results: dict
    table: pd.DataFrame


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def plain(value):
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, enum.Enum):
        return value.value
    return value


def _encode(value):
    value = plain(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return json.dumps(value, sort_keys=True)


def _decode(text):
    try:
        return json.loads(text)
    except ValueError:
        return float(text)


def _header_items(report):
    yield "kind", report.kind
    for key, value in report.manifest.deterministic().items():
        yield f"manifest.{key}", value
    for key, value in report.results.items():
        yield key, value


def render_text(report):
    lines = [f"{key}: {_encode(value)}" for key, value in _header_items(report)]
    lines.append(settings.HEADER_SEPARATOR)
    body = report.table.to_csv(index=False, float_format=settings.FLOAT_FORMAT,
                               lineterminator="\n")
    return "\n".join(lines) + "\n" + body


def render_json(report):
    table = report.table.astype(object).where(report.table.notna(), None)
    payload = {
        "kind": report.kind,
        "manifest": plain(report.manifest.deterministic()),
        "results": plain(report.results),
        "table": plain(table.to_dict(orient="records")),
    }
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def parse_text(text):
    header, _, body = text.partition("\n" + settings.HEADER_SEPARATOR + "\n")
    values = {}
    for line in header.splitlines():
        key, _, raw = line.partition(": ")
        values[key] = _decode(raw)
    table = pd.read_csv(io.StringIO(body), float_precision="round_trip") if body.strip() \
        else pd.DataFrame()
    return values, table


def read_text_report(path):
    with open(path, encoding="utf-8") as handle:
        return parse_text(handle.read())


def read_json_report(path):
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def sidecar_path(path):
    return f"{path}.manifest.json"


def write_report(report, path=None, fmt="text", stream=None):
    if fmt not in settings.REPORT_FORMATS:
        raise ValueError(f"unknown report format '{fmt}'")

    if path is not None:
        report.results = dict(report.results)
        report.results["manifest_file"] = os.path.basename(sidecar_path(path))

    if fmt == "pdf":
        if path is None:
            raise ValueError("the pdf format needs an output path (--out)")
        ReportPDFGenerator().generate(report, path)
    else:
        content = render_text(report) if fmt == "text" else render_json(report)
        if path is None:
            stream.write(content)
        else:
            with open(path, "w", encoding="utf-8", newline="") as handle:
                handle.write(content)

    if path is not None:
        with open(sidecar_path(path), "w", encoding="utf-8") as handle:
            json.dump(plain(asdict(report.manifest)), handle, indent=2, sort_keys=True)
            handle.write("\n")
        logger.info("wrote %s (%s)", path, fmt)
