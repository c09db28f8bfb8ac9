"""Deterministic key=value verification reports.

A report is a flat list of ``key=value`` lines: a schema header, the suite
name, the config echo (sorted), then the checks in insertion order.  Timings
are never written into the body, so equal seeds give equal bytes.
"""
from __future__ import annotations

import csv
import io
import os
import tempfile
import zlib
from dataclasses import dataclass, field

import numpy as np

SCHEMA = "lipfill-report 1"
OUTDIR_ENV = "LIPFILL_OUT"


class ReportFormatError(ValueError):
    pass


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list, np.ndarray)):
        return ",".join(format_value(x) for x in v)
    s = str(v)
    if "\n" in s:
        raise ValueError("values must be single-line")
    return s


@dataclass
class Check:
    name: str
    passed: bool | None  # None = informational
    fields: dict = field(default_factory=dict)

    @property
    def status(self):
        return "info" if self.passed is None else ("pass" if self.passed else "fail")


@dataclass
class Report:
    suite: str
    config: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, name, passed, **fields) -> Check:
        if any(c.name == name for c in self.checks):
            raise ValueError(f"duplicate check {name!r}")
        if "." in name or "=" in name:
            raise ValueError("check names may not contain '.' or '='")
        c = Check(name, None if passed is None else bool(passed), fields)
        self.checks.append(c)
        return c

    def note(self, text):
        self.notes.append(text)

    @property
    def passed(self):
        return all(c.passed is not False for c in self.checks)

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"schema={SCHEMA}", f"suite={format_value(self.suite)}"]
        for k in sorted(self.config):
            lines.append(f"config.{k}={format_value(self.config[k])}")
        for i, n in enumerate(self.notes):
            lines.append(f"note.{i}={format_value(n)}")
        for c in self.checks:
            lines.append(f"check.{c.name}.status={c.status}")
            for k, v in c.fields.items():
                lines.append(f"check.{c.name}.{k}={format_value(v)}")
        lines.append(f"summary.checks={len(self.checks)}")
        lines.append(f"summary.status={'pass' if self.passed else 'fail'}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text) -> "Report":
        """Parse a report; values come back as strings."""
        lines = text.splitlines()
        if not lines or lines[0] != f"schema={SCHEMA}":
            raise ReportFormatError("missing or unknown schema line")
        rep = None
        for ln in lines[1:]:
            if "=" not in ln:
                raise ReportFormatError(f"malformed line {ln!r}")
            key, val = ln.split("=", 1)
            if key == "suite":
                rep = cls(val)
                continue
            if rep is None:
                raise ReportFormatError("suite line must follow the schema line")
            head, _, rest = key.partition(".")
            if head == "config":
                rep.config[rest] = val
            elif head == "note":
                rep.notes.append(val)
            elif head == "check":
                name, _, fld = rest.partition(".")
                if fld == "status":
                    rep.checks.append(Check(name, {"pass": True, "fail": False}.get(val)))
                else:
                    rep[name].fields[fld] = val
            elif head != "summary":
                raise ReportFormatError(f"unknown key {key!r}")
        if rep is None:
            raise ReportFormatError("no suite line")
        return rep

    def write(self, path):
        atomic_write(path, self.to_text())


def atomic_write(path, text):
    """Write via a temporary file in the target directory and rename over the target."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"# {SCHEMA}"])
    w.writerow(header)
    for r in rows:
        w.writerow([format_value(x) for x in r])
    atomic_write(path, buf.getvalue())


def merge(reports, name="merge") -> Report:
    """Concatenate reports, prefixing each check by its suite and position."""
    out = Report(name)
    for i, r in enumerate(reports):
        tag = f"{i}-{r.suite}".replace(".", "-")
        out.config[f"{tag}-checks"] = len(r.checks)
        for k in sorted(r.config):
            out.config[f"{tag}-{k}"] = r.config[k]
        for c in r.checks:
            out.checks.append(Check(f"{tag}-{c.name}", c.passed, dict(c.fields)))
        out.notes.extend(n for n in r.notes if n not in out.notes)
    return out


def suite_seed(seed: int, suite: str) -> np.random.SeedSequence:
    """Per-suite stream: adding a suite never perturbs another suite's samples."""
    return np.random.SeedSequence([int(seed) & (2**64 - 1), zlib.crc32(suite.encode())])


def suite_int_seed(seed: int, suite: str) -> int:
    return int(suite_seed(seed, suite).generate_state(1, np.uint32)[0])


def output_path(name, explicit=None):
    if explicit:
        return explicit
    return os.path.join(os.environ.get(OUTDIR_ENV, "."), name)
