"""Dataset ingestion, preprocessing and report serialization."""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, EephndError
from .survival import SurvivalSample

MISSING = {"", "NA", "na", "NaN", "nan"}
BUILTIN = {"lung": "lung.csv"}


class ParseError(EephndError, ValueError):
    """Malformed input file."""


@dataclass
class Dataset:
    rows: list[SurvivalSample]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def time(self) -> np.ndarray:
        return np.array([r.time for r in self.rows], dtype=float)

    @property
    def event(self) -> np.ndarray:
        return np.array([r.event for r in self.rows], dtype=bool)

    def covariates(self, names: Sequence[str]) -> np.ndarray:
        try:
            return np.array([[r.covariates[n] for n in names] for r in self.rows], dtype=float)
        except (KeyError, TypeError) as exc:
            raise DomainError(f"covariate {exc} was not loaded") from None


def resolve_path(path: str | Path) -> Path:
    """``builtin:<name>`` refers to a dataset shipped with the package."""
    text = str(path)
    if text.startswith("builtin:"):
        name = text.split(":", 1)[1]
        if name not in BUILTIN:
            raise DomainError(f"unknown builtin dataset {name!r}; available: {sorted(BUILTIN)}")
        return Path(str(resources.files("eephnd") / "data" / BUILTIN[name]))
    return Path(text)


def load_csv(
    path,
    time_col: str = "time",
    status_col: str = "status",
    status_coding: str = "01",
    covariate_cols: Iterable[str] = (),
) -> Dataset:
    """Read a comma-separated survival file with a header row.

    ``status_coding="01"`` reads 1 as an event and 0 as censored;
    ``"12"`` reads 2 as an event and 1 as censored. Rows missing any
    requested column are dropped and counted.
    """
    if status_coding not in ("01", "12"):
        raise DomainError("status_coding must be '01' or '12'")
    event_code, censor_code = (1.0, 0.0) if status_coding == "01" else (2.0, 1.0)
    covariate_cols = list(covariate_cols)
    p = resolve_path(path)
    if not p.exists():
        raise DomainError(f"input file not found: {path}")
    with p.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row required") from None
        wanted = [time_col, status_col] + covariate_cols
        missing_cols = [c for c in wanted if c not in header]
        if missing_cols:
            raise DomainError(f"unknown column(s) {missing_cols} in {path}")
        pos = {c: header.index(c) for c in wanted}
        rows, dropped_lines, raw = [], [], 0
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            raw += 1
            if len(rec) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, found {len(rec)}")
            fields_ = {c: rec[i].strip() for c, i in pos.items()}
            if any(v in MISSING for v in fields_.values()):
                dropped_lines.append(lineno)
                continue
            try:
                vals = {c: float(v) for c, v in fields_.items()}
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value in {fields_}") from None
            status = vals[status_col]
            if status not in (event_code, censor_code):
                raise ParseError(f"{path}:{lineno}: status {status:g} invalid for coding {status_coding}")
            try:
                rows.append(SurvivalSample(
                    time=vals[time_col],
                    event=status == event_code,
                    covariates={c: vals[c] for c in covariate_cols} or None,
                ))
            except DomainError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DomainError(f"{path}: no usable rows")
    prov = {
        "source": str(path),
        "raw_rows": raw,
        "rows": len(rows),
        "dropped": len(dropped_lines),
        "dropped_lines": dropped_lines,
        "columns": {"time": time_col, "status": status_col, "status_coding": status_coding,
                    "covariates": covariate_cols},
        "rescale_factor": 1.0,
    }
    return Dataset(rows, prov)


def rescale_time(ds: Dataset) -> Dataset:
    """Divide every time by the maximum so times lie in (0, 1]."""
    if not ds.rows:
        raise DomainError("cannot rescale an empty dataset")
    tmax = max(r.time for r in ds.rows)
    rows = [replace(r, time=r.time / tmax) for r in ds.rows]
    prov = dict(ds.provenance)
    prov["rescale_factor"] = prov.get("rescale_factor", 1.0) / tmax
    return Dataset(rows, prov)


# --- serialization -------------------------------------------------------------------

def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be emitted")
    return format(x, ".17g")


def _encode(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ", ".join(f"{_encode(str(k))}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "as_dict"):
        return _encode(obj.as_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Single-line JSON with sorted keys and 17 significant digits."""
    return _encode(obj)


def finite_or_none(x: float):
    return x if math.isfinite(x) else None


def write_jsonl(records: Sequence[dict], dest) -> None:
    text = "".join(dumps(r) + "\n" for r in records)
    _write(text, dest)


def write_csv(meta: dict, columns: Sequence[str], rows: Iterable[Sequence], dest) -> None:
    """CSV with leading ``#`` metadata line; ``None`` cells are written empty."""
    out = ["# " + dumps(meta), ",".join(columns)]
    for row in rows:
        out.append(",".join(_cell(v) for v in row))
    _write("\n".join(out) + "\n", dest)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_, int, np.integer)):
        return str(int(v))
    return format_float(float(v))


def _write(text: str, dest) -> None:
    if dest is None or str(dest) == "-":
        sys.stdout.write(text)
        return
    Path(dest).parent.mkdir(parents=True, exist_ok=True)
    with open(dest, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


@dataclass
class ReportBundle:
    """Fits of several models and their rankings under each criterion."""

    fits: list
    criteria: list
    rank_by: str = "aic"
    meta: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)

    def ranking(self, criterion: str | None = None) -> list[str]:
        key = criterion or self.rank_by
        order = sorted(range(len(self.fits)), key=lambda i: (getattr(self.criteria[i], key), i))
        return [self.fits[i].model_tag for i in order]

    def records(self) -> list[dict]:
        out = [{"record": "meta", **self.meta}]
        for fit, ic in zip(self.fits, self.criteria):
            d = fit.as_dict()
            d["loglik"] = finite_or_none(fit.loglik)
            out.append({"record": "fit", **d, "criteria": ic.as_dict()})
        out.append({
            "record": "ranking",
            "by": self.rank_by,
            "order": self.ranking(),
            "all": {c: self.ranking(c) for c in ("aic", "bic", "caic_bozdogan", "aicc")},
        })
        for name, body in self.sections.items():
            out.append({"record": name, **body})
        return out
