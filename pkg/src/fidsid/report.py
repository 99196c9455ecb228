"""Run manifests and the model x dataset score grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from . import fid as fid_mod
from . import sid as sid_mod
from .core import (FidConfig, InputError, MetricKind, MetricScore,
                   Role, SidConfig, format_score)
from .io import load_features

LITERAL_DIGEST = "literal"
SID_NORMALIZATION = ("per-batch partial = sum over centers and test points of "
                     "(generated kernel sum - reference kernel sum) / (test_points * centers); "
                     "score = mean of partials over batches")


class ManifestError(InputError):
    pass


@dataclass(frozen=True)
class ReportRow:
    model: str
    dataset: str
    epoch: int
    fid: Optional[MetricScore] = None
    sid: Optional[MetricScore] = None

    def __post_init__(self):
        if self.fid is None and self.sid is None:
            raise ManifestError(f"{self.model}/{self.dataset}/{self.epoch}: no score present")


@dataclass
class RunSpec:
    model: str
    dataset: str
    epoch: int
    fid_literal: Optional[float] = None
    sid_literal: Optional[float] = None
    ref: Optional[Path] = None
    gen: Optional[Path] = None
    metrics: tuple = ("fid", "sid")
    fid_config: FidConfig = field(default_factory=FidConfig)
    sid_config: SidConfig = field(default_factory=SidConfig)


_FID_KEYS = {"eps": float, "ddof": int}
_SID_KEYS = {"order_m": int, "side_r": float, "batches_n": int, "test_points_mx": int,
             "seed": int, "kernel_eps": float, "standardize": bool}


def _config(raw, keys, cls, base, where):
    if raw is None:
        return base
    if not isinstance(raw, dict):
        raise ManifestError(f"{where}: config must be a mapping")
    unknown = set(raw) - set(keys)
    if unknown:
        raise ManifestError(f"{where}: unknown config keys {sorted(unknown)}")
    try:
        values = {k: (keys[k](raw[k]) if keys[k] is not bool else _as_bool(raw[k]))
                  for k in raw}
        merged = {**{k: getattr(base, k) for k in keys}, **values}
        return cls(**merged)
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"{where}: {exc}") from exc


def _as_bool(v):
    if isinstance(v, bool):
        return v
    raise ValueError(f"expected true/false, got {v!r}")


def _literal(raw, where):
    if raw is None:
        return None
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ManifestError(f"{where}: score {raw!r} is not a number") from None
    if not math.isfinite(value):
        raise ManifestError(f"{where}: score {raw!r} is not finite")
    return value


def load_manifest(path) -> list:
    """Parse a YAML (or JSON) manifest into :class:`RunSpec` entries.

    Feature paths are resolved relative to the manifest's directory and must
    exist.
    """
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"{path}: {exc.strerror or exc}") from exc
    except yaml.YAMLError as exc:
        raise ManifestError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("runs"), list) or not doc["runs"]:
        raise ManifestError(f"{path}: expected a mapping with a non-empty 'runs' list")
    defaults = doc.get("defaults") or {}
    base_fid = _config(defaults.get("fid"), _FID_KEYS, FidConfig, FidConfig(), f"{path}: defaults.fid")
    base_sid = _config(defaults.get("sid"), _SID_KEYS, SidConfig, SidConfig(), f"{path}: defaults.sid")

    runs = []
    seen = set()
    for i, raw in enumerate(doc["runs"]):
        where = f"{path}: runs[{i}]"
        if not isinstance(raw, dict):
            raise ManifestError(f"{where}: expected a mapping")
        try:
            model, dataset = str(raw["model"]), str(raw["dataset"])
            epoch = int(raw["epoch"])
        except KeyError as exc:
            raise ManifestError(f"{where}: missing field {exc}") from None
        except (TypeError, ValueError):
            raise ManifestError(f"{where}: epoch must be an integer") from None
        key = (model, dataset, epoch)
        if key in seen:
            raise ManifestError(f"{where}: duplicate entry for {key}")
        seen.add(key)
        run = RunSpec(model, dataset, epoch,
                      fid_literal=_literal(raw.get("fid"), where),
                      sid_literal=_literal(raw.get("sid"), where),
                      fid_config=_config(raw.get("fid_config"), _FID_KEYS, FidConfig, base_fid, where),
                      sid_config=_config(raw.get("sid_config"), _SID_KEYS, SidConfig, base_sid, where))
        if run.fid_literal is not None and run.fid_literal < 0:
            raise ManifestError(f"{where}: FID literal {run.fid_literal} is negative")
        if "ref" in raw or "gen" in raw:
            if "ref" not in raw or "gen" not in raw:
                raise ManifestError(f"{where}: 'ref' and 'gen' must be given together")
            run.ref = (path.parent / str(raw["ref"]))
            run.gen = (path.parent / str(raw["gen"]))
            for p in (run.ref, run.gen):
                if not p.is_file():
                    raise ManifestError(f"{where}: feature file {p} does not exist")
            metrics = raw.get("metrics", ["fid", "sid"])
            if not isinstance(metrics, list) or not set(metrics) <= {"fid", "sid"} or not metrics:
                raise ManifestError(f"{where}: metrics must be a list drawn from [fid, sid]")
            run.metrics = tuple(metrics)
        elif run.fid_literal is None and run.sid_literal is None:
            raise ManifestError(f"{where}: needs literal scores or ref/gen feature paths")
        runs.append(run)
    return runs


def evaluate_runs(runs, threads: Optional[int] = None) -> list:
    rows = []
    cache = {}

    def features(p, role):
        key = (p.resolve(), role)
        if key not in cache:
            cache[key] = load_features(p, role)
        return cache[key]

    for run in runs:
        fid_score = sid_score = None
        if run.fid_literal is not None:
            fid_score = MetricScore(MetricKind.FID, run.fid_literal, LITERAL_DIGEST, 0, 0)
        if run.sid_literal is not None:
            sid_score = MetricScore(MetricKind.SID, run.sid_literal, LITERAL_DIGEST, 0, 0)
        if run.ref is not None:
            ref = features(run.ref, Role.REFERENCE)
            gen = features(run.gen, Role.GENERATED)
            if "fid" in run.metrics and fid_score is None:
                fid_score = fid_mod.fid_from_features(ref, gen, run.fid_config)
            if "sid" in run.metrics and sid_score is None:
                sid_score = sid_mod.sid_score(ref, gen, run.sid_config, threads)
        rows.append(ReportRow(run.model, run.dataset, run.epoch, fid_score, sid_score))
    return rows


def _grid(rows):
    datasets, groups = [], {}
    for row in rows:
        if row.dataset not in datasets:
            datasets.append(row.dataset)
        groups.setdefault((row.model, row.epoch), {})[row.dataset] = row
    return datasets, groups


def _row_label(model, epoch):
    return f"{model} after {epoch} epoch{'' if epoch == 1 else 's'}"


def render_text(rows) -> str:
    datasets, groups = _grid(rows)
    cell = lambda s: "-" if s is None else format_score(s.value)
    body = []
    for (model, epoch), cells in groups.items():
        line = [_row_label(model, epoch)]
        for ds in datasets:
            r = cells.get(ds)
            line += [cell(r.fid if r else None), cell(r.sid if r else None)]
        body.append(line)
    width = max(12, *(len(v) for line in body for v in line[1:]))
    label_w = max(len(line[0]) for line in body)
    pair_w = 2 * width + 2
    head1 = " " * label_w + "".join("  " + ds[:pair_w].center(pair_w) for ds in datasets)
    head2 = " " * label_w + "".join("  " + "FID".rjust(width) + "  " + "SID".rjust(width)
                                    for _ in datasets)
    lines = [head1.rstrip(), head2.rstrip()]
    for line in body:
        lines.append(line[0].ljust(label_w) + "".join("  " + v.rjust(width) for v in line[1:]))
    return "\n".join(lines) + "\n"


def _score_dict(s):
    if s is None:
        return None
    d = s.to_dict()
    d["source"] = "literal" if s.config_digest == LITERAL_DIGEST else "computed"
    d["value_text"] = format_score(s.value)
    return d


def render_structured(rows) -> dict:
    datasets, groups = _grid(rows)
    out_rows = []
    for (model, epoch), cells in groups.items():
        out_rows.append({
            "model": model,
            "epoch": epoch,
            "label": _row_label(model, epoch),
            "cells": {ds: {"fid": _score_dict(cells[ds].fid), "sid": _score_dict(cells[ds].sid)}
                      for ds in datasets if ds in cells},
        })
    return {
        "kind": "report",
        "datasets": datasets,
        "rows": out_rows,
        "metadata": {"sid_normalization": SID_NORMALIZATION, "text_precision": 4},
    }
