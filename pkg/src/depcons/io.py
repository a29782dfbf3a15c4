"""Dataset files (JSON Lines), delimited reports (CSV) and config files (JSON)."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from depcons.dataset import (
    SEQUENTIAL,
    TWO_PHASE,
    Dataset,
    LabelScale,
    make_scale,
    numeric_scale,
    review_scale,
    to_raw,
    validate_dataset,
)
from depcons.errors import ConfigInvalid, DepconsError, ParseError
from depcons.simulate import SimConfig, WorkerProfile

SEQUENTIAL_FIELDS = ("question_id", "worker_id", "order_index", "label", "timestamp")
TWO_PHASE_FIELDS = ("question_id", "worker_id", "prior_label", "posterior_label")
TRUTH_FIELDS = ("question_id", "truth_label")


def read_jsonl(path: str | Path) -> tuple[list[dict[str, Any]], list[int]]:
    """Objects and their 1-based line numbers; blank lines are skipped."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such file")
    records, lines = [], []
    with path.open(encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno, path=str(path)) from None
            if not isinstance(obj, dict):
                raise ParseError("each line must be a JSON object", line=lineno, path=str(path))
            records.append(obj)
            lines.append(lineno)
    return records, lines


def write_jsonl(path: str | Path, rows: Iterable[Mapping[str, Any]]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def _require(records, lines, fields, path) -> None:
    for rec, lineno in zip(records, lines):
        for name in fields:
            if name not in rec:
                raise ParseError(f"missing field {name!r}", line=lineno, path=str(path))


def _parse(path, scale, mode, fields) -> Dataset:
    records, lines = read_jsonl(path)
    _require(records, lines, fields, path)
    try:
        return validate_dataset(records, scale, mode, lines=lines)
    except DepconsError as exc:
        exc.path = str(path)
        raise


def parse_sequential_file(path: str | Path, scale: LabelScale | None = None) -> Dataset:
    return _parse(path, scale or review_scale(), SEQUENTIAL, ("question_id", "worker_id", "order_index", "label"))


def parse_two_phase_file(path: str | Path, scale: LabelScale | None = None) -> Dataset:
    return _parse(path, scale or review_scale(), TWO_PHASE, TWO_PHASE_FIELDS)


def detect_mode(path: str | Path) -> str:
    records, _ = read_jsonl(path)
    if records and "prior_label" in records[0]:
        return TWO_PHASE
    return SEQUENTIAL


def parse_dataset_file(path: str | Path, scale: LabelScale | None = None, mode: str | None = None) -> Dataset:
    mode = mode or detect_mode(path)
    if mode == TWO_PHASE:
        return parse_two_phase_file(path, scale)
    return parse_sequential_file(path, scale)


def write_dataset(path: str | Path, dataset: Dataset) -> None:
    write_jsonl(path, to_raw(dataset))


def write_truth(path: str | Path, truth: Mapping[str, int], scale: LabelScale) -> None:
    write_jsonl(path, ({"question_id": q, "truth_label": scale.decode(s)} for q, s in sorted(truth.items())))


def read_truth(path: str | Path, scale: LabelScale) -> dict[str, int]:
    records, lines = read_jsonl(path)
    _require(records, lines, TRUTH_FIELDS, path)
    truth = {}
    for rec, lineno in zip(records, lines):
        try:
            truth[str(rec["question_id"])] = scale.encode(str(rec["truth_label"]))
        except DepconsError as exc:
            exc.line, exc.path = lineno, str(path)
            raise
    return truth


def read_scale_file(path: str | Path) -> LabelScale:
    """A JSON list of labels (worst first), or plain text with one label per line."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such file")
    text = path.read_text(encoding="utf-8")
    try:
        labels = json.loads(text)
    except json.JSONDecodeError:
        labels = [line.strip() for line in text.splitlines() if line.strip()]
    if isinstance(labels, dict):
        labels = labels.get("labels")
    if not isinstance(labels, list):
        raise ParseError("scale file must hold a list of labels", path=str(path))
    return make_scale([str(x) for x in labels])


def write_scale_file(path: str | Path, scale: LabelScale) -> None:
    Path(path).write_text(json.dumps({"labels": list(scale.labels)}, indent=2) + "\n", encoding="utf-8")


def resolve_scale(k: int | None = None, scale_file: str | Path | None = None) -> LabelScale:
    if scale_file is not None:
        return read_scale_file(scale_file)
    if k is not None:
        return numeric_scale(k)
    return review_scale()


def fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_table(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_metrics(path: str | Path, rows, summary_path: str | Path | None = None, summaries=()) -> None:
    write_table(
        path,
        ("worker_id", "question_id", "drop", "deviation_ratio", "reliability", "accuracy", "weight"),
        ((r.worker_id, r.question_id, r.drop, r.deviation_ratio, r.reliability, r.accuracy, r.weight) for r in rows),
    )
    if summary_path is not None:
        write_table(
            summary_path,
            ("worker_id", "n_questions", "mean_drop", "mean_reliability", "mean_accuracy", "mean_weight"),
            (
                (s.worker_id, s.n_questions, s.mean_drop, s.mean_reliability, s.mean_accuracy, s.mean_weight)
                for s in summaries
            ),
        )


def write_consensus(path: str | Path, results) -> None:
    write_table(
        path,
        ("question_id", "method", "aggregate_score", "final_label", "fallback"),
        ((r.question_id, r.method, r.aggregate_score, r.final_label, int(r.fallback)) for r in results),
    )


def write_recovery(path: str | Path, rows) -> None:
    write_table(
        path,
        ("method", "n_questions", "exact_match_rate", "mae"),
        ((r.method, r.n_questions, r.exact_match_rate, r.mae) for r in rows),
    )


def write_opinion_recovery(path: str | Path, rows) -> None:
    write_table(path, ("method", "n_opinions", "match_rate"), ((r.method, r.n_opinions, r.match_rate) for r in rows))


def write_posteriors(path: str | Path, inferences) -> None:
    rows = []
    for inf in inferences:
        for w, probs in zip(inf.worker_ids, inf.table.probabilities):
            rows.extend((inf.question_id, w, s, float(p)) for s, p in enumerate(probs, start=1))
    write_table(path, ("question_id", "worker_id", "score", "probability"), rows)


def write_map(path: str | Path, inferences) -> None:
    rows = [
        (inf.question_id, w, order, shown, mapped)
        for inf in inferences
        for order, (w, shown, mapped) in enumerate(zip(inf.worker_ids, inf.table.disclosed, inf.map_scores))
    ]
    write_table(path, ("question_id", "worker_id", "order_index", "disclosed_score", "map_score"), rows)


def write_profiles(path: str | Path, profiles) -> None:
    write_table(
        path,
        ("worker_id", "competence_sigma", "conformity_gamma"),
        ((p.worker_id, p.competence_sigma, p.conformity_gamma) for p in profiles),
    )


def read_profiles(path: str | Path) -> list[WorkerProfile]:
    try:
        return [
            WorkerProfile(r["worker_id"], float(r["competence_sigma"]), float(r["conformity_gamma"]))
            for r in read_table(path)
        ]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad profile table: {exc}", path=str(path)) from None


SIM_KEYS = {
    "workers", "questions", "mode", "seed", "replications", "profiles", "sigma_range",
    "gamma_range", "disclosure", "target", "arrival", "truth", "scale",
}


def load_sim_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> SimConfig:
    """Read a JSON simulation config; ``overrides`` (non-``None`` values) win.

    Keys: ``workers, questions, mode, seed, replications, sigma_range,
    gamma_range, disclosure, target, arrival, truth``; ``scale`` is either an
    integer ``k`` or a list of labels; ``profiles`` is a list of objects with
    ``worker_id, competence_sigma, conformity_gamma``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such file")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=str(path)) from None
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a JSON object", path=str(path))
    unknown = set(raw) - SIM_KEYS
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}", path=str(path))
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return sim_config_from_dict(raw)
    except DepconsError as exc:
        exc.path = str(path)
        raise


def sim_config_from_dict(raw: Mapping[str, Any]) -> SimConfig:
    raw = dict(raw)
    scale = raw.pop("scale", None)
    if isinstance(scale, LabelScale):
        pass
    elif isinstance(scale, list):
        scale = make_scale([str(x) for x in scale])
    elif scale is None:
        scale = review_scale()
    else:
        scale = numeric_scale(int(scale))
    profiles = raw.pop("profiles", None)
    if profiles is not None:
        profiles = tuple(p if isinstance(p, WorkerProfile) else WorkerProfile(**p) for p in profiles)
    kwargs: dict[str, Any] = {"scale": scale, "profiles": profiles}
    if profiles is not None:
        kwargs["n_workers"] = len(profiles)
    if "workers" in raw:
        kwargs["n_workers"] = int(raw.pop("workers"))
    if "questions" in raw:
        kwargs["m_questions"] = int(raw.pop("questions"))
    for key in ("sigma_range", "gamma_range"):
        if key in raw:
            kwargs[key] = tuple(float(x) for x in raw.pop(key))
    kwargs.update(raw)
    try:
        return SimConfig(**kwargs)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from None
