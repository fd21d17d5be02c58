"""Similarity-graded dataset variants built by splicing parallel texts.

Given an example and its translation, each output dataset replaces the
first fraction of the example's input with the translated text: at
fraction 0 the input is the untouched source, at 1 the untouched
translation, and in between the first ceil(fraction * len(translation))
units of the translation are joined to the last floor((1 - fraction) *
len(source)) units of the source. Labels and target sets never change
across a series, so only textual similarity moves.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import TaskExample, read_task_examples, write_task_examples
from .errors import MissingValueError, ValidationFailure
from .util import sha256_file

log = logging.getLogger(__name__)

CHARACTER = "character"
WHITESPACE_TOKEN = "whitespace_token"
DEFAULT_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class ParallelExample:
    id: str
    source_text: str
    target_text: str
    language: str

    def __post_init__(self):
        if not self.source_text or not self.target_text:
            raise ValidationFailure(f"example '{self.id}': parallel texts must be non-empty")


@dataclass(frozen=True)
class TitrationSpec:
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    boundary_unit: str = WHITESPACE_TOKEN

    def __post_init__(self):
        fr = self.fractions
        if any(not 0.0 <= f <= 1.0 for f in fr):
            raise ValidationFailure("fractions must lie in [0, 1]")
        if list(fr) != sorted(set(fr)):
            raise ValidationFailure("fractions must be strictly increasing")
        if not fr or fr[0] != 0.0 or fr[-1] != 1.0:
            raise ValidationFailure("fractions must include the endpoints 0 and 1")
        if self.boundary_unit not in (CHARACTER, WHITESPACE_TOKEN):
            raise ValidationFailure(f"unknown boundary unit '{self.boundary_unit}'")


def _units(text: str, unit: str) -> list[str]:
    return list(text) if unit == CHARACTER else text.split()


def _join(units: list[str], unit: str) -> str:
    return "".join(units) if unit == CHARACTER else " ".join(units)


def splice(pair: ParallelExample, fraction: float, unit: str = WHITESPACE_TOKEN) -> str:
    """Translated prefix + source suffix at the given fraction.

    Endpoints return the respective text verbatim (no unit round-trip), so
    fraction-0 and fraction-1 outputs are byte-identical to the inputs.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValidationFailure(f"fraction {fraction} outside [0, 1]")
    if fraction == 0.0:
        return pair.source_text
    if fraction == 1.0:
        return pair.target_text
    target_units = _units(pair.target_text, unit)
    source_units = _units(pair.source_text, unit)
    n_prefix = math.ceil(fraction * len(target_units))
    n_suffix = math.floor((1.0 - fraction) * len(source_units))
    prefix = target_units[:n_prefix]
    suffix = source_units[len(source_units) - n_suffix :] if n_suffix > 0 else []
    return _join(prefix + suffix, unit)


@dataclass(frozen=True)
class TitrationSeries:
    language: str
    fractions: tuple[float, ...]
    datasets: tuple[Path, ...]  # one task file per fraction, aligned with fractions
    manifest_path: Path


def _pair_examples(
    source: list[TaskExample], target: list[TaskExample], language: str
) -> list[tuple[TaskExample, ParallelExample]]:
    target_by_id = {ex.id: ex for ex in target}
    missing = [ex.id for ex in source if ex.id not in target_by_id]
    if missing:
        raise MissingValueError(f"no parallel counterpart for ids: {', '.join(missing[:10])}")
    pairs = []
    for ex in source:
        pairs.append(
            (ex, ParallelExample(id=ex.id, source_text=ex.input, target_text=target_by_id[ex.id].input, language=language))
        )
    return pairs


def build_titration_series(
    source_path: Path | str,
    target_path: Path | str,
    out_dir: Path | str,
    language: str,
    spec: TitrationSpec = TitrationSpec(),
    splice_targets: bool = False,
) -> TitrationSeries:
    """One task dataset per fraction, same ids and labels throughout.

    ``splice_targets`` switches every output in the series to the translated
    file's target strings (for tasks whose answer options are language-
    specific); the default keeps the source-language targets everywhere.
    """
    source_path = Path(source_path)
    target_path = Path(target_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    source = read_task_examples(source_path)
    target = read_task_examples(target_path)
    pairs = _pair_examples(source, target, language)
    target_by_id = {ex.id: ex for ex in target}

    dataset_paths: list[Path] = []
    for fraction in spec.fractions:
        rows = []
        for src_ex, pair in pairs:
            answer_ex = target_by_id[src_ex.id] if splice_targets else src_ex
            rows.append(
                TaskExample(
                    id=src_ex.id,
                    input=splice(pair, fraction, spec.boundary_unit),
                    targets=answer_ex.targets,
                    correct_index=answer_ex.correct_index,
                    instruction=src_ex.instruction,
                )
            )
        path = out_dir / f"{language}-frac{int(round(fraction * 100)):03d}.jsonl"
        write_task_examples(path, rows)
        dataset_paths.append(path)

    manifest = {
        "language": language,
        "fractions": list(spec.fractions),
        "boundary_unit": spec.boundary_unit,
        "splice_targets": splice_targets,
        "datasets": [p.name for p in dataset_paths],
        "source_hashes": {
            "source": sha256_file(source_path),
            "target": sha256_file(target_path),
        },
    }
    manifest_path = out_dir / f"{language}-series.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
    log.info("built %d-fraction series for '%s' in %s", len(spec.fractions), language, out_dir)
    return TitrationSeries(
        language=language,
        fractions=spec.fractions,
        datasets=tuple(dataset_paths),
        manifest_path=manifest_path,
    )
