"""Corpus ingestion: cleaning, fixed-width chunking, and seeded splits.

Raw text comes in through a JSON manifest (one record per source file),
gets cleaned down to lowercase letters and single spaces, is cut into
fixed-width character chunks, and finally divided into per-label
stratified train/test/validation sets.
"""

from __future__ import annotations

import json
import random
import re
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path


class ManifestError(Exception):
    """A manifest entry could not be loaded or validated."""


_LABEL_RE = re.compile(r"^[a-z]{3}$")

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")

# Characters whose Unicode category is in one of these groups are dropped
# outright: punctuation, numerics, control and format characters.
_DROP_CATEGORIES = ("P", "N")
_DROP_EXACT = ("Cc", "Cf")


class _DropTable(dict):
    # str.translate table that classifies characters lazily and caches.
    def __missing__(self, code):
        cat = unicodedata.category(chr(code))
        keep = not (cat.startswith(_DROP_CATEGORIES) or cat in _DROP_EXACT)
        self[code] = code if keep else None
        return self[code]


_DROP_TABLE = _DropTable()


def validate_label(code: str) -> str:
    """Check that a label is a 3-letter lowercase language code."""
    if not _LABEL_RE.match(code):
        raise ValueError(f"invalid language label {code!r}: expected 3 lowercase ascii letters")
    return code


@dataclass(frozen=True)
class RawDocument:
    """One uncleaned text unit tagged with its language and source domain."""

    text: str
    label: str
    domain: str
    source: str = ""
    line: int = 0


@dataclass(frozen=True)
class Sample:
    """A cleaned fixed-width chunk. (text, label, source, seq) is its identity."""

    text: str
    label: str
    domain: str
    source: str = ""
    seq: int = 0


@dataclass
class DatasetSplit:
    train: list[Sample]
    test: list[Sample]
    valid: list[Sample]
    seed: int


def clean_text(raw: str) -> str:
    """Normalize raw text for classification.

    URLs are replaced by a space; punctuation, digits and other numeric
    characters, and control/format characters are removed; everything is
    lowercased; whitespace runs collapse to a single space. Letters with
    diacritics pass through untouched. Total: never raises.
    """
    s = _URL_RE.sub(" ", raw)
    s = s.translate(_DROP_TABLE).lower()
    return _WS_RE.sub(" ", s).strip()


def chunk(text: str, width: int) -> list[str]:
    """Cut text into consecutive non-overlapping windows of exactly `width`.

    A trailing remainder shorter than `width` is discarded.
    """
    if width < 1:
        raise ValueError("chunk width must be >= 1")
    n = len(text) // width
    return [text[i * width : (i + 1) * width] for i in range(n)]


def build_samples(docs: list[RawDocument], width: int = 100) -> list[Sample]:
    """Clean and chunk a list of documents into Samples.

    `seq` numbers chunks consecutively within each source so identities
    stay unique even when chunk texts collide.
    """
    counters: dict[str, int] = {}
    samples = []
    for doc in docs:
        cleaned = clean_text(doc.text)
        for piece in chunk(cleaned, width):
            seq = counters.get(doc.source, 0)
            counters[doc.source] = seq + 1
            samples.append(Sample(piece, doc.label, doc.domain, doc.source, seq))
    return samples


def _apportion(count: int, ratios: tuple[float, float, float]) -> list[int]:
    # Largest-remainder allocation; keeps every part within 1 of ratio*count.
    ideal = [count * r for r in ratios]
    alloc = [int(x) for x in ideal]
    remainders = [(ideal[i] - alloc[i], -i) for i in range(3)]
    for _ in range(count - sum(alloc)):
        j = max(range(3), key=lambda i: remainders[i])
        alloc[j] += 1
        remainders[j] = (-1.0, remainders[j][1])
    if alloc[0] == 0:
        # Training must see every label; take one from the most
        # over-allocated part (stays within the +/-1 guarantee).
        j = max((1, 2), key=lambda i: alloc[i] - ideal[i])
        alloc[j] -= 1
        alloc[0] += 1
    return alloc


def split_dataset(
    samples: list[Sample],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DatasetSplit:
    """Per-label stratified shuffle into train/test/valid.

    Deterministic in (samples, ratios, seed). Each label's contribution
    to each split is within one sample of ratio * count. Raises if any
    label has fewer than 3 samples or ratios do not sum to 1.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError("ratios must be three positive fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1.0, got {sum(ratios)}")
    identities = set()
    by_label: dict[str, list[Sample]] = {}
    for s in samples:
        key = (s.text, s.label, s.source, s.seq)
        if key in identities:
            raise ValueError(f"duplicate sample identity {key[1:]} + text")
        identities.add(key)
        by_label.setdefault(s.label, []).append(s)

    split = DatasetSplit([], [], [], seed)
    for label in sorted(by_label):
        group = list(by_label[label])
        if len(group) < 3:
            raise ValueError(f"label {label!r} has {len(group)} samples; need at least 3 to stratify")
        rng = random.Random(f"{seed}:{label}")
        rng.shuffle(group)
        n_train, n_test, _ = _apportion(len(group), tuple(ratios))
        split.train.extend(group[:n_train])
        split.test.extend(group[n_train : n_train + n_test])
        split.valid.extend(group[n_train + n_test :])
    return split


def _parse_manifest(path: Path) -> list[tuple[str, Path, str, str, str]]:
    # Validate the manifest itself up front; file reading happens later.
    try:
        entries = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}")
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}")
    if not isinstance(entries, list):
        raise ManifestError(f"manifest {path} must be a JSON array of records")

    parsed = []
    for i, entry in enumerate(entries):
        where = f"{path} entry {i}"
        if not isinstance(entry, dict):
            raise ManifestError(f"{where}: record must be an object")
        unknown = set(entry) - {"path", "label", "domain", "format"}
        if unknown:
            raise ManifestError(f"{where}: unknown keys {sorted(unknown)}")
        try:
            src = entry["path"]
            label = entry["label"]
        except KeyError as exc:
            raise ManifestError(f"{where}: missing required key {exc}")
        try:
            validate_label(label)
        except ValueError as exc:
            raise ManifestError(f"{where}: {exc}")
        domain = entry.get("domain", "unknown")
        fmt = entry.get("format", "lines")
        if fmt not in ("lines", "whole"):
            raise ManifestError(f"{where}: format must be 'lines' or 'whole', got {fmt!r}")
        src_path = Path(src)
        if not src_path.is_absolute():
            src_path = path.parent / src_path
        parsed.append((where, src_path, label, domain, fmt))
    return parsed


def _read_source(where: str, src_path: Path, label: str, domain: str, fmt: str):
    if not src_path.exists():
        raise ManifestError(f"{where}: file not found: {src_path}")
    try:
        content = src_path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ManifestError(f"{where}: {src_path} is not valid UTF-8 at byte {exc.start}")

    if fmt == "whole":
        if not content.strip():
            raise ManifestError(f"{where}: {src_path} is empty")
        return [RawDocument(content, label, domain, str(src_path), 1)]
    return [
        RawDocument(line, label, domain, str(src_path), lineno)
        for lineno, line in enumerate(content.splitlines(), start=1)
        if line.strip()
    ]


def manifest_sources(path: str | Path) -> list[Path]:
    """The source files a manifest references, in manifest order."""
    return [src for _, src, _, _, _ in _parse_manifest(Path(path))]


def load_manifest(path: str | Path, workers: int = 1) -> list[RawDocument]:
    """Read a JSON manifest and all the source files it references.

    The manifest is a JSON array of records
    ``{"path": ..., "label": ..., "domain": ..., "format": "lines"|"whole"}``
    with paths resolved relative to the manifest file. ``lines`` yields
    one document per non-empty line; ``whole`` yields a single document.

    With workers > 1, source files are read concurrently; results are
    still merged in manifest order, so output never depends on timing.
    """
    entries = _parse_manifest(Path(path))
    if workers <= 1:
        batches = [_read_source(*entry) for entry in entries]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(lambda entry: _read_source(*entry), entries))
    return [doc for batch in batches for doc in batch]


def write_split_files(split: DatasetSplit, out_dir: str | Path) -> dict[str, Path]:
    """Write train/test/valid TSV files (label, domain, text per line)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name in ("train", "test", "valid"):
        p = out_dir / f"{name}.tsv"
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            for s in getattr(split, name):
                fh.write(f"{s.label}\t{s.domain}\t{s.text}\n")
        paths[name] = p
    return paths


def read_split_file(path: str | Path) -> list[Sample]:
    """Read one TSV split file written by write_split_files."""
    path = Path(path)
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ManifestError(f"{path}:{lineno}: expected 3 tab-separated fields")
            label, domain, text = parts
            samples.append(Sample(text, label, domain, str(path), lineno))
    return samples
