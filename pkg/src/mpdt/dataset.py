"""Tabular data loading, discretization, binarization and stratified splits.

All values are immutable after construction; every operation returns new
objects, so datasets can be shared freely.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
import random
from dataclasses import dataclass, field

CONTINUOUS = "continuous"
ORDINAL = "ordinal"
NOMINAL = "nominal"
BINARY = "binary"

# all-numeric columns with more distinct values than this are continuous
_NUMERIC_DISTINCT_LIMIT = 8


class DatasetError(Exception):
    """Unusable input data (file shape, missing values, bad label)."""


class InseparableDataError(DatasetError):
    """Identical feature rows carry different labels; no pure tree exists."""

    def __init__(self, groups):
        self.groups = groups
        preview = ", ".join(str(g) for g in groups[:5])
        super().__init__(f"{len(groups)} conflicting example group(s): {preview}")


@dataclass(frozen=True)
class Column:
    kind: str  # continuous | ordinal | nominal | binary
    values: tuple


@dataclass(frozen=True)
class RawDataset:
    column_names: tuple[str, ...]
    columns: tuple[Column, ...]
    label_column: int
    n_rows: int

    def feature_indices(self):
        return [i for i in range(len(self.columns)) if i != self.label_column]


@dataclass(frozen=True)
class BinDataset:
    """Examples as fixed-width bit-vectors with integer class labels."""

    examples: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...]
    k: int
    n_classes: int
    # binary feature index -> (source column name, bit position, bit count)
    feature_provenance: dict[int, tuple[str, int, int]] = field(default_factory=dict)
    # source column name -> values in mapped order (index = encoded integer)
    column_domains: dict[str, tuple] = field(default_factory=dict)
    class_values: tuple = ()

    def __post_init__(self):
        if len(self.examples) != len(self.labels):
            raise DatasetError("examples and labels differ in length")
        for bits in self.examples:
            if len(bits) != self.k:
                raise DatasetError("bit-vector width differs from k")

    @property
    def n_rows(self) -> int:
        return len(self.examples)

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for y in self.labels:
            counts[y] = counts.get(y, 0) + 1
        return counts

    def subset(self, indices) -> "BinDataset":
        return BinDataset(
            examples=tuple(self.examples[i] for i in indices),
            labels=tuple(self.labels[i] for i in indices),
            k=self.k,
            n_classes=self.n_classes,
            feature_provenance=self.feature_provenance,
            column_domains=self.column_domains,
            class_values=self.class_values,
        )


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float
    selection_frac: float
    test_frac: float
    seed: int = 0

    def __post_init__(self):
        total = self.train_frac + self.selection_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise DatasetError(f"split fractions sum to {total}, expected 1.0")
        if min(self.train_frac, self.selection_frac, self.test_frac) <= 0:
            raise DatasetError("every split fraction must be positive")


def derive_seed(seed: int, tag: str) -> int:
    """Named sub-seed so independent random streams stay reproducible."""
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# --- loading --------------------------------------------------------------


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def load_csv(path: str, label: str) -> RawDataset:
    """Read a CSV with a mandatory header; infer column kinds.

    Inference: two-valued columns are binary; all-numeric columns with more
    than 8 distinct values are continuous; all-numeric up to 8 distinct are
    ordinal; anything else is nominal. `?` or empty cells are missing values
    and rejected.
    """
    if not os.path.exists(path):
        raise DatasetError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise DatasetError("empty file")
    header = [name.strip() for name in rows[0]]
    data_rows = rows[1:]
    if not data_rows:
        raise DatasetError("empty dataset: header without rows")
    if label not in header:
        raise DatasetError(f"label column {label!r} not in header {header}")
    width = len(header)
    for lineno, row in enumerate(data_rows, start=2):
        if len(row) != width:
            raise DatasetError(f"line {lineno}: expected {width} cells, found {len(row)}")
        for cell in row:
            if cell.strip() in ("", "?"):
                raise DatasetError(f"line {lineno}: missing value")
    label_idx = header.index(label)

    columns = []
    for c in range(width):
        cells = tuple(row[c].strip() for row in data_rows)
        if c == label_idx:
            columns.append(Column(NOMINAL, cells))
            continue
        distinct = sorted(set(cells))
        numeric = all(_is_number(v) for v in distinct)
        if len(distinct) == 2:
            kind = BINARY
        elif numeric and len(distinct) > _NUMERIC_DISTINCT_LIMIT:
            kind = CONTINUOUS
        elif numeric:
            kind = ORDINAL
        else:
            kind = NOMINAL
        if kind == CONTINUOUS:
            columns.append(Column(kind, tuple(float(v) for v in cells)))
        else:
            columns.append(Column(kind, cells))
    ds = RawDataset(tuple(header), tuple(columns), label_idx, len(data_rows))
    if len(set(columns[label_idx].values)) < 1:
        raise DatasetError("label column has no values")
    return ds


# --- discretization and binarization ---------------------------------------


def discretize(ds: RawDataset, n_bins: int = 8) -> RawDataset:
    """Replace continuous columns by equal-width bin indices 0..n_bins-1.

    The top of the range maps to the last bin; constant columns collapse to
    bin 0.
    """
    if n_bins < 2:
        raise DatasetError("n_bins must be >= 2")
    new_columns = []
    for idx, col in enumerate(ds.columns):
        if idx == ds.label_column or col.kind != CONTINUOUS:
            new_columns.append(col)
            continue
        lo, hi = min(col.values), max(col.values)
        if hi == lo:
            bins = tuple(0 for _ in col.values)
        else:
            width = (hi - lo) / n_bins
            bins = tuple(min(int((v - lo) / width), n_bins - 1) for v in col.values)
        new_columns.append(Column(ORDINAL, bins))
    return RawDataset(ds.column_names, tuple(new_columns), ds.label_column, ds.n_rows)


def _domain_order(col: Column):
    """Value order used for the integer mapping of a column."""
    distinct = list(dict.fromkeys(col.values))  # first appearance
    if col.kind in (ORDINAL, BINARY, CONTINUOUS):
        numeric = all(_is_number(str(v)) for v in distinct)
        if numeric:
            return sorted(distinct, key=float)
    if col.kind == ORDINAL:
        return sorted(distinct, key=str)
    return distinct


def binarize(ds: RawDataset) -> BinDataset:
    """Turn every feature column into big-endian bit features.

    A column with domain size d becomes ceil(log2(d)) features holding the
    bits of the value's position in the domain order (numeric order where
    values are numeric, first appearance otherwise). Binary columns map to a
    single feature; constant columns vanish.
    """
    for idx, col in enumerate(ds.columns):
        if idx != ds.label_column and col.kind == CONTINUOUS:
            raise DatasetError("continuous column present; discretize first")

    feature_bits: list[list[int]] = []
    provenance: dict[int, tuple[str, int, int]] = {}
    domains: dict[str, tuple] = {}
    for idx in ds.feature_indices():
        col = ds.columns[idx]
        name = ds.column_names[idx]
        order = _domain_order(col)
        domains[name] = tuple(order)
        d = len(order)
        if d < 2:
            continue
        n_bits = max(1, math.ceil(math.log2(d)))
        mapping = {v: i for i, v in enumerate(order)}
        codes = [mapping[v] for v in col.values]
        for bit in range(n_bits):
            shift = n_bits - 1 - bit  # big-endian: bit 0 is the most significant
            provenance[len(feature_bits)] = (name, bit, n_bits)
            feature_bits.append([(code >> shift) & 1 for code in codes])

    label_col = ds.columns[ds.label_column]
    class_order = list(dict.fromkeys(label_col.values))
    class_map = {v: i for i, v in enumerate(class_order)}
    labels = tuple(class_map[v] for v in label_col.values)

    examples = tuple(
        tuple(feature_bits[f][row] for f in range(len(feature_bits)))
        for row in range(ds.n_rows)
    )
    return BinDataset(
        examples=examples,
        labels=labels,
        k=len(feature_bits),
        n_classes=len(class_order),
        feature_provenance=provenance,
        column_domains=domains,
        class_values=tuple(class_order),
    )


def decode_example(ds: BinDataset, bits) -> dict:
    """Map one bit-vector back to per-column values via the provenance."""
    grouped: dict[str, list[tuple[int, int]]] = {}
    for f, bit in enumerate(bits):
        name, position, n_bits = ds.feature_provenance[f]
        grouped.setdefault(name, []).append((position, bit))
    decoded = {}
    for name, pairs in grouped.items():
        n_bits = len(pairs)
        code = 0
        for position, bit in sorted(pairs):
            code = (code << 1) | bit
        decoded[name] = ds.column_domains[name][code]
    return decoded


def check_separability(ds: BinDataset) -> list[list[int]]:
    """Maximal groups of row indices sharing a bit-vector but not a label."""
    by_bits: dict[tuple, list[int]] = {}
    for i, bits in enumerate(ds.examples):
        by_bits.setdefault(bits, []).append(i)
    conflicts = []
    for bits, idxs in by_bits.items():
        if len({ds.labels[i] for i in idxs}) > 1:
            conflicts.append(idxs)
    return conflicts


def resolve_conflicts_majority(ds: BinDataset) -> BinDataset:
    """Drop minority-label rows from every conflicting group (ties: keep the
    label appearing first)."""
    drop: set[int] = set()
    for group in check_separability(ds):
        counts: dict[int, int] = {}
        for i in group:
            counts[ds.labels[i]] = counts.get(ds.labels[i], 0) + 1
        best = max(counts, key=lambda y: (counts[y], -y))
        drop.update(i for i in group if ds.labels[i] != best)
    keep = [i for i in range(ds.n_rows) if i not in drop]
    return ds.subset(keep)


# --- stratified splitting ---------------------------------------------------


def _allocate(class_counts: dict[int, int], frac: float, total: int) -> dict[int, int]:
    """Per-class share of `total`, proportional with largest-remainder fixup.

    Ties go to the smaller class id; a class never yields more rows than it
    has.
    """
    shares = {}
    fractions = []
    for cls in sorted(class_counts):
        exact = class_counts[cls] * frac
        base = min(int(math.floor(exact)), class_counts[cls])
        shares[cls] = base
        fractions.append((-(exact - base), cls))
    remaining = total - sum(shares.values())
    fractions.sort()
    i = 0
    while remaining > 0 and i < len(fractions):
        cls = fractions[i][1]
        if shares[cls] < class_counts[cls]:
            shares[cls] += 1
            remaining -= 1
        i += 1
    # rare fallback when preferred classes were already exhausted
    while remaining > 0:
        for cls in sorted(class_counts):
            if shares[cls] < class_counts[cls]:
                shares[cls] += 1
                remaining -= 1
                break
        else:
            raise DatasetError("cannot allocate split: dataset too small")
    return shares


def _split_indices(ds: BinDataset, second_frac: float, rng: random.Random,
                   min_class_size: int = 0):
    """Partition row indices into (first, second); the second part holds
    ceil(n * second_frac) rows, allocated per class. Classes smaller than
    `min_class_size` stay whole in the first part."""
    by_class: dict[int, list[int]] = {}
    for i, y in enumerate(ds.labels):
        by_class.setdefault(y, []).append(i)
    forced_first: list[int] = []
    eligible: dict[int, list[int]] = {}
    for cls in sorted(by_class):
        if len(by_class[cls]) < min_class_size:
            forced_first.extend(by_class[cls])
        else:
            eligible[cls] = by_class[cls]
    n_eligible = sum(len(v) for v in eligible.values())
    total_second = min(math.ceil(ds.n_rows * second_frac), n_eligible)
    shares = _allocate({c: len(v) for c, v in eligible.items()}, second_frac, total_second)
    first, second = list(forced_first), []
    for cls in sorted(eligible):
        idxs = list(eligible[cls])
        rng.shuffle(idxs)
        take = shares[cls]
        second.extend(idxs[:take])
        first.extend(idxs[take:])
    return sorted(first), sorted(second)


def split_train_selection(ds: BinDataset, p: float, seed: int):
    """Two-way stratified split: fraction p to train, the rest to selection."""
    if not 0 < p < 1:
        raise DatasetError("train fraction p must lie strictly between 0 and 1")
    rng = random.Random(derive_seed(seed, "train-selection"))
    train_idx, sel_idx = _split_indices(ds, 1.0 - p, rng, min_class_size=2)
    return ds.subset(train_idx), ds.subset(sel_idx)


def split_off_test(ds: BinDataset, test_frac: float, seed: int):
    """Carve out a stratified test part of ceil(n * test_frac) rows."""
    if not 0 < test_frac < 1:
        raise DatasetError("test fraction must lie strictly between 0 and 1")
    rng = random.Random(derive_seed(seed, "test"))
    trainval_idx, test_idx = _split_indices(ds, test_frac, rng, min_class_size=3)
    return ds.subset(trainval_idx), ds.subset(test_idx)


def stratified_split(ds: BinDataset, spec: SplitSpec):
    """Three-way stratified split into (train, selection, test).

    The test part is carved out first (ceil of its fraction), then the
    remainder is split between train and selection; classes with fewer than
    three members stay entirely in train. Composing `split_off_test` and
    `split_train_selection` with the same seed gives identical parts.
    """
    trainval, test = split_off_test(ds, spec.test_frac, spec.seed)
    p = spec.train_frac / (spec.train_frac + spec.selection_frac)
    train, selection = split_train_selection(trainval, p, spec.seed)
    return train, selection, test


def concat(parts) -> BinDataset:
    """Concatenate splits of one dataset back together (row order as given)."""
    head = parts[0]
    examples, labels = [], []
    for part in parts:
        if part.k != head.k:
            raise DatasetError("cannot concat datasets of different widths")
        examples.extend(part.examples)
        labels.extend(part.labels)
    return BinDataset(
        examples=tuple(examples),
        labels=tuple(labels),
        k=head.k,
        n_classes=head.n_classes,
        feature_provenance=head.feature_provenance,
        column_domains=head.column_domains,
        class_values=head.class_values,
    )


# --- binarized text export ---------------------------------------------------


def write_binarized(ds: BinDataset, path: str) -> None:
    """One line per example: k space-separated bits then the class id,
    preceded by a `k n_rows n_classes` header line."""
    lines = [f"{ds.k} {ds.n_rows} {ds.n_classes}"]
    for bits, y in zip(ds.examples, ds.labels):
        lines.append(" ".join(str(b) for b in bits) + f" {y}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_binarized(path: str) -> BinDataset:
    with open(path, encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise DatasetError("empty binarized file")
    try:
        k, n_rows, n_classes = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise DatasetError(f"malformed header line: {lines[0]!r}") from exc
    if len(lines) - 1 != n_rows:
        raise DatasetError(f"expected {n_rows} rows, found {len(lines) - 1}")
    examples, labels = [], []
    for line in lines[1:]:
        nums = [int(tok) for tok in line.split()]
        if len(nums) != k + 1:
            raise DatasetError(f"row with {len(nums)} fields, expected {k + 1}")
        bits, y = nums[:-1], nums[-1]
        if any(b not in (0, 1) for b in bits) or not 0 <= y < n_classes:
            raise DatasetError(f"out-of-range value in row: {line!r}")
        examples.append(tuple(bits))
        labels.append(y)
    provenance = {f: (f"f{f}", 0, 1) for f in range(k)}
    domains = {f"f{f}": (0, 1) for f in range(k)}
    return BinDataset(tuple(examples), tuple(labels), k, n_classes,
                      provenance, domains, tuple(range(n_classes)))
