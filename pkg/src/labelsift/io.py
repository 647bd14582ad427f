"""File loaders and writers: CSV tables, IDX image pairs, line-based text
corpora with word2vec-format embeddings, and plain label files."""

import csv
import logging
import struct
from pathlib import Path

import numpy as np

from .data import Dataset, EmbeddingTable, embed_document, one_hot_encode
from .errors import ConfigurationError, DataError

log = logging.getLogger("labelsift.io")

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


def _factorize(values):
    """Map values to class indices in first-appearance order."""
    names = []
    lookup = {}
    idx = np.empty(len(values), dtype=np.int64)
    for i, v in enumerate(values):
        if v not in lookup:
            lookup[v] = len(names)
            names.append(v)
        idx[i] = lookup[v]
    return idx, names


def load_tabular(path, label_column, has_header: bool = True) -> Dataset:
    """Load a CSV classification table.

    All non-label columns must parse as numbers and become the features; the
    label column is factorized (first-appearance order) and one-hot encoded.
    label_column is a column name (requires a header) or a 0-based index.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError("FILE_UNREADABLE", f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError("EMPTY_FILE", f"{path} contains no rows")

    header = rows[0] if has_header else None
    data_rows = rows[1:] if has_header else rows
    if not data_rows:
        raise DataError("EMPTY_DATASET", f"{path} has a header but no data rows")
    width = len(data_rows[0])

    if isinstance(label_column, str):
        if header is None:
            raise ConfigurationError(
                "LABEL_COLUMN_NEEDS_HEADER", "selecting the label column by name requires a header row"
            )
        if label_column not in header:
            raise ConfigurationError(
                "MISSING_LABEL_COLUMN", f"label column {label_column!r} not found in header {header}"
            )
        label_pos = header.index(label_column)
    else:
        label_pos = int(label_column)
        if not 0 <= label_pos < width:
            raise ConfigurationError(
                "MISSING_LABEL_COLUMN", f"label column index {label_pos} out of range for {width} columns"
            )

    features = np.empty((len(data_rows), width - 1), dtype=np.float32)
    raw_labels = []
    offset = 2 if has_header else 1  # 1-based file line numbers in messages
    for i, row in enumerate(data_rows):
        if len(row) != width:
            raise DataError("RAGGED_ROW", f"line {i + offset}: expected {width} cells, got {len(row)}")
        col = 0
        for j, cell in enumerate(row):
            if j == label_pos:
                continue
            try:
                features[i, col] = float(cell)
            except ValueError:
                raise DataError(
                    "UNPARSEABLE_CELL", f"line {i + offset}, column {j + 1}: {cell!r} is not a number"
                ) from None
            col += 1
        raw_labels.append(row[label_pos])

    idx, names = _factorize(raw_labels)
    labels = one_hot_encode(idx, len(names))
    return Dataset(features=features, labels=labels, kind="numerical", class_names=names)


def write_tabular(dataset: Dataset, path, header: bool = True):
    """Write a 2-d dataset as CSV. Feature values are written in shortest
    float32 round-trip form, so reloading reproduces them bit-exactly."""
    if dataset.features.ndim != 2:
        raise ConfigurationError("NOT_TABULAR", "only (N, D) datasets can be written as CSV")
    idx = dataset.label_indices
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"f{j}" for j in range(dataset.features.shape[1])] + ["label"])
        for i in range(dataset.n):
            row = [str(v) for v in dataset.features[i]]
            row.append(str(dataset.label_name(int(idx[i]))))
            writer.writerow(row)


def _read_be_u32(fh, path):
    chunk = fh.read(4)
    if len(chunk) < 4:
        raise DataError("IDX_TRUNCATED", f"{path}: file ends inside the header")
    return struct.unpack(">I", chunk)[0]


def load_idx_images(images_path, labels_path, replicate_channels: bool = False) -> Dataset:
    """Load an IDX image/label file pair (big-endian, unsigned byte payload).

    Pixels become float32 values in [0, 255] with a trailing channel axis;
    replicate_channels=True repeats the grayscale plane into 3 channels.
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    with open(images_path, "rb") as fh:
        magic = _read_be_u32(fh, images_path)
        if magic != IDX_IMAGE_MAGIC:
            raise DataError(
                "IDX_BAD_MAGIC", f"{images_path}: expected image magic {IDX_IMAGE_MAGIC:#010x}, got {magic:#010x}"
            )
        count = _read_be_u32(fh, images_path)
        rows = _read_be_u32(fh, images_path)
        cols = _read_be_u32(fh, images_path)
        if count == 0:
            raise DataError("IDX_EMPTY", f"{images_path}: image count is 0")
        payload = fh.read(count * rows * cols)
        if len(payload) < count * rows * cols:
            raise DataError(
                "IDX_TRUNCATED",
                f"{images_path}: payload holds {len(payload)} bytes, header promises {count * rows * cols}",
            )
    with open(labels_path, "rb") as fh:
        magic = _read_be_u32(fh, labels_path)
        if magic != IDX_LABEL_MAGIC:
            raise DataError(
                "IDX_BAD_MAGIC", f"{labels_path}: expected label magic {IDX_LABEL_MAGIC:#010x}, got {magic:#010x}"
            )
        label_count = _read_be_u32(fh, labels_path)
        if label_count != count:
            raise DataError(
                "IDX_COUNT_MISMATCH", f"{count} images in {images_path} but {label_count} labels in {labels_path}"
            )
        label_bytes = fh.read(label_count)
        if len(label_bytes) < label_count:
            raise DataError("IDX_TRUNCATED", f"{labels_path}: payload holds fewer labels than the header promises")

    images = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols, 1).astype(np.float32)
    if replicate_channels:
        images = np.repeat(images, 3, axis=3)
    raw = np.frombuffer(label_bytes, dtype=np.uint8)
    values = sorted(int(v) for v in np.unique(raw))
    remap = {v: i for i, v in enumerate(values)}
    idx = np.array([remap[int(v)] for v in raw], dtype=np.int64)
    labels = one_hot_encode(idx, len(values))
    return Dataset(features=images, labels=labels, kind="image", class_names=[str(v) for v in values])


def write_idx_images(dataset: Dataset, images_path, labels_path):
    """Write a single-channel image dataset back to an IDX pair."""
    if dataset.kind != "image" or dataset.features.shape[3] != 1:
        raise ConfigurationError("NOT_IDX_WRITABLE", "IDX output needs a single-channel image dataset")
    pixels = dataset.features[..., 0]
    if np.any((pixels < 0) | (pixels > 255)) or np.any(pixels != np.round(pixels)):
        raise DataError("NOT_BYTE_PIXELS", "IDX output needs integral pixel values in [0, 255]")
    try:
        values = [int(name) for name in dataset.class_names]
    except (TypeError, ValueError):
        raise DataError("NOT_BYTE_LABELS", "IDX output needs integer class names in [0, 255]") from None
    n, h, w = pixels.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, h, w))
        fh.write(pixels.astype(np.uint8).tobytes())
    idx = dataset.label_indices
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABEL_MAGIC, n))
        fh.write(np.array([values[i] for i in idx], dtype=np.uint8).tobytes())


def load_labels_file(path) -> list:
    """Read one class value (string or integer) per line."""
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh.read().splitlines()]


def write_labels(path, labels: np.ndarray, class_names=None):
    """Write one class value per line for a one-hot label matrix."""
    idx = np.argmax(np.asarray(labels), axis=1)
    with open(path, "w", encoding="utf-8") as fh:
        for i in idx:
            name = class_names[int(i)] if class_names is not None else int(i)
            fh.write(f"{name}\n")


def load_embeddings(path) -> EmbeddingTable:
    """Parse word2vec text format: a "<vocab_size> <dimension>" header line,
    then one "<token> <v1> ... <vdim>" line per token."""
    path = Path(path)
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError("EMBEDDINGS_BAD_HEADER", f"{path}: first line must be '<vocab_size> <dimension>'")
        try:
            declared, dim = int(header[0]), int(header[1])
        except ValueError:
            raise DataError("EMBEDDINGS_BAD_HEADER", f"{path}: header {header!r} is not two integers") from None
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise DataError(
                    "EMBEDDINGS_BAD_ROW", f"{path} line {lineno}: expected a token and {dim} values"
                )
            try:
                vectors[parts[0]] = np.array([float(v) for v in parts[1:]], dtype=np.float32)
            except ValueError:
                raise DataError("EMBEDDINGS_BAD_ROW", f"{path} line {lineno}: non-numeric vector entry") from None
    if declared != len(vectors):
        log.warning("%s: header declares %d tokens, file holds %d", path, declared, len(vectors))
    return EmbeddingTable(dimension=dim, vectors=vectors)


def load_text(corpus_path, labels_path, table: EmbeddingTable) -> Dataset:
    """Load a one-document-per-line corpus with an aligned labels file.

    Each line is lowercased, split on whitespace, and embedded as the sum
    of its token vectors; out-of-vocabulary tokens are skipped (counted in
    the load diagnostics log line).
    """
    with open(corpus_path, encoding="utf-8") as fh:
        documents = fh.read().splitlines()
    raw_labels = load_labels_file(labels_path)
    if len(documents) != len(raw_labels):
        raise DataError(
            "LINE_COUNT_MISMATCH",
            f"{len(documents)} documents in {corpus_path} but {len(raw_labels)} labels in {labels_path}",
        )
    features = np.zeros((len(documents), table.dimension), dtype=np.float32)
    total_tokens = 0
    skipped = 0
    for i, doc in enumerate(documents):
        tokens = doc.lower().split()
        total_tokens += len(tokens)
        skipped += sum(1 for t in tokens if t not in table.vectors)
        features[i] = embed_document(tokens, table)
    log.info(
        "embedded %d documents (%d tokens, %d skipped as out-of-vocabulary)",
        len(documents), total_tokens, skipped,
    )
    idx, names = _factorize(raw_labels)
    labels = one_hot_encode(idx, len(names))
    return Dataset(features=features, labels=labels, kind="text", class_names=names)
