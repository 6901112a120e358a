"""File output helpers: atomic writes, CSV formatting and seeded generators."""
import json
import os
import tempfile

import numpy as np


def format_float(x):
    """17 significant digits, enough to round-trip any double."""
    return f"{float(x):.17g}"


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else format_float(v) for v in row))
    return "\r\n".join(lines) + "\r\n"


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    atomic_write_text(path, csv_text(header, rows))


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def make_rng(seed=0, stream=0):
    """Counter-based generator for a given seed and independent stream index."""
    seq = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(seq))
