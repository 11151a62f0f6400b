"""File formats: raw vectors, Matrix Market, binary PGM and trace CSV."""
import csv
import os
import tempfile

import numpy as np
import scipy.io
import scipy.sparse as sp

VECTOR_MAGIC = b"BOXVEC"
TRACE_FIELDS = ("iter", "level", "f", "gnorm", "fine_grad_evals", "seconds")


def _atomic_write(path, data, mode="wb"):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_vector(path, v):
    """Little-endian float64 payload after a one-line ``BOXVEC <length>`` header."""
    v = np.ascontiguousarray(v, dtype="<f8").ravel()
    _atomic_write(path, VECTOR_MAGIC + b" %d\n" % v.size + v.tobytes())


def read_vector(path):
    with open(path, "rb") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != VECTOR_MAGIC:
            raise ValueError(f"{path}: not a vector file")
        n = int(header[1])
        v = np.frombuffer(fh.read(), dtype="<f8")
    if v.size != n:
        raise ValueError(f"{path}: header says {n} values, found {v.size}")
    return v.astype(float)


def write_matrix(path, A):
    scipy.io.mmwrite(os.fspath(path), sp.coo_matrix(A), field="real", symmetry="general")


def read_matrix(path):
    A = sp.csr_matrix(scipy.io.mmread(os.fspath(path)))
    A.sort_indices()
    return A


def write_pgm(path, image):
    """Binary PGM (P5, maxval 255) of an image with values in [0, 1]."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM needs a 2-d image")
    px = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    rows, cols = px.shape
    _atomic_write(path, b"P5\n%d %d\n255\n" % (cols, rows) + px.tobytes())


def read_pgm(path):
    """Read a binary PGM written by :func:`write_pgm`; values scaled to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    cols, rows, maxval = (int(t) for t in tokens[1:])
    px = np.frombuffer(data[pos + 1:pos + 1 + rows * cols], dtype=np.uint8)
    return px.reshape(rows, cols) / float(maxval)


def write_trace(path, trace, meta=None):
    """Trace CSV; ``meta`` (a dict) goes on a leading ``#`` comment line."""
    lines = []
    if meta:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in meta.items()))
    lines.append(",".join(TRACE_FIELDS))
    for r in trace.records:
        lines.append(f"{int(r.iter)},{r.level},{float(r.f)!r},{float(r.gnorm)!r},"
                     f"{int(r.fine_grad_evals)},{float(r.seconds)!r}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode(), "wb")


def read_trace(path):
    """Return ``(meta, rows)``; rows are dicts, unknown columns are kept as strings."""
    meta = {}
    with open(path, newline="") as fh:
        body = []
        for line in fh:
            if line.startswith("#"):
                for item in line[1:].split():
                    k, _, v = item.partition("=")
                    meta[k] = v
            else:
                body.append(line)
    rows = []
    for raw in csv.DictReader(body):
        row = dict(raw)
        row["iter"] = int(row["iter"])
        row["f"] = float(row["f"])
        row["gnorm"] = float(row["gnorm"])
        row["fine_grad_evals"] = int(row["fine_grad_evals"])
        row["seconds"] = float(row["seconds"])
        rows.append(row)
    return meta, rows
