"""Embedded datasets."""
import csv
import io

import numpy as np

# (IgG3 - IgG4, IgA, cases, total) for latent membranous lupus nephritis;
# 18 cases among 55 patients.
LUPUS_TABLE = (
    (-3.0, 0.0, 0, 1),
    (-2.5, 0.0, 0, 3),
    (-2.0, 0.0, 0, 7),
    (-2.0, 2.0, 0, 1),
    (-1.5, 0.0, 0, 6),
    (-1.5, 0.5, 0, 1),
    (-1.0, 0.0, 0, 6),
    (-1.0, 0.5, 0, 1),
    (-1.0, 1.0, 0, 1),
    (-1.0, 2.0, 0, 1),
    (-0.5, 0.0, 0, 4),
    (-0.5, 1.5, 1, 1),
    (0.0, 0.0, 0, 3),
    (0.0, 1.0, 0, 1),
    (0.0, 1.5, 1, 1),
    (0.5, 0.0, 3, 4),
    (0.5, 1.0, 1, 1),
    (0.5, 1.5, 1, 1),
    (0.5, 2.0, 1, 1),
    (1.0, 0.0, 1, 1),
    (1.0, 1.0, 1, 1),
    (1.0, 1.5, 1, 1),
    (1.0, 2.0, 4, 4),
    (1.5, 0.0, 1, 1),
    (1.5, 1.5, 2, 2),
)

LUPUS_COLUMNS = ("igg_diff", "iga", "cases", "total")


def lupus_design():
    """Expand the grouped table to per-patient rows.

    Returns ``(X, y)`` with ``X`` columns ``(1, igg_diff, iga)``.
    """
    rows, ys = [], []
    for igg, iga, cases, total in LUPUS_TABLE:
        for j in range(total):
            rows.append((1.0, igg, iga))
            ys.append(1 if j < cases else 0)
    return np.array(rows), np.array(ys, dtype=np.int8)


def lupus_csv() -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LUPUS_COLUMNS)
    for igg, iga, cases, total in LUPUS_TABLE:
        w.writerow((igg, iga, cases, total))
    return buf.getvalue()


def read_grouped_csv(path):
    """Read a grouped binomial table with the lupus column layout."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != LUPUS_COLUMNS:
            raise ValueError(f"{path}: line 1: expected header {','.join(LUPUS_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                igg, iga, cases, total = row
                rec = (float(igg), float(iga), int(cases), int(total))
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            if not 0 <= rec[2] <= rec[3]:
                raise ValueError(f"{path}: line {lineno}: cases must be within 0..total")
            out.append(rec)
    return tuple(out)
