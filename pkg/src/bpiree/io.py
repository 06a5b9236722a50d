"""File formats: problem-instance JSON, trace CSV, atomic writes.

Problem instances serialize to a JSON document

    {"A": <rows or blob path>, "b": [...], "blocks": [[...], ...],
     "penalty": {"type": ..., "lam": ..., ...}}

with optional fields ``A_shape`` (required when ``A`` is a path to a raw
little-endian float64 blob, row-major), ``t`` (matrix column count, 1 for
vector problems) and ``x_true`` (the planted signal, when known).  All
index arrays are 0-based.

Trace CSV uses the header ``k,F,step_rel,residual,beta,block,retried,wall_ns``
(plus ``eps_min,eps_max,support_size,sign_fixed`` for lp runs and a final
``algo`` column in merged exports); floats are written in shortest
round-trip decimal form and booleans as 0/1.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Optional

import numpy as np

from .model import (
    BlockPartition,
    LeastSquares,
    LogPenalty,
    MatrixLeastSquares,
    Problem,
    SmoothedLp,
)
from .solver import LpTraceRecord, Trace

__all__ = [
    "atomic_write_text",
    "save_problem",
    "load_problem",
    "penalty_to_dict",
    "penalty_from_dict",
    "write_trace_csv",
    "trace_csv_text",
]

TRACE_HEADER = ["k", "F", "step_rel", "residual", "beta", "block", "retried", "wall_ns"]
LP_TRACE_EXTRA = ["eps_min", "eps_max", "support_size", "sign_fixed"]


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename.

    Guarantees no partial file is left behind on failure.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def penalty_to_dict(penalty) -> dict:
    if isinstance(penalty, LogPenalty):
        return {"type": "log", "lam": penalty.lam, "eps_bar": penalty.eps_bar}
    if isinstance(penalty, SmoothedLp):
        return {"type": "lp", "lam": penalty.lam, "p": penalty.p}
    raise ValueError(f"penalty {type(penalty).__name__} has no JSON form")


def penalty_from_dict(d: dict):
    kind = d.get("type")
    if kind == "log":
        return LogPenalty(lam=float(d["lam"]), eps_bar=float(d["eps_bar"]))
    if kind == "lp":
        return SmoothedLp(lam=float(d["lam"]), p=float(d["p"]))
    raise ValueError(f"unknown penalty type {kind!r}")


def save_problem(path: str, problem: Problem, x_true=None, blob: bool = False) -> None:
    """Write a problem instance; ``blob=True`` stores A as ``<path>.A.bin``."""
    loss = problem.loss
    if isinstance(loss, LeastSquares):
        A, b, t = loss.A, loss.b, 1
    elif isinstance(loss, MatrixLeastSquares):
        A, b, t = loss.A, loss.B.ravel(order="F"), loss.t
    else:
        raise ValueError(f"loss {type(loss).__name__} has no JSON form")
    doc = {
        "b": b.tolist(),
        "t": t,
        "blocks": [blk.tolist() for blk in problem.partition.blocks],
        "penalty": penalty_to_dict(problem.penalty),
    }
    if blob:
        blob_path = path + ".A.bin"
        _atomic_write_bytes(
            blob_path, np.ascontiguousarray(A, dtype="<f8").tobytes()
        )
        doc["A"] = os.path.basename(blob_path)
        doc["A_shape"] = list(A.shape)
    else:
        doc["A"] = A.tolist()
    if x_true is not None:
        doc["x_true"] = np.asarray(x_true).ravel().tolist()
    atomic_write_text(path, json.dumps(doc, sort_keys=True))


def load_problem(path: str):
    """Read a problem instance; returns ``(Problem, x_true_or_None)``."""
    with open(path) as f:
        doc = json.load(f)
    A = doc["A"]
    if isinstance(A, str):
        shape = tuple(doc["A_shape"])
        blob_path = os.path.join(os.path.dirname(os.path.abspath(path)), A)
        A = np.fromfile(blob_path, dtype="<f8").reshape(shape)
    else:
        A = np.asarray(A, dtype=np.float64)
    b = np.asarray(doc["b"], dtype=np.float64)
    t = int(doc.get("t", 1))
    penalty = penalty_from_dict(doc["penalty"])
    if t > 1:
        loss = MatrixLeastSquares(A, b.reshape(-1, t, order="F"))
    else:
        loss = LeastSquares(A, b)
    partition = BlockPartition(
        blocks=tuple(np.asarray(blk, dtype=np.intp) for blk in doc["blocks"]),
        n=loss.dim,
    )
    problem = Problem(loss, penalty, partition)
    x_true = doc.get("x_true")
    if x_true is not None:
        x_true = np.asarray(x_true, dtype=np.float64)
    return problem, x_true


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(float(value))  # shortest round-trip decimal
    return str(value)


def trace_csv_text(records, algo: Optional[str] = None) -> str:
    """Render trace records as CSV; ``algo`` appends a constant last column."""
    is_lp = bool(records) and isinstance(records[0], LpTraceRecord)
    header = TRACE_HEADER + (LP_TRACE_EXTRA if is_lp else [])
    if algo is not None:
        header = header + ["algo"]
    lines = [",".join(header)]
    for rec in records:
        row = [
            rec.k,
            rec.F,
            rec.step_rel,
            rec.residual,
            rec.beta_used,
            rec.block,
            rec.retried,
            rec.wall_ns,
        ]
        if is_lp:
            row += [rec.eps_min, rec.eps_max, rec.support_size, rec.sign_fixed]
        if algo is not None:
            row.append(algo)
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_trace_csv(path: str, trace: Trace, algo: Optional[str] = None) -> None:
    atomic_write_text(path, trace_csv_text(trace.records, algo=algo))
