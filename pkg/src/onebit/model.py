"""Problem instances: random generation, one-bit quantization and JSON I/O.

The sensing matrix and sign vector are plain numpy arrays; the invariants
that tie them together are checked when a :class:`ProblemInstance` is built.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from onebit.exceptions import InstanceFormatError, InvalidArgumentError

# Stream tags mixed into the seed so signal and matrix draws never share a stream.
_SIGNAL_STREAM = 0
_MATRIX_STREAM = 1


@dataclass(frozen=True)
class SparseSignal:
    """Ground-truth K-sparse vector with its support."""

    coefficients: np.ndarray
    support: frozenset

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        if coef.ndim != 1 or coef.size == 0:
            raise InvalidArgumentError("coefficients must be a non-empty 1-D vector")
        support = frozenset(int(i) for i in self.support)
        nonzero = frozenset(np.flatnonzero(coef).tolist())
        if support != nonzero:
            raise InvalidArgumentError("support does not match the nonzero coefficients")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "support", support)

    @property
    def n(self) -> int:
        return self.coefficients.size

    @property
    def k(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class ProblemInstance:
    """Sensing matrix ``A`` (m x n), signs ``b = sign(A x)`` and optional truth."""

    matrix: np.ndarray
    signs: np.ndarray
    truth: Optional[SparseSignal] = None
    seed: int = 0

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        b = np.array(self.signs, dtype=float)
        if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
            raise InvalidArgumentError("matrix must be a non-empty 2-D array")
        if b.shape != (A.shape[0],):
            raise InvalidArgumentError(
                f"signs has length {b.size}, expected m={A.shape[0]}")
        if not np.all((b == 1.0) | (b == -1.0)):
            raise InvalidArgumentError("signs must be +1 or -1")
        if self.truth is not None:
            if self.truth.n != A.shape[1]:
                raise InvalidArgumentError("truth length does not match n")
            if not np.array_equal(quantize(A, self.truth.coefficients), b):
                raise InvalidArgumentError("signs are not the quantized truth")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be unsigned")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "signs", b)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    def digest(self) -> str:
        """SHA-256 over dimensions, matrix and signs (the data a solver sees)."""
        h = hashlib.sha256()
        h.update(np.array([self.m, self.n], dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.matrix, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.signs, dtype="<f8").tobytes())
        return h.hexdigest()


def _rng(seed, stream):
    if seed < 0:
        raise InvalidArgumentError("seed must be unsigned")
    return np.random.default_rng([int(seed), stream])


def generate_sparse_signal(n: int, k: int, seed: int) -> SparseSignal:
    """Draw a K-sparse vector: uniform random support, i.i.d. N(0, 1) values.

    Raises
    ------
    InvalidArgumentError
        If ``k`` is not in ``[1, n]``.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"K must satisfy 1 <= K <= n, got K={k}, n={n}")
    rng = _rng(seed, _SIGNAL_STREAM)
    support = rng.choice(n, size=k, replace=False)
    values = rng.standard_normal(k)
    # An exact zero draw would silently shrink the support.
    while np.any(values == 0.0):
        values[values == 0.0] = rng.standard_normal(np.count_nonzero(values == 0.0))
    coef = np.zeros(n)
    coef[support] = values
    return SparseSignal(coef, frozenset(support.tolist()))


def generate_sensing_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """Gaussian m x n matrix with every column rescaled to unit Euclidean norm."""
    if m < 1 or n < 1:
        raise InvalidArgumentError(f"dimensions must be positive, got m={m}, n={n}")
    rng = _rng(seed, _MATRIX_STREAM)
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=0)
    return A


def quantize(matrix, x) -> np.ndarray:
    """One-bit measurements ``sign(A x)`` with the convention sign(0) = -1."""
    A = np.asarray(matrix, dtype=float)
    x = np.asarray(x, dtype=float)
    if A.ndim != 2 or x.shape != (A.shape[1],):
        raise InvalidArgumentError(
            f"cannot quantize vector of shape {x.shape} with matrix of shape {A.shape}")
    return np.where(A @ x > 0, 1.0, -1.0)


def generate_instance(m: int, n: int, k: int, seed: int) -> ProblemInstance:
    """Generate signal, matrix and signs from a single master seed."""
    truth = generate_sparse_signal(n, k, seed)
    A = generate_sensing_matrix(m, n, seed)
    return ProblemInstance(A, quantize(A, truth.coefficients), truth, seed)


def instance_to_dict(instance: ProblemInstance) -> dict:
    doc = {
        "m": instance.m,
        "n": instance.n,
        "matrix": instance.matrix.ravel(order="C").tolist(),
        "signs": [int(s) for s in instance.signs],
        "seed": instance.seed,
    }
    if instance.truth is not None:
        doc["truth"] = {
            "coefficients": instance.truth.coefficients.tolist(),
            "support": sorted(instance.truth.support),
        }
    return doc


def _require(doc, key, kind, where=None):
    field = key if where is None else f"{where}.{key}"
    if key not in doc:
        raise InstanceFormatError(field, "missing")
    value = doc[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise InstanceFormatError(field, f"expected an integer, got {value!r}")
    elif kind is list and not isinstance(value, list):
        raise InstanceFormatError(field, "expected an array")
    return value


def _numbers(values, field):
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise InstanceFormatError(field, f"non-numeric or non-finite entry {v!r}")
    return np.array(values, dtype=float)


def instance_from_dict(doc) -> ProblemInstance:
    """Validate a decoded instance document, naming the first bad field."""
    if not isinstance(doc, dict):
        raise InstanceFormatError("<root>", "expected a JSON object")
    m = _require(doc, "m", int)
    n = _require(doc, "n", int)
    if m < 1:
        raise InstanceFormatError("m", "must be positive")
    if n < 1:
        raise InstanceFormatError("n", "must be positive")
    matrix = _numbers(_require(doc, "matrix", list), "matrix")
    if matrix.size != m * n:
        raise InstanceFormatError("matrix", f"has {matrix.size} entries, expected m*n={m * n}")
    raw_signs = _require(doc, "signs", list)
    if len(raw_signs) != m:
        raise InstanceFormatError("signs", f"has {len(raw_signs)} entries, expected m={m}")
    for s in raw_signs:
        if isinstance(s, bool) or s not in (1, -1):
            raise InstanceFormatError("signs", f"entry {s!r} is not +1 or -1")
    seed = _require(doc, "seed", int)
    if seed < 0:
        raise InstanceFormatError("seed", "must be unsigned")

    truth = None
    if doc.get("truth") is not None:
        t = doc["truth"]
        if not isinstance(t, dict):
            raise InstanceFormatError("truth", "expected an object")
        coef = _numbers(_require(t, "coefficients", list, "truth"), "truth.coefficients")
        if coef.size != n:
            raise InstanceFormatError("truth.coefficients", f"has {coef.size} entries, expected n={n}")
        support = _require(t, "support", list, "truth")
        for i in support:
            if isinstance(i, bool) or not isinstance(i, int) or not 0 <= i < n:
                raise InstanceFormatError("truth.support", f"invalid index {i!r}")
        try:
            truth = SparseSignal(coef, frozenset(support))
        except InvalidArgumentError as exc:
            raise InstanceFormatError("truth.support", str(exc)) from None

    A = matrix.reshape(m, n)
    b = np.array(raw_signs, dtype=float)
    if truth is not None and not np.array_equal(quantize(A, truth.coefficients), b):
        raise InstanceFormatError("truth", "quantizing the truth does not reproduce signs")
    return ProblemInstance(A, b, truth, seed)


def save_instance(instance: ProblemInstance, path) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly.
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh)
        fh.write("\n")


def load_instance(path) -> ProblemInstance:
    """Read an instance file written by :func:`save_instance`.

    Raises
    ------
    OSError
        If the file cannot be read.
    InstanceFormatError
        If the content is not valid JSON or violates the schema.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError("<root>", f"invalid JSON: {exc}") from None
    return instance_from_dict(doc)
