"""Online cost-sensitive one-against-all regression with AdaGrad.

Each action owns a weight block over the hashed feature space; an action's
score is a regression estimate of its cost, and prediction takes the argmin.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataio import FeatureVector, check_bits
from .errors import ConfigurationError, ContractError, L2SError, ModelFormatError

DEFAULT_ETA = 0.5
DEFAULT_EPSILON = 1e-6

MAGIC = b"L2S1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBBIddQ")
_TRIPLE = np.dtype([("action", "<u4"), ("index", "<u8"), ("weight", "<f8"), ("grad_sq", "<f8")])


@dataclass
class CostSensitiveExample:
    features: FeatureVector
    allowed: Sequence[int]
    costs: Sequence[float]

    def __post_init__(self):
        if len(self.allowed) != len(self.costs):
            raise ContractError("costs and allowed actions differ in length")
        if not len(self.allowed):
            raise ContractError("cost-sensitive example with no actions")
        for c in self.costs:
            if not math.isfinite(c) or c < 0:
                raise ContractError(f"costs must be finite and non-negative, got {c}")


class LinearCSModel:
    """Per-(action, feature) weights with AdaGrad accumulators.

    Storage is dense ``(k, 2**bits)``; numpy allocates it zeroed and lazily,
    so untouched pages cost nothing.
    """

    def __init__(
        self,
        bits: int,
        num_actions: int,
        eta: float = DEFAULT_ETA,
        epsilon: float = DEFAULT_EPSILON,
        labels: Sequence[str] | None = None,
    ):
        check_bits(bits)
        if num_actions < 1:
            raise ValueError("num_actions must be positive")
        if eta <= 0 or epsilon <= 0:
            raise ValueError("eta and epsilon must be positive")
        self.bits = bits
        self.k = num_actions
        self.eta = float(eta)
        self.epsilon = float(epsilon)
        self.labels = list(labels) if labels is not None else [str(a) for a in range(num_actions)]
        if len(self.labels) != num_actions:
            raise ValueError("label table size must equal num_actions")
        self.weights = np.zeros((num_actions, 1 << bits))
        self.grad_sq = np.zeros((num_actions, 1 << bits))
        self.update_count = 0

    # scoring ---------------------------------------------------------------

    def scores(self, fv: FeatureVector) -> np.ndarray:
        if fv.bits > self.bits:
            raise ConfigurationError(f"features hashed to {fv.bits} bits, model has {self.bits}")
        return self.weights[:, fv.indices] @ fv.values

    def score(self, fv: FeatureVector, action: int) -> float:
        if not 0 <= action < self.k:
            raise ContractError(f"action {action} outside [0, {self.k})")
        return float(self.weights[action, fv.indices] @ fv.values)

    def predict(self, fv: FeatureVector, allowed: Sequence[int] | None = None) -> int:
        """Lowest-scoring action; ties go to the smallest action id."""
        s = self.scores(fv)
        if allowed is None:
            return int(np.argmin(s))
        if not len(allowed):
            raise ContractError("predict with an empty allowed set")
        best = None
        best_score = math.inf
        for a in sorted(allowed):
            if s[a] < best_score:
                best, best_score = a, s[a]
        if best is None:
            # all scores NaN or inf; fall back to the tie-break rule
            best = min(allowed)
        return int(best)

    # learning --------------------------------------------------------------

    def update(self, ex: CostSensitiveExample) -> None:
        if ex.features.bits > self.bits:
            raise ConfigurationError(f"features hashed to {ex.features.bits} bits, model has {self.bits}")
        idx = ex.features.indices
        val = ex.features.values
        acts = np.asarray(ex.allowed, dtype=np.int64)
        if acts.size and (acts.min() < 0 or acts.max() >= self.k):
            raise ContractError(f"example action outside [0, {self.k})")
        costs = np.asarray(ex.costs, dtype=np.float64)
        resid = self.weights[acts[:, None], idx[None, :]] @ val - costs
        bad = ~np.isfinite(resid)
        if bad.any():
            raise FloatingPointError(f"non-finite residual for action {int(acts[bad][0])}")
        if idx.size:
            g = resid[:, None] * val[None, :]
            rows, cols = acts[:, None], idx[None, :]
            gs = self.grad_sq[rows, cols] + g * g
            self.grad_sq[rows, cols] = gs
            self.weights[rows, cols] -= self.eta * g / np.sqrt(gs + self.epsilon)
        self.update_count += 1

    # persistence -----------------------------------------------------------

    def nonzero_triples(self) -> np.ndarray:
        mask = (self.weights != 0) | (self.grad_sq != 0)
        acts, cols = np.nonzero(mask)
        out = np.empty(len(acts), dtype=_TRIPLE)
        out["action"] = acts
        out["index"] = cols
        out["weight"] = self.weights[acts, cols]
        out["grad_sq"] = self.grad_sq[acts, cols]
        return out


def cs_score(model: LinearCSModel, fv: FeatureVector, action: int) -> float:
    return model.score(fv, action)


def cs_predict(model: LinearCSModel, fv: FeatureVector, allowed: Sequence[int]) -> int:
    if not len(allowed):
        raise ContractError("cs_predict needs a nonempty allowed set")
    return model.predict(fv, allowed)


def cs_update(model: LinearCSModel, ex: CostSensitiveExample) -> None:
    model.update(ex)


def model_to_bytes(model: LinearCSModel) -> bytes:
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, model.bits, model.k, model.eta, model.epsilon, model.update_count),
        struct.pack("<I", len(model.labels)),
    ]
    for lab in model.labels:
        raw = lab.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    triples = model.nonzero_triples()
    parts.append(struct.pack("<Q", len(triples)))
    parts.append(triples.tobytes())
    return b"".join(parts)


def model_from_bytes(buf: bytes) -> LinearCSModel:
    def take(n: int, pos: int) -> int:
        if pos + n > len(buf):
            raise ModelFormatError("model file is truncated")
        return pos + n

    pos = take(_HEADER.size, 0)
    magic, version, bits, k, eta, eps, updates = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"model format version {version} is not supported (this build reads version {FORMAT_VERSION})")
    start = pos
    pos = take(4, pos)
    (nlabels,) = struct.unpack_from("<I", buf, start)
    labels = []
    for _ in range(nlabels):
        start = pos
        pos = take(4, pos)
        (n,) = struct.unpack_from("<I", buf, start)
        start = pos
        pos = take(n, pos)
        try:
            labels.append(buf[start:pos].decode("utf-8"))
        except UnicodeDecodeError:
            raise ModelFormatError("label table is not valid UTF-8") from None
    start = pos
    pos = take(8, pos)
    (ntrip,) = struct.unpack_from("<Q", buf, start)
    start = pos
    pos = take(ntrip * _TRIPLE.itemsize, pos)
    if pos != len(buf):
        raise ModelFormatError(f"{len(buf) - pos} trailing bytes after model data")
    triples = np.frombuffer(buf, dtype=_TRIPLE, count=ntrip, offset=start)
    try:
        model = LinearCSModel(bits, k, eta, eps, labels)
    except (ValueError, L2SError) as exc:
        raise ModelFormatError(f"invalid model header: {exc}") from None
    if ntrip:
        if triples["action"].max() >= k or triples["index"].max() >= (1 << bits):
            raise ModelFormatError("weight entry outside the model's index space")
        a = triples["action"].astype(np.int64)
        i = triples["index"].astype(np.int64)
        model.weights[a, i] = triples["weight"]
        model.grad_sq[a, i] = triples["grad_sq"]
    model.update_count = updates
    return model


def save_model(model: LinearCSModel, path: str | Path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path: str | Path) -> LinearCSModel:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from None
    return model_from_bytes(buf)
