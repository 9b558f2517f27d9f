"""Black-box prediction backends.

Three concrete backends ship with the toolkit:

* AdditiveBackend   -- synthetic word-score model, the ground truth for the
                       attribution oracle tests
* BowLogisticModel  -- deterministic bag-of-words softmax regression, used
                       to fabricate "large" vs "compressed" sibling models
* ProtocolBackend   -- JSON-lines wire client for an external model served
                       over subprocess stdio or a TCP stream

A backend maps a batch of (text_a, text_b) pairs to probability vectors and
must tolerate empty text (every word masked out).
"""

from __future__ import annotations

import json
import select
import socket
import subprocess
import threading
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .core import WORD_RE, Dataset
from .errors import (
    BackendError,
    BackendTimeout,
    BackendUnavailable,
    DegenerateDataset,
    HandshakeError,
    ProtocolViolation,
    ShapeMismatch,
)

TextPair = tuple[str, "str | None"]


def _words(pair: TextPair) -> list[str]:
    a, b = pair
    tokens = [t.lower() for t in WORD_RE.findall(a)]
    if b:
        tokens += [t.lower() for t in WORD_RE.findall(b)]
    return tokens


class PredictionBackend:
    """Behavioral interface; concrete backends override predict_proba."""

    num_classes: int
    name: str = "backend"

    def predict_proba(self, texts: list[TextPair]) -> np.ndarray:
        raise NotImplementedError

    def close(self):
        pass


@dataclass
class AdditiveBackend(PredictionBackend):
    """Two-class model scoring text as bias + sum of present-word weights.

    With the identity link the class-1 "probability" is the raw score, which
    makes the model an exact additive game for Shapley and LIME oracles.
    """

    weights: dict[str, float]
    bias: float = 0.0
    link: str = "logistic"  # "logistic" | "identity"
    name: str = "additive"
    num_classes: int = field(default=2, init=False)

    def score(self, pair: TextPair) -> float:
        present = set(_words(pair))
        return self.bias + sum(self.weights.get(w, 0.0) for w in present)

    def predict_proba(self, texts: list[TextPair]) -> np.ndarray:
        scores = np.array([self.score(t) for t in texts], dtype=float)
        if self.link == "logistic":
            p1 = 1.0 / (1.0 + np.exp(-scores))
        elif self.link == "identity":
            p1 = scores
        else:
            raise ValueError(f"unknown link {self.link!r}")
        return np.column_stack([1.0 - p1, p1])


@dataclass
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 200
    l2: float = 1e-4
    batch_size: int = 16
    seed: int = 0
    vocab_cap: int | None = None  # keep only the most frequent words


class BowLogisticModel(PredictionBackend):
    """Bag-of-words softmax regression with a deterministic trainer."""

    def __init__(self, vocab: dict[str, int], weights: np.ndarray, name: str = "bow-lr"):
        self.vocab = vocab
        self.weights = weights  # num_classes x (|vocab| + 1), last column bias
        self.num_classes = weights.shape[0]
        self.name = name

    def _featurize(self, texts: list[TextPair]) -> np.ndarray:
        X = np.zeros((len(texts), len(self.vocab) + 1))
        X[:, -1] = 1.0
        for i, pair in enumerate(texts):
            for w in _words(pair):
                j = self.vocab.get(w)
                if j is not None:
                    X[i, j] += 1.0
        return X

    def predict_proba(self, texts: list[TextPair]) -> np.ndarray:
        logits = self._featurize(texts) @ self.weights.T
        logits -= logits.max(axis=1, keepdims=True)
        expl = np.exp(logits)
        return expl / expl.sum(axis=1, keepdims=True)


def train_bow_logistic(dataset: Dataset, cfg: TrainConfig, name: str = "bow-lr") -> BowLogisticModel:
    """Mini-batch gradient descent with fixed per-seed shuffling."""
    if len(dataset) == 0:
        raise DegenerateDataset("empty training set")
    labels = np.array([inst.label for inst in dataset.instances])
    if len(set(labels.tolist())) < 2:
        raise DegenerateDataset("all instances share one label")

    counts: Counter[str] = Counter()
    for inst in dataset.instances:
        counts.update(_words((inst.text_a, inst.text_b)))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if cfg.vocab_cap is not None:
        ranked = ranked[: cfg.vocab_cap]
    vocab = {w: i for i, (w, _) in enumerate(ranked)}

    model = BowLogisticModel(vocab, np.zeros((dataset.num_classes, len(vocab) + 1)), name)
    X = model._featurize([(i.text_a, i.text_b) for i in dataset.instances])
    Y = np.eye(dataset.num_classes)[labels]

    rng = np.random.default_rng(cfg.seed)
    n = len(dataset)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            logits = X[idx] @ model.weights.T
            logits -= logits.max(axis=1, keepdims=True)
            expl = np.exp(logits)
            P = expl / expl.sum(axis=1, keepdims=True)
            grad = (P - Y[idx]).T @ X[idx] / len(idx)
            grad += cfg.l2 * model.weights
            model.weights -= cfg.learning_rate * grad
    return model


class _LineChannel:
    """One JSON object per line over a byte stream, with timeouts."""

    def __init__(self, read_fd, write, timeout: float):
        self._read_fd = read_fd
        self._write = write
        self._timeout = timeout
        self._buffer = b""

    def send(self, obj: dict):
        self._write(json.dumps(obj).encode("utf-8") + b"\n")

    def recv(self) -> dict:
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([self._read_fd], [], [], self._timeout)
            if not ready:
                raise BackendTimeout(f"no reply within {self._timeout}s")
            chunk = self._read_chunk()
            if not chunk:
                raise BackendUnavailable("peer closed the stream")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        try:
            return json.loads(line.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ProtocolViolation(f"non-JSON reply: {line[:200]!r}") from exc

    def _read_chunk(self) -> bytes:
        raise NotImplementedError


class _PipeChannel(_LineChannel):
    def __init__(self, proc: subprocess.Popen, timeout: float):
        super().__init__(proc.stdout, proc.stdin.write, timeout)
        self._proc = proc

    def send(self, obj):
        try:
            super().send(obj)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendUnavailable("subprocess pipe closed") from exc

    def _read_chunk(self) -> bytes:
        return self._proc.stdout.read1(65536)


class _SocketChannel(_LineChannel):
    def __init__(self, sock: socket.socket, timeout: float):
        sock.setblocking(False)
        super().__init__(sock, None, timeout)
        self._sock = sock

    def send(self, obj):
        try:
            self._sock.sendall(json.dumps(obj).encode("utf-8") + b"\n")
        except OSError as exc:
            raise BackendUnavailable("socket closed") from exc

    def _read_chunk(self) -> bytes:
        return self._sock.recv(65536)


class ProtocolBackend(PredictionBackend):
    """Client for the JSON-lines wire protocol.

    Requests are serialized over one connection; a lock keeps one batch's
    frames from interleaving when workers share the client.
    """

    def __init__(self, channel: _LineChannel, name: str | None = None):
        self._channel = channel
        self._lock = threading.Lock()
        reply = self._request({"op": "handshake"})
        if "num_classes" not in reply:
            raise HandshakeError(f"bad handshake reply: {reply}")
        self.num_classes = int(reply["num_classes"])
        self.class_names = reply.get("class_names", [])
        self.name = name or reply.get("model_name", "protocol")

    def _request(self, obj: dict) -> dict:
        with self._lock:
            self._channel.send(obj)
            return self._channel.recv()

    def predict_proba(self, texts: list[TextPair]) -> np.ndarray:
        payload = [{"a": a, "b": b} for a, b in texts]
        reply = self._request({"op": "predict", "texts": payload})
        probs = reply.get("probs")
        if probs is None:
            raise ProtocolViolation(f"predict reply missing 'probs': {reply}")
        if len(probs) != len(texts):
            raise ProtocolViolation(
                f"got {len(probs)} rows for a batch of {len(texts)}"
            )
        arr = np.asarray(probs, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.num_classes:
            raise ShapeMismatch(
                f"expected rows of length {self.num_classes}, got shape {arr.shape}"
            )
        return arr

    def close(self):
        try:
            self._request({"op": "shutdown"})
        except BackendError:
            pass


def protocol_client(command=None, endpoint=None, timeout: float = 30.0,
                    name: str | None = None) -> ProtocolBackend:
    """Spawn a subprocess bridge or connect to host:port and handshake."""
    if (command is None) == (endpoint is None):
        raise ValueError("pass exactly one of command / endpoint")
    if command is not None:
        try:
            proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise BackendUnavailable(f"cannot spawn {command!r}: {exc}") from exc
        channel = _PipeChannel(proc, timeout)
    else:
        host, _, port = endpoint.rpartition(":")
        try:
            sock = socket.create_connection((host, int(port)), timeout=timeout)
        except OSError as exc:
            raise BackendUnavailable(f"cannot connect to {endpoint}: {exc}") from exc
        channel = _SocketChannel(sock, timeout)
    return ProtocolBackend(channel, name=name)


def purity_probe(backend: PredictionBackend, texts: list[TextPair], atol: float = 1e-9):
    """Repeat-probe self-test: two calls on the same texts must agree."""
    first = backend.predict_proba(texts)
    second = backend.predict_proba(texts)
    if not np.allclose(first, second, atol=atol, rtol=0.0):
        raise BackendUnavailable(
            f"backend {backend.name!r} is not pure: repeated predictions differ"
        )
