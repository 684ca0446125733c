"""Multi-task recurrent tagger: a single LSTM layer shared by two MLP heads.

One head predicts the disfluency tag of the current token, the other the next
combined word|POS token.  Everything is implemented directly on numpy arrays
with hand-derived gradients so the whole training computation can be verified
against finite differences.

Loss (per batch, PAD positions masked):

    total = main + lm_weight * lm + reg
    main  = mean over steps of class_weight[gold] * -log p_tag[gold]
    lm    = mean over steps of -log p_lm[next token]
    reg   = l2_penalty / 2 * sum of squared weight-matrix entries (no biases)

Backpropagation through time is truncated per loss term: the gradient of the
loss at step t flows through at most ``bptt_window`` recurrent states.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import EOS_ID, PAD_ID, Vocabulary, encode_utterance
from .tags import ALL_TAGS, NUM_TAGS, Tag

MODEL_MAGIC = b"DFLT"
MODEL_VERSION = 1


class NumericFault(RuntimeError):
    """A non-finite value appeared where the model requires finite arithmetic."""


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    vocab_size: int
    embedding_dim: int = 128
    hidden_dim: int = 128
    head_dims: tuple[int, ...] = (128,)
    bptt_window: int = 20
    lm_weight: float = 0.1       # scale of the next-token loss
    l2_penalty: float = 0.001    # weight matrices only, biases excluded
    gamma: float = 1.05          # class-weight smoothing exponent
    seed: int = 0

    def __post_init__(self):
        if self.vocab_size < 1 or self.embedding_dim < 1 or self.hidden_dim < 1:
            raise ValueError("all sizes must be >= 1")
        if any(d < 1 for d in self.head_dims):
            raise ValueError("head layer sizes must be >= 1")
        if self.bptt_window < 1:
            raise ValueError("bptt_window must be >= 1")
        if self.lm_weight < 0 or self.l2_penalty < 0:
            raise ValueError("lm_weight and l2_penalty must be >= 0")

    def to_json_dict(self) -> dict:
        d = {
            "vocab_size": self.vocab_size,
            "embedding_dim": self.embedding_dim,
            "hidden_dim": self.hidden_dim,
            "head_dims": list(self.head_dims),
            "bptt_window": self.bptt_window,
            "lm_weight": self.lm_weight,
            "l2_penalty": self.l2_penalty,
            "gamma": self.gamma,
            "seed": self.seed,
        }
        return d

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Hyperparams":
        kw = dict(obj)
        kw["head_dims"] = tuple(kw.get("head_dims", (128,)))
        return cls(**kw)


GATES = ("input", "forget", "output", "cand")


def _tensor_shapes(hyper: Hyperparams) -> list[tuple[str, tuple[int, ...]]]:
    d, h, v = hyper.embedding_dim, hyper.hidden_dim, hyper.vocab_size
    shapes: list[tuple[str, tuple[int, ...]]] = [("embed", (v, d))]
    for gate in GATES:
        shapes.append((f"cell_w_{gate}", (d + h, h)))
    for gate in GATES:
        shapes.append((f"cell_b_{gate}", (h,)))
    for head, out in (("tag", NUM_TAGS), ("lm", v)):
        dims = (h, *hyper.head_dims, out)
        for i in range(len(dims) - 1):
            shapes.append((f"{head}_w{i}", (dims[i], dims[i + 1])))
            shapes.append((f"{head}_b{i}", (dims[i + 1],)))
    return shapes


def _is_bias(name: str) -> bool:
    return "_b" in name


class Parameters:
    """Ordered named arrays; names containing '_b' are biases (no L2)."""

    def __init__(self, arrays: dict[str, np.ndarray]):
        self.arrays = arrays

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def names(self) -> list[str]:
        return list(self.arrays)

    def weight_names(self) -> list[str]:
        return [n for n in self.arrays if not _is_bias(n)]

    @property
    def dtype(self):
        return next(iter(self.arrays.values())).dtype

    def copy(self) -> "Parameters":
        return Parameters({n: a.copy() for n, a in self.arrays.items()})

    def astype(self, dtype) -> "Parameters":
        return Parameters({n: a.astype(dtype) for n, a in self.arrays.items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {n: np.zeros_like(a) for n, a in self.arrays.items()}

    def squared_weight_sum(self) -> float:
        return float(sum(np.sum(self.arrays[n].astype(np.float64) ** 2)
                         for n in self.weight_names()))

    def allclose(self, other: "Parameters") -> bool:
        return all(np.array_equal(self.arrays[n], other.arrays[n]) for n in self.arrays)


def init_params(hyper: Hyperparams, seed: int | None = None, dtype=np.float32) -> Parameters:
    """Uniform(-s, s) weights with s = sqrt(6 / (fan_in + fan_out)) per matrix.

    Biases start at zero except the forget-gate bias, which starts at 1.
    """
    rng = np.random.default_rng(hyper.seed if seed is None else seed)
    arrays: dict[str, np.ndarray] = {}
    for name, shape in _tensor_shapes(hyper):
        if _is_bias(name):
            arrays[name] = np.zeros(shape, dtype=dtype)
        else:
            fan_in, fan_out = shape[0], shape[1]
            s = np.sqrt(6.0 / (fan_in + fan_out))
            arrays[name] = rng.uniform(-s, s, size=shape).astype(dtype)
    arrays["cell_b_forget"][:] = 1.0
    return Parameters(arrays)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


@dataclass
class ForwardTrace:
    """Cached activations of one batched forward pass."""

    ids: np.ndarray            # (B, T) input token ids
    mask: np.ndarray           # (B, T) 1.0 at real steps
    z: np.ndarray              # (B, T, D+H) gate inputs [x_t; h_{t-1}]
    gate_i: np.ndarray         # (B, T, H)
    gate_f: np.ndarray
    gate_o: np.ndarray
    gate_g: np.ndarray
    c: np.ndarray              # (B, T, H) cell states
    tanh_c: np.ndarray
    h: np.ndarray              # (B, T, H)
    tag_acts: list             # activations per tag-head layer, tag_acts[0] = h
    lm_acts: list
    tag_probs: np.ndarray      # (B, T, 27)
    lm_probs: np.ndarray       # (B, T, V)

    @property
    def steps(self) -> int:
        return self.ids.shape[1]


def _head_forward(params: Parameters, head: str, x: np.ndarray,
                  n_layers: int) -> tuple[list, np.ndarray]:
    acts = [x]
    a = x
    for i in range(n_layers - 1):
        a = np.tanh(a @ params[f"{head}_w{i}"] + params[f"{head}_b{i}"])
        acts.append(a)
    logits = a @ params[f"{head}_w{n_layers - 1}"] + params[f"{head}_b{n_layers - 1}"]
    return acts, _softmax(logits)


def forward_batch(params: Parameters, hyper: Hyperparams, ids: np.ndarray,
                  mask: np.ndarray) -> ForwardTrace:
    """Run the recurrent cell over a padded batch and both heads over all steps."""
    dtype = params.dtype
    B, T = ids.shape
    D, H = hyper.embedding_dim, hyper.hidden_dim
    z = np.zeros((B, T, D + H), dtype=dtype)
    gi = np.zeros((B, T, H), dtype=dtype)
    gf = np.zeros_like(gi)
    go = np.zeros_like(gi)
    gg = np.zeros_like(gi)
    c = np.zeros_like(gi)
    h = np.zeros_like(gi)
    h_prev = np.zeros((B, H), dtype=dtype)
    c_prev = np.zeros((B, H), dtype=dtype)
    embed = params["embed"]
    for t in range(T):
        x = embed[ids[:, t]]
        zt = np.concatenate([x, h_prev], axis=1)
        i_t = _sigmoid(zt @ params["cell_w_input"] + params["cell_b_input"])
        f_t = _sigmoid(zt @ params["cell_w_forget"] + params["cell_b_forget"])
        o_t = _sigmoid(zt @ params["cell_w_output"] + params["cell_b_output"])
        g_t = np.tanh(zt @ params["cell_w_cand"] + params["cell_b_cand"])
        c_t = f_t * c_prev + i_t * g_t
        h_t = o_t * np.tanh(c_t)
        if not np.isfinite(h_t).all():
            raise NumericFault(f"non-finite hidden state at step {t}")
        z[:, t] = zt
        gi[:, t], gf[:, t], go[:, t], gg[:, t] = i_t, f_t, o_t, g_t
        c[:, t] = c_t
        h[:, t] = h_t
        h_prev, c_prev = h_t, c_t
    n_layers = len(hyper.head_dims) + 1
    tag_acts, tag_probs = _head_forward(params, "tag", h, n_layers)
    lm_acts, lm_probs = _head_forward(params, "lm", h, n_layers)
    return ForwardTrace(ids, mask, z, gi, gf, go, gg, c, np.tanh(c), h,
                        tag_acts, lm_acts, tag_probs, lm_probs)


def loss(params: Parameters, hyper: Hyperparams, trace: ForwardTrace,
         tag_targets: np.ndarray, lm_targets: np.ndarray,
         class_weight_vector: np.ndarray) -> tuple[float, dict]:
    """Total loss with its components, accumulated in float64.

    Raises ValueError if an unmasked gold tag has class weight zero (the
    weights were derived from data that lacks that class).
    """
    mask = trace.mask.astype(np.float64)
    m = mask.sum()
    w = np.asarray(class_weight_vector, dtype=np.float64)[tag_targets]
    if np.any((w == 0.0) & (mask > 0)):
        bad = np.argwhere((w == 0.0) & (mask > 0))[0]
        raise ValueError(
            f"gold tag with zero class weight at batch {bad[0]}, step {bad[1]}"
        )
    if m > 0:
        p_gold = np.take_along_axis(
            trace.tag_probs.astype(np.float64), tag_targets[..., None], axis=2
        )[..., 0]
        q_next = np.take_along_axis(
            trace.lm_probs.astype(np.float64), lm_targets[..., None], axis=2
        )[..., 0]
        # keep masked positions out of the log (padded probs may underflow)
        p_gold = np.where(mask > 0, p_gold, 1.0)
        q_next = np.where(mask > 0, q_next, 1.0)
        main = float((mask * w * -np.log(p_gold)).sum() / m)
        lm = float((mask * -np.log(q_next)).sum() / m)
    else:
        main = lm = 0.0
    reg = 0.5 * hyper.l2_penalty * params.squared_weight_sum()
    total = main + hyper.lm_weight * lm + reg
    return total, {"main": main, "lm": lm, "reg": reg, "total": total}


def _head_backward(params: Parameters, head: str, acts: list, probs: np.ndarray,
                   targets: np.ndarray, scale: np.ndarray,
                   grads: dict) -> np.ndarray:
    """Backprop one softmax head; returns the gradient w.r.t. its input."""
    B, T, out_dim = probs.shape
    dlogits = probs * scale[..., None]
    flat = dlogits.reshape(-1, out_dim)
    flat[np.arange(flat.shape[0]), targets.reshape(-1)] -= scale.reshape(-1)
    n_layers = len(acts)
    d_up = dlogits
    for i in range(n_layers - 1, -1, -1):
        a_in = acts[i]
        grads[f"{head}_w{i}"] += (
            a_in.reshape(-1, a_in.shape[-1]).T @ d_up.reshape(-1, d_up.shape[-1])
        )
        grads[f"{head}_b{i}"] += d_up.reshape(-1, d_up.shape[-1]).sum(axis=0)
        d_in = d_up @ params[f"{head}_w{i}"].T
        if i > 0:
            d_in = d_in * (1.0 - a_in * a_in)
        d_up = d_in
    return d_up  # gradient w.r.t. acts[0] == h


def _cell_sweep(params: Parameters, hyper: Hyperparams, trace: ForwardTrace,
                seeds: np.ndarray, t_hi: int, t_lo: int, grads: dict):
    """Backward through steps t_hi..t_lo, injecting seeds[:, t] at each step."""
    D = hyper.embedding_dim
    B = trace.ids.shape[0]
    H = hyper.hidden_dim
    dh_next = np.zeros((B, H), dtype=params.dtype)
    dc_next = np.zeros_like(dh_next)
    for t in range(t_hi, t_lo - 1, -1):
        dh = seeds[:, t] + dh_next
        i_t, f_t = trace.gate_i[:, t], trace.gate_f[:, t]
        o_t, g_t = trace.gate_o[:, t], trace.gate_g[:, t]
        tanh_c = trace.tanh_c[:, t]
        c_prev = trace.c[:, t - 1] if t > 0 else np.zeros_like(dh)
        do = dh * tanh_c
        dc = dh * o_t * (1.0 - tanh_c * tanh_c) + dc_next
        di = dc * g_t
        dg = dc * i_t
        df = dc * c_prev
        dc_next = dc * f_t
        dpre_i = di * i_t * (1.0 - i_t)
        dpre_f = df * f_t * (1.0 - f_t)
        dpre_o = do * o_t * (1.0 - o_t)
        dpre_g = dg * (1.0 - g_t * g_t)
        zt = trace.z[:, t]
        dz = (
            dpre_i @ params["cell_w_input"].T
            + dpre_f @ params["cell_w_forget"].T
            + dpre_o @ params["cell_w_output"].T
            + dpre_g @ params["cell_w_cand"].T
        )
        for gate, dpre in (("input", dpre_i), ("forget", dpre_f),
                           ("output", dpre_o), ("cand", dpre_g)):
            grads[f"cell_w_{gate}"] += zt.T @ dpre
            grads[f"cell_b_{gate}"] += dpre.sum(axis=0)
        np.add.at(grads["embed"], trace.ids[:, t], dz[:, :D])
        dh_next = dz[:, D:]


def backward(params: Parameters, hyper: Hyperparams, trace: ForwardTrace,
             tag_targets: np.ndarray, lm_targets: np.ndarray,
             class_weight_vector: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the total loss for every parameter array.

    Gradient flow through recurrent state is cut after ``bptt_window`` steps:
    loss terms at steps below the window share one backward sweep, later
    terms get their own windowed sweep.
    """
    dtype = params.dtype
    mask = trace.mask.astype(dtype)
    m = float(mask.sum())
    grads = params.zeros_like()
    if m > 0:
        w = np.asarray(class_weight_vector, dtype=dtype)[tag_targets]
        scale_tag = (mask * w / m).astype(dtype)
        scale_lm = (mask * (hyper.lm_weight / m)).astype(dtype)
        dh = _head_backward(params, "tag", trace.tag_acts, trace.tag_probs,
                            tag_targets, scale_tag, grads)
        dh += _head_backward(params, "lm", trace.lm_acts, trace.lm_probs,
                             lm_targets, scale_lm, grads)
        T = trace.steps
        n = hyper.bptt_window
        if T <= n:
            _cell_sweep(params, hyper, trace, dh, T - 1, 0, grads)
        else:
            shared = dh.copy()
            shared[:, n:] = 0.0
            _cell_sweep(params, hyper, trace, shared, n - 1, 0, grads)
            single = np.zeros_like(dh)
            for t0 in range(n, T):
                single[:] = 0.0
                single[:, t0] = dh[:, t0]
                _cell_sweep(params, hyper, trace, single, t0, t0 - n + 1, grads)
    for name in params.weight_names():
        grads[name] += (hyper.l2_penalty * params[name]).astype(dtype)
    return grads


def _guarded_relative_error(analytic: float, numeric: float) -> float:
    denom = max(abs(analytic) + abs(numeric), 1e-3)
    return abs(analytic - numeric) / denom


def gradient_check(hyper: Hyperparams | None = None, seed: int = 0, h: float = 1e-4,
                   samples_per_matrix: int = 200,
                   batch: tuple | None = None) -> float:
    """Compare analytic gradients against central differences in float64.

    Samples at least ``samples_per_matrix`` entries per parameter array (all
    entries for small arrays) and returns the largest guarded relative error
    |a - n| / max(|a| + |n|, 1e-3).
    """
    if hyper is None:
        hyper = Hyperparams(vocab_size=20, embedding_dim=8, hidden_dim=12,
                            head_dims=(10,), bptt_window=20, seed=seed)
    rng = np.random.default_rng(seed)
    params = init_params(hyper, seed=seed, dtype=np.float64)
    if batch is None:
        B, T = 4, 9
        ids = rng.integers(0, hyper.vocab_size, size=(B, T))
        k = min(hyper.vocab_size, B * T)  # touch every embedding row if possible
        ids.flat[:k] = np.arange(k)
        lengths = rng.integers(3, T + 1, size=B)
        mask = (np.arange(T)[None, :] < lengths[:, None]).astype(np.float64)
        tag_targets = rng.integers(0, NUM_TAGS, size=(B, T))
        lm_targets = rng.integers(0, hyper.vocab_size, size=(B, T))
        weights = 0.25 + rng.random(NUM_TAGS) * 4.0
    else:
        ids, mask, tag_targets, lm_targets, weights = batch

    def total_loss() -> float:
        trace = forward_batch(params, hyper, ids, mask)
        return loss(params, hyper, trace, tag_targets, lm_targets, weights)[0]

    trace = forward_batch(params, hyper, ids, mask)
    grads = backward(params, hyper, trace, tag_targets, lm_targets, weights)
    worst = 0.0
    for name in params.names():
        arr = params[name]
        flat = arr.reshape(-1)
        k = flat.shape[0]
        if k <= samples_per_matrix:
            indices = np.arange(k)
        else:
            indices = rng.choice(k, size=samples_per_matrix, replace=False)
        g_flat = grads[name].reshape(-1)
        for idx in indices:
            orig = flat[idx]
            flat[idx] = orig + h
            up = total_loss()
            flat[idx] = orig - h
            down = total_loss()
            flat[idx] = orig
            numeric = (up - down) / (2.0 * h)
            worst = max(worst, _guarded_relative_error(float(g_flat[idx]), numeric))
    return worst


class Session:
    """Streaming inference over one utterance; emitted tags are never revised."""

    def __init__(self, params: Parameters, hyper: Hyperparams,
                 vocab: Vocabulary | None = None):
        self.params = params
        self.hyper = hyper
        self.vocab = vocab
        self._h = np.zeros(hyper.hidden_dim, dtype=params.dtype)
        self._c = np.zeros_like(self._h)
        self.consumed = 0
        self.closed = False

    def feed_token(self, token_id: int) -> tuple[Tag, np.ndarray, np.ndarray]:
        if self.closed:
            raise RuntimeError("cannot feed a closed session")
        if not 0 <= token_id < self.hyper.vocab_size:
            raise ValueError(f"token id {token_id} outside vocabulary")
        p = self.params
        x = p["embed"][token_id]
        z = np.concatenate([x, self._h])
        i_t = _sigmoid(z @ p["cell_w_input"] + p["cell_b_input"])
        f_t = _sigmoid(z @ p["cell_w_forget"] + p["cell_b_forget"])
        o_t = _sigmoid(z @ p["cell_w_output"] + p["cell_b_output"])
        g_t = np.tanh(z @ p["cell_w_cand"] + p["cell_b_cand"])
        self._c = f_t * self._c + i_t * g_t
        self._h = o_t * np.tanh(self._c)
        if not np.isfinite(self._h).all():
            raise NumericFault(f"non-finite hidden state at step {self.consumed}")
        n_layers = len(self.hyper.head_dims) + 1
        _, tag_probs = _head_forward(p, "tag", self._h[None, :], n_layers)
        _, lm_probs = _head_forward(p, "lm", self._h[None, :], n_layers)
        self.consumed += 1
        tag_probs, lm_probs = tag_probs[0], lm_probs[0]
        return ALL_TAGS[int(np.argmax(tag_probs))], tag_probs, lm_probs

    def feed_word(self, word: str, pos: str) -> tuple[Tag, np.ndarray, np.ndarray]:
        if self.vocab is None:
            raise RuntimeError("session has no vocabulary; feed token ids instead")
        return self.feed_token(self.vocab.id_of(word, pos))

    def end_utterance(self):
        self._h[:] = 0.0
        self._c[:] = 0.0
        self.consumed = 0

    def close(self):
        self.closed = True


@dataclass
class TaggerModel:
    params: Parameters
    hyper: Hyperparams
    vocab: Vocabulary

    def open_session(self) -> Session:
        return Session(self.params, self.hyper, self.vocab)

    def tag_ids(self, ids: Sequence[int]) -> list[Tag]:
        session = self.open_session()
        out = [session.feed_token(i)[0] for i in ids]
        session.close()
        return out

    def tag_tokens(self, tokens: Sequence[tuple[str, str]]) -> list[Tag]:
        return self.tag_ids([self.vocab.id_of(w, p) for w, p in tokens])

    def tag_utterance(self, utterance) -> list[Tag]:
        ids = encode_utterance(self.vocab, utterance)[:-1]  # no EOS input
        return self.tag_ids(ids)

    def tag_corpus(self, corpus) -> list[list[Tag]]:
        """Predicted tag sequences for every utterance, in corpus order."""
        return [self.tag_utterance(utt) for utt in corpus.utterances()]

    def save(self, path):
        save_model(self.params, self.hyper, self.vocab, path)


def measure_latency(model: TaggerModel, utterances, repeats: int = 1) -> float:
    """Mean seconds per fed token over the given utterances."""
    total_tokens = 0
    start = time.perf_counter()
    for _ in range(repeats):
        session = model.open_session()
        for utt in utterances:
            for tok in utt.tokens:
                session.feed_word(tok.word, tok.pos)
                total_tokens += 1
            session.end_utterance()
    elapsed = time.perf_counter() - start
    return elapsed / max(total_tokens, 1)


def save_model(params: Parameters, hyper: Hyperparams, vocab: Vocabulary, path):
    """Write magic, version, JSON header, then little-endian float32 tensors."""
    manifest = []
    offset = 0
    for name in params.names():
        arr = params[name]
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size * 4
    header = {
        "hyper": hyper.to_json_dict(),
        "vocab": {"entries": list(vocab.entries), "counts": list(vocab.counts)},
        "tensors": manifest,
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", MODEL_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for name in params.names():
            fh.write(np.ascontiguousarray(params[name], dtype="<f4").tobytes())


def load_model(path) -> TaggerModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"not a model file (bad magic {data[:4]!r})")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    (header_len,) = struct.unpack_from("<Q", data, 8)
    header_end = 16 + header_len
    if header_end > len(data):
        raise ModelFormatError("truncated model file (header)")
    try:
        header = json.loads(data[16:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt model header: {exc}") from None
    hyper = Hyperparams.from_json_dict(header["hyper"])
    vocab = Vocabulary(tuple(header["vocab"]["entries"]),
                       tuple(header["vocab"]["counts"]))
    expected = {name: tuple(shape) for name, shape in _tensor_shapes(hyper)}
    arrays: dict[str, np.ndarray] = {}
    base = header_end
    for entry in header["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if expected.get(name) != shape:
            raise ModelFormatError(
                f"tensor {name!r} has shape {shape}, expected {expected.get(name)}"
            )
        count = int(np.prod(shape))
        start = base + entry["offset"]
        end = start + count * 4
        if end > len(data):
            raise ModelFormatError(f"truncated model file (tensor {name!r})")
        arrays[name] = np.frombuffer(data[start:end], dtype="<f4").reshape(shape).copy()
    missing = set(expected) - set(arrays)
    if missing:
        raise ModelFormatError(f"model file lacks tensors: {sorted(missing)}")
    return TaggerModel(Parameters(arrays), hyper, vocab)
