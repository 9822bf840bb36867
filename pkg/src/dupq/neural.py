"""Neural sentence-pair classifiers with hand-derived gradients.

Five kinds: cbow, lstm, lstm_attn, bilstm, bilstm_attn.  Each encoder
produces one vector per question; the pair head classifies the
concatenation of the two vectors, their difference, and their element-wise
product.  CBOW feeds that through a 3-layer tanh MLP, the others through a
single tanh layer, both followed by a 2-way softmax.

Attention follows the dot-product alignment scheme: scores e_ij = u_i.v_j,
row-normalized to attend question 2 for every token of question 1 and
column-normalized for the reverse direction.  The single-direction models
combine the last attended and raw states through tanh(W a + V r); the
bidirectional ones combine the means of both sequences.

Everything is float64 numpy; gradients of every parameter group check out
against central finite differences (see gradient_check).
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import Dataset, QuestionPair
from .embeddings import EmbeddingTable, GaussianOOV
from .errors import NumericError
from .text import tokenize

MODEL_KINDS = ("cbow", "lstm", "lstm_attn", "bilstm", "bilstm_attn")
PAD = "<pad>"


@dataclass(frozen=True)
class NeuralConfig:
    hidden_dim: int = 300
    embedding_dim: int = 300
    dropout_rate: float = 0.1
    l2_beta: float = 0.01  # applied to non-embedding parameters; forced 0 for cbow
    step_size: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 10
    batch_size: int = 128
    oov_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.hidden_dim < 1 or self.embedding_dim < 1:
            raise ValueError("hidden_dim and embedding_dim must be >= 1")

    def effective_beta(self, kind: str) -> float:
        return 0.0 if kind == "cbow" else self.l2_beta


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _softmax_rows(e: np.ndarray) -> np.ndarray:
    shifted = e - e.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def _glorot(rng, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class EncoderState:
    states: np.ndarray  # (T, R): per-token hidden vectors
    pooled: np.ndarray  # (R,): final state (LSTM) or mean state (BiLSTM)


@dataclass
class AttentionOutput:
    scores: np.ndarray  # (lu, lv) raw dot products
    row_weights: np.ndarray  # softmax over j for each i
    col_weights: np.ndarray  # softmax over i for each j
    u_attended: np.ndarray  # (lu, R)
    v_attended: np.ndarray  # (lv, R)


def attention(U: np.ndarray, V: np.ndarray) -> AttentionOutput:
    """Dot-product alignment between two state sequences."""
    U = np.atleast_2d(U)
    V = np.atleast_2d(V)
    if U.shape[1] != V.shape[1]:
        raise ValueError("state dimensions differ")
    e = U @ V.T
    A = _softmax_rows(e)
    B = _softmax_rows(e.T).T  # softmax over i for each column j
    return AttentionOutput(
        scores=e, row_weights=A, col_weights=B, u_attended=A @ V, v_attended=B.T @ U
    )


# ---------------------------------------------------------------------------
# LSTM primitives


def _lstm_forward(X: np.ndarray, Wx, Wh, b):
    """Run the recurrence over X (T, De); returns hidden states and a cache."""
    T = X.shape[0]
    H = Wh.shape[1]
    hs = np.zeros((T, H))
    cache = []
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(T):
        z = Wx @ X[t] + Wh @ h + b
        i = 1.0 / (1.0 + np.exp(-z[:H]))
        f = 1.0 / (1.0 + np.exp(-z[H : 2 * H]))
        o = 1.0 / (1.0 + np.exp(-z[2 * H : 3 * H]))
        g = np.tanh(z[3 * H :])
        c_new = f * c + i * g
        ct = np.tanh(c_new)
        h_new = o * ct
        cache.append((X[t], h, c, i, f, o, g, ct))
        h, c = h_new, c_new
        hs[t] = h
    return hs, cache


def _lstm_backward(dhs: np.ndarray, cache, Wx, Wh):
    """BPTT given per-step gradients dhs (T, H); returns parameter grads and dX."""
    T = len(cache)
    H = Wh.shape[1]
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(4 * H)
    dX = np.zeros((T, Wx.shape[1]))
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        x, hprev, cprev, i, f, o, g, ct = cache[t]
        dh = dhs[t] + dh_next
        do = dh * ct
        dc = dc_next + dh * o * (1.0 - ct * ct)
        df = dc * cprev
        di = dc * g
        dg = dc * i
        dc_next = dc * f
        dz = np.concatenate(
            [di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g * g)]
        )
        dWx += np.outer(dz, x)
        dWh += np.outer(dz, hprev)
        db += dz
        dX[t] = Wx.T @ dz
        dh_next = Wh.T @ dz
    return dWx, dWh, db, dX


# ---------------------------------------------------------------------------
# Model


class NeuralPairModel:
    """Trainable pair classifier; parameters live in a flat name->array dict."""

    def __init__(self, kind: str, cfg: NeuralConfig, vocab: dict[str, int],
                 params: dict[str, np.ndarray]):
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.cfg = cfg
        self.vocab = vocab
        self.params = params

    # -- construction -------------------------------------------------------

    @property
    def is_recurrent(self) -> bool:
        return self.kind != "cbow"

    @property
    def is_bidirectional(self) -> bool:
        return self.kind.startswith("bilstm")

    @property
    def has_attention(self) -> bool:
        return self.kind.endswith("_attn")

    @property
    def rep_dim(self) -> int:
        if self.kind == "cbow":
            return self.cfg.embedding_dim
        return 2 * self.cfg.hidden_dim if self.is_bidirectional else self.cfg.hidden_dim

    @classmethod
    def build(cls, kind: str, vocab_tokens, cfg: NeuralConfig,
              table: Optional[EmbeddingTable] = None) -> "NeuralPairModel":
        """Initialize a model over a token inventory.  Embedding rows come
        from ``table`` when the token is present, Gaussian samples otherwise;
        all rows are trainable."""
        if table is not None and table.dim != cfg.embedding_dim:
            cfg = replace(cfg, embedding_dim=table.dim)
        tokens = sorted(set(vocab_tokens) - {PAD})
        vocab = {PAD: 0}
        for tok in tokens:
            vocab[tok] = len(vocab)

        oov = GaussianOOV(sigma=cfg.oov_sigma, seed=cfg.seed)
        De = cfg.embedding_dim
        emb = np.zeros((len(vocab), De))
        for tok, idx in vocab.items():
            vec = table.vector(tok) if table is not None else None
            emb[idx] = vec if vec is not None else oov.vector(tok, De)

        rng = np.random.default_rng(cfg.seed)
        H = cfg.hidden_dim
        params: dict[str, np.ndarray] = {"emb": emb}
        if kind != "cbow":
            params["lstm_Wx"] = _glorot(rng, 4 * H, De)
            params["lstm_Wh"] = _glorot(rng, 4 * H, H)
            params["lstm_b"] = np.zeros(4 * H)
            if kind.startswith("bilstm"):
                params["lstm_Wx_b"] = _glorot(rng, 4 * H, De)
                params["lstm_Wh_b"] = _glorot(rng, 4 * H, H)
                params["lstm_b_b"] = np.zeros(4 * H)
        model = cls(kind, cfg, vocab, params)
        R = model.rep_dim
        if model.has_attention:
            for name in ("att_Wu", "att_Vu", "att_Wv", "att_Vv"):
                params[name] = _glorot(rng, R, R)
        params["head_W1"] = _glorot(rng, H, 4 * R)
        params["head_b1"] = np.zeros(H)
        if kind == "cbow":
            params["head_W2"] = _glorot(rng, H, H)
            params["head_b2"] = np.zeros(H)
            params["head_W3"] = _glorot(rng, H, H)
            params["head_b3"] = np.zeros(H)
        params["head_Wout"] = _glorot(rng, 2, H)
        params["head_bout"] = np.zeros(2)
        return model

    # -- encoding -----------------------------------------------------------

    def token_ids(self, text: str) -> list[int]:
        """Tokenize and map to vocabulary ids; unknown tokens are dropped."""
        ids = [self.vocab[t] for t in tokenize(text) if t in self.vocab]
        return ids

    def _recurrent_ids(self, ids: list[int]) -> list[int]:
        return ids if ids else [self.vocab[PAD]]

    def _encode_cbow(self, ids: list[int]) -> np.ndarray:
        if not ids:
            return np.zeros(self.cfg.embedding_dim)
        return self.params["emb"][ids].sum(axis=0)

    def _encode_states(self, ids: list[int]):
        """Per-token states for recurrent kinds; returns (states, caches)."""
        ids = self._recurrent_ids(ids)
        X = self.params["emb"][ids]
        hs_f, cache_f = _lstm_forward(
            X, self.params["lstm_Wx"], self.params["lstm_Wh"], self.params["lstm_b"]
        )
        if not self.is_bidirectional:
            return ids, hs_f, (cache_f, None)
        hs_b_rev, cache_b = _lstm_forward(
            X[::-1], self.params["lstm_Wx_b"], self.params["lstm_Wh_b"], self.params["lstm_b_b"]
        )
        states = np.concatenate([hs_f, hs_b_rev[::-1]], axis=1)
        return ids, states, (cache_f, cache_b)

    def _states_backward(self, ids, caches, dstates, emb_grads, grads):
        """Push per-token state gradients through the recurrence(s) into
        parameter and embedding-row gradients."""
        cache_f, cache_b = caches
        H = self.cfg.hidden_dim
        d_f = dstates[:, :H] if self.is_bidirectional else dstates
        dWx, dWh, db, dX = _lstm_backward(d_f, cache_f, self.params["lstm_Wx"],
                                          self.params["lstm_Wh"])
        grads["lstm_Wx"] += dWx
        grads["lstm_Wh"] += dWh
        grads["lstm_b"] += db
        if self.is_bidirectional:
            d_b = dstates[:, H:][::-1]
            dWxb, dWhb, dbb, dXb = _lstm_backward(
                d_b, cache_b, self.params["lstm_Wx_b"], self.params["lstm_Wh_b"]
            )
            grads["lstm_Wx_b"] += dWxb
            grads["lstm_Wh_b"] += dWhb
            grads["lstm_b_b"] += dbb
            dX = dX + dXb[::-1]
        for t, tok_id in enumerate(ids):
            acc = emb_grads.get(tok_id)
            if acc is None:
                emb_grads[tok_id] = dX[t].copy()
            else:
                acc += dX[t]

    # -- forward / backward over one example --------------------------------

    def _forward_reps(self, ids1: list[int], ids2: list[int]):
        """Representations u, v for the pair plus the cache for backprop."""
        if self.kind == "cbow":
            u = self._encode_cbow(ids1)
            v = self._encode_cbow(ids2)
            return u, v, {"ids1": ids1, "ids2": ids2}

        ids1p, U, caches_u = self._encode_states(ids1)
        ids2p, V, caches_v = self._encode_states(ids2)
        cache = {"ids1": ids1p, "ids2": ids2p, "U": U, "V": V,
                 "caches_u": caches_u, "caches_v": caches_v}
        if not self.has_attention:
            if self.is_bidirectional:
                u, v = U.mean(axis=0), V.mean(axis=0)
            else:
                u, v = U[-1], V[-1]
            return u, v, cache

        attn = attention(U, V)
        cache["attn"] = attn
        if self.is_bidirectional:
            ua, ur = attn.u_attended.mean(axis=0), U.mean(axis=0)
            va, vr = attn.v_attended.mean(axis=0), V.mean(axis=0)
        else:
            ua, ur = attn.u_attended[-1], U[-1]
            va, vr = attn.v_attended[-1], V[-1]
        p = self.params
        su = p["att_Wu"] @ ua + p["att_Vu"] @ ur
        sv = p["att_Wv"] @ va + p["att_Vv"] @ vr
        ustar, vstar = np.tanh(su), np.tanh(sv)
        cache.update(ua=ua, ur=ur, va=va, vr=vr, ustar=ustar, vstar=vstar)
        return ustar, vstar, cache

    def _head_forward(self, u, v, dropout_rng=None):
        p = self.params
        rate = self.cfg.dropout_rate
        m = np.concatenate([u, v, u - v, u * v])
        masks = {}

        def drop(a, name):
            if dropout_rng is None or rate == 0.0:
                return a
            mask = (dropout_rng.random(a.shape) >= rate) / (1.0 - rate)
            masks[name] = mask
            return a * mask

        cache = {"masks": masks, "u": u, "v": v, "m": m}
        cache["m_d"] = drop(m, "m")
        h1 = np.tanh(p["head_W1"] @ cache["m_d"] + p["head_b1"])
        cache["h1"], cache["h1_d"] = h1, drop(h1, "h1")
        if self.kind == "cbow":
            h2 = np.tanh(p["head_W2"] @ cache["h1_d"] + p["head_b2"])
            cache["h2"], cache["h2_d"] = h2, drop(h2, "h2")
            h3 = np.tanh(p["head_W3"] @ cache["h2_d"] + p["head_b3"])
            cache["h3"], cache["h3_d"] = h3, drop(h3, "h3")
            last = cache["h3_d"]
        else:
            last = cache["h1_d"]
        cache["last"] = last
        logits = p["head_Wout"] @ last + p["head_bout"]
        probs = _softmax(logits)
        cache["logits"] = logits
        cache["probs"] = probs
        return probs, cache

    def _head_backward(self, cache, label, grads):
        """Returns (du, dv) for the two pair representations."""
        p = self.params
        masks = cache["masks"]

        def undrop(da, name):  # gradient through the dropout mask
            return da * masks[name] if name in masks else da

        dz = cache["probs"].copy()
        dz[label] -= 1.0
        grads["head_Wout"] += np.outer(dz, cache["last"])
        grads["head_bout"] += dz
        dlast = p["head_Wout"].T @ dz

        if self.kind == "cbow":
            h2, h3 = cache["h2"], cache["h3"]
            dh3 = undrop(dlast, "h3") * (1 - h3 * h3)
            grads["head_W3"] += np.outer(dh3, cache["h2_d"])
            grads["head_b3"] += dh3
            dh2 = undrop(p["head_W3"].T @ dh3, "h2") * (1 - h2 * h2)
            grads["head_W2"] += np.outer(dh2, cache["h1_d"])
            grads["head_b2"] += dh2
            dh1_d = p["head_W2"].T @ dh2
        else:
            dh1_d = dlast
        h1 = cache["h1"]
        dh1 = undrop(dh1_d, "h1") * (1 - h1 * h1)
        grads["head_W1"] += np.outer(dh1, cache["m_d"])
        grads["head_b1"] += dh1
        dm = undrop(p["head_W1"].T @ dh1, "m")

        R = len(cache["u"])
        u, v = cache["u"], cache["v"]
        du = dm[:R] + dm[2 * R : 3 * R] + dm[3 * R :] * v
        dv = dm[R : 2 * R] - dm[2 * R : 3 * R] + dm[3 * R :] * u
        return du, dv

    def _reps_backward(self, cache, du, dv, grads, emb_grads):
        if self.kind == "cbow":
            for tok_id in cache["ids1"]:
                acc = emb_grads.get(tok_id)
                if acc is None:
                    emb_grads[tok_id] = du.copy()
                else:
                    acc += du
            for tok_id in cache["ids2"]:
                acc = emb_grads.get(tok_id)
                if acc is None:
                    emb_grads[tok_id] = dv.copy()
                else:
                    acc += dv
            return

        U, V = cache["U"], cache["V"]
        lu, lv = len(U), len(V)
        if not self.has_attention:
            dU = np.zeros_like(U)
            dV = np.zeros_like(V)
            if self.is_bidirectional:  # pooled = mean of states
                dU += du / lu
                dV += dv / lv
            else:  # pooled = final state
                dU[-1] = du
                dV[-1] = dv
        else:
            p = self.params
            attn: AttentionOutput = cache["attn"]
            ustar, vstar = cache["ustar"], cache["vstar"]
            dsu = du * (1.0 - ustar * ustar)
            dsv = dv * (1.0 - vstar * vstar)
            grads["att_Wu"] += np.outer(dsu, cache["ua"])
            grads["att_Vu"] += np.outer(dsu, cache["ur"])
            grads["att_Wv"] += np.outer(dsv, cache["va"])
            grads["att_Vv"] += np.outer(dsv, cache["vr"])
            dua = p["att_Wu"].T @ dsu
            dur = p["att_Vu"].T @ dsu
            dva = p["att_Wv"].T @ dsv
            dvr = p["att_Vv"].T @ dsv

            dubar = np.zeros_like(U)
            dvbar = np.zeros_like(V)
            dU = np.zeros_like(U)
            dV = np.zeros_like(V)
            if self.is_bidirectional:  # combine uses sequence means
                dubar += dua / lu
                dU += dur / lu
                dvbar += dva / lv
                dV += dvr / lv
            else:  # combine uses the last positions
                dubar[-1] = dua
                dU[-1] = dur
                dvbar[-1] = dva
                dV[-1] = dvr

            A, B = attn.row_weights, attn.col_weights
            dV += A.T @ dubar  # ubar = A V
            dA = dubar @ V.T
            de = A * (dA - (dA * A).sum(axis=1, keepdims=True))
            dU += B @ dvbar  # vbar = B^T U
            dB = U @ dvbar.T
            de += B * (dB - (dB * B).sum(axis=0, keepdims=True))
            dU += de @ V  # e = U V^T
            dV += de.T @ U

        self._states_backward(cache["ids1"], cache["caches_u"], dU, emb_grads, grads)
        self._states_backward(cache["ids2"], cache["caches_v"], dV, emb_grads, grads)

    # -- batch loss ----------------------------------------------------------

    def loss_and_grads(self, examples, dropout_rng=None):
        """Mean cross-entropy (plus the L2 term) and gradients over a batch of
        (ids1, ids2, label) triples.  Returns (loss, grads, emb_grads,
        n_correct); emb_grads maps row id -> gradient vector."""
        grads = {k: np.zeros_like(v) for k, v in self.params.items() if k != "emb"}
        emb_grads: dict[int, np.ndarray] = {}
        total_loss = 0.0
        n_correct = 0
        for ids1, ids2, label in examples:
            u, v, cache = self._forward_reps(ids1, ids2)
            probs, hcache = self._head_forward(u, v, dropout_rng)
            z = hcache["logits"]
            zmax = z.max()
            total_loss += zmax + np.log(np.exp(z - zmax).sum()) - z[label]
            n_correct += int(np.argmax(probs) == label)
            du, dv = self._head_backward(hcache, label, grads)
            self._reps_backward(cache, du, dv, grads, emb_grads)

        n = max(len(examples), 1)
        total_loss /= n
        for k in grads:
            grads[k] /= n
        for g in emb_grads.values():
            g /= n
        beta = self.cfg.effective_beta(self.kind)
        if beta > 0.0:
            for k, g in grads.items():
                theta = self.params[k]
                total_loss += 0.5 * beta * float((theta * theta).sum())
                g += beta * theta
        return float(total_loss), grads, emb_grads, n_correct

    # -- inference -----------------------------------------------------------

    def pair_probabilities(self, ids1, ids2) -> np.ndarray:
        u, v, _ = self._forward_reps(ids1, ids2)
        probs, _ = self._head_forward(u, v, dropout_rng=None)
        return probs

    def encode_pair(self, p: QuestionPair) -> tuple[list[int], list[int], int]:
        return self.token_ids(p.question1), self.token_ids(p.question2), p.label

    def predict_dataset(self, d: Dataset) -> np.ndarray:
        out = np.empty(len(d), dtype=np.int64)
        for i, p in enumerate(d):
            probs = self.pair_probabilities(self.token_ids(p.question1),
                                            self.token_ids(p.question2))
            out[i] = int(np.argmax(probs))
        return out

    def predict_proba_dataset(self, d: Dataset) -> np.ndarray:
        out = np.empty(len(d))
        for i, p in enumerate(d):
            probs = self.pair_probabilities(self.token_ids(p.question1),
                                            self.token_ids(p.question2))
            out[i] = probs[1]
        return out

    def clone_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    # -- persistence ----------------------------------------------------------

    def save(self, path: str | Path) -> None:
        from . import serialize
        from dataclasses import asdict

        names = sorted(self.params)
        header = {
            "family": "neural",
            "model_kind": self.kind,
            "config": asdict(self.cfg),
            "vocab": sorted(self.vocab, key=self.vocab.get),
            "param_names": names,
        }
        serialize.write_model(path, header, [self.params[k] for k in names])

    @classmethod
    def load(cls, path: str | Path) -> "NeuralPairModel":
        from . import serialize

        header, arrays = serialize.read_model(path)
        cfg = NeuralConfig(**header["config"])
        vocab = {tok: i for i, tok in enumerate(header["vocab"])}
        params = dict(zip(header["param_names"], arrays))
        return cls(header["model_kind"], cfg, vocab, params)


# ---------------------------------------------------------------------------
# Public encoder operations (the trainable pieces, exposed for direct use)


def cbow_encode(tokens, model: NeuralPairModel) -> np.ndarray:
    """Sum of trainable embedding rows; empty input gives the zero vector."""
    ids = [model.vocab[t] for t in tokens if t in model.vocab]
    if not ids:
        return np.zeros(model.cfg.embedding_dim)
    return model.params["emb"][ids].sum(axis=0)


def lstm_encode(tokens, model: NeuralPairModel, bidirectional=None) -> EncoderState:
    """Per-token hidden states plus the pooled vector (final state for the
    single-direction model, mean state for the bidirectional one).  Empty
    input is replaced by the padding token."""
    if bidirectional is None:
        bidirectional = model.is_bidirectional
    if bidirectional and "lstm_Wx_b" not in model.params:
        raise ValueError(f"model kind {model.kind!r} has no backward direction")
    ids = [model.vocab[t] for t in tokens if t in model.vocab]
    ids = ids if ids else [model.vocab[PAD]]
    X = model.params["emb"][ids]
    hs_f, _ = _lstm_forward(X, model.params["lstm_Wx"], model.params["lstm_Wh"],
                            model.params["lstm_b"])
    if not bidirectional:
        return EncoderState(states=hs_f, pooled=hs_f[-1])
    hs_b_rev, _ = _lstm_forward(X[::-1], model.params["lstm_Wx_b"],
                                model.params["lstm_Wh_b"], model.params["lstm_b_b"])
    states = np.concatenate([hs_f, hs_b_rev[::-1]], axis=1)
    return EncoderState(states=states, pooled=states.mean(axis=0))


@dataclass
class PairEncoderState:
    u_states: np.ndarray
    v_states: np.ndarray
    u_pooled: np.ndarray
    v_pooled: np.ndarray


def encode_pair_states(tokens1, tokens2, model: NeuralPairModel) -> PairEncoderState:
    su = lstm_encode(tokens1, model)
    sv = lstm_encode(tokens2, model)
    return PairEncoderState(su.states, sv.states, su.pooled, sv.pooled)


def combine_attended(state: PairEncoderState, attn: AttentionOutput,
                     model: NeuralPairModel) -> tuple[np.ndarray, np.ndarray]:
    """tanh(W a + V r) over attended (a) and raw (r) representations: the
    last positions for the LSTM kind, sequence means for the BiLSTM kind."""
    p = model.params
    if model.is_bidirectional:
        ua, ur = attn.u_attended.mean(axis=0), state.u_states.mean(axis=0)
        va, vr = attn.v_attended.mean(axis=0), state.v_states.mean(axis=0)
    else:
        ua, ur = attn.u_attended[-1], state.u_states[-1]
        va, vr = attn.v_attended[-1], state.v_states[-1]
    ustar = np.tanh(p["att_Wu"] @ ua + p["att_Vu"] @ ur)
    vstar = np.tanh(p["att_Wv"] @ va + p["att_Vv"] @ vr)
    return ustar, vstar


def pair_head(u: np.ndarray, v: np.ndarray, model: NeuralPairModel) -> np.ndarray:
    """Class probabilities from two question representations (eval mode)."""
    probs, _ = model._head_forward(u, v, dropout_rng=None)
    return probs


# ---------------------------------------------------------------------------
# Optimizer and training


class Adam:
    """Adaptive-moment optimizer; embedding rows update lazily (only rows
    touched by the batch), every other parameter updates densely."""

    def __init__(self, params: dict[str, np.ndarray], cfg: NeuralConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, emb_grads):
        cfg = self.cfg
        self.t += 1
        c1 = 1.0 - cfg.beta1 ** self.t
        c2 = 1.0 - cfg.beta2 ** self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            params[k] -= cfg.step_size * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)
        if emb_grads:
            ids = sorted(emb_grads)
            G = np.stack([emb_grads[i] for i in ids])
            rows = np.array(ids, dtype=np.int64)
            m, v = self.m["emb"][rows], self.v["emb"][rows]
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * G
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * G * G
            self.m["emb"][rows] = m
            self.v["emb"][rows] = v
            params["emb"][rows] -= cfg.step_size * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)


def _accuracy(model: NeuralPairModel, examples) -> float:
    if not examples:
        return 0.0
    correct = 0
    for ids1, ids2, label in examples:
        probs = model.pair_probabilities(ids1, ids2)
        correct += int(np.argmax(probs) == label)
    return 100.0 * correct / len(examples)


def train(
    kind: str,
    train_data: Dataset,
    valid_data: Dataset,
    cfg: NeuralConfig,
    table: Optional[EmbeddingTable] = None,
    log_path: str | Path | None = None,
    stop_at_valid_acc: float | None = None,
) -> tuple[NeuralPairModel, list[dict]]:
    """Adam-trained model with per-epoch metrics; returns the snapshot with
    the best validation accuracy (later epochs win ties).  Training ends
    early once validation accuracy reaches ``stop_at_valid_acc``."""
    vocab_tokens: set[str] = set()
    for p in train_data:
        vocab_tokens.update(tokenize(p.question1))
        vocab_tokens.update(tokenize(p.question2))
    model = NeuralPairModel.build(kind, vocab_tokens, cfg, table)

    train_ex = [model.encode_pair(p) for p in train_data]
    valid_ex = [model.encode_pair(p) for p in valid_data]

    opt = Adam(model.params, cfg)
    shuffle_rng = np.random.default_rng((cfg.seed, 1))
    dropout_rng = np.random.default_rng((cfg.seed, 2))

    best_acc = -1.0
    best_params = model.clone_params()
    history: list[dict] = []
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(train_ex))
        epoch_loss = 0.0
        correct = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_ex[i] for i in order[start : start + cfg.batch_size]]
            loss, grads, emb_grads, n_ok = model.loss_and_grads(
                batch, dropout_rng if cfg.dropout_rate > 0 else None
            )
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            opt.step(model.params, grads, emb_grads)
            epoch_loss += loss * len(batch)
            correct += n_ok
        record = {
            "epoch": epoch,
            "train_loss": epoch_loss / max(len(train_ex), 1),
            "train_acc": 100.0 * correct / max(len(train_ex), 1),
            "valid_acc": _accuracy(model, valid_ex),
        }
        history.append(record)
        if log_path is not None:
            with open(log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")
        if record["valid_acc"] >= best_acc:
            best_acc = record["valid_acc"]
            best_params = model.clone_params()
        if stop_at_valid_acc is not None and best_acc >= stop_at_valid_acc:
            break
    model.params = best_params
    return model, history


# ---------------------------------------------------------------------------
# Gradient verification


def gradient_check(kind: str, hidden_dim: int = 4, embedding_dim: int = 3,
                   seed: int = 0, step: float = 1e-5) -> float:
    """Max relative error between analytic gradients and central finite
    differences over every parameter group of a tiny model (dropout off)."""
    cfg = NeuralConfig(
        hidden_dim=hidden_dim,
        embedding_dim=embedding_dim,
        dropout_rate=0.0,
        seed=seed,
    )
    vocab = ["what", "is", "a", "bird", "linux"]
    model = NeuralPairModel.build(kind, vocab, cfg, table=None)
    v = model.vocab
    examples = [
        ([v["what"], v["is"], v["a"]], [v["what"], v["bird"]], 1),
        ([v["linux"], v["is"]], [v["a"], v["bird"], v["linux"]], 0),
    ]

    loss, grads, emb_grads, _ = model.loss_and_grads(examples)
    analytic = dict(grads)
    full_emb = np.zeros_like(model.params["emb"])
    for i, g in emb_grads.items():
        full_emb[i] = g
    analytic["emb"] = full_emb

    worst = 0.0
    for name, theta in model.params.items():
        flat = theta.reshape(-1)
        aflat = analytic[name].reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            lp = model.loss_and_grads(examples)[0]
            flat[j] = orig - step
            lm = model.loss_and_grads(examples)[0]
            flat[j] = orig
            numeric = (lp - lm) / (2.0 * step)
            denom = max(abs(aflat[j]), abs(numeric))
            if denom > 1e-7:
                worst = max(worst, abs(aflat[j] - numeric) / denom)
    return worst
