"""Pointer network: LSTM encoder, LSTM decoder, additive attention over input slots.

Everything is plain numpy with hand-written backward passes.  A batch holds
``B`` sequences padded to ``N`` points.  Slot ``N`` of the encoder output is
the terminal slot: its state comes from one extra encoder step on a learned
terminal embedding, and pointing at it ends the room sequence.  A sample
with ``n`` real points therefore addresses slots ``0..n-1`` and its terminal
index ``n``; :func:`make_batch` remaps ``n`` to the padded slot ``N``.

Gate layout in every ``(H, 4H)`` weight block is ``[input, forget, output, cell]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from roomcloud.errors import NumericError
from roomcloud.ptrnet.config import PtrNetConfig


def param_shapes(cfg: PtrNetConfig) -> dict[str, tuple[int, ...]]:
    h, a = cfg.hidden, cfg.attn
    return {
        "emb_W": (2, h),
        "emb_b": (h,),
        "enc_Wx": (h, 4 * h),
        "enc_Wh": (h, 4 * h),
        "enc_b": (4 * h,),
        "dec_Wx": (h, 4 * h),
        "dec_Wh": (h, 4 * h),
        "dec_b": (4 * h,),
        "W1": (h, a),
        "W2": (h, a),
        "v": (a,),
        "start_emb": (h,),
        "term_emb": (h,),
    }


def init_params(cfg: PtrNetConfig) -> dict[str, np.ndarray]:
    """Uniform(-init_scale, init_scale) for every tensor, drawn in a fixed order."""
    rng = np.random.default_rng(cfg.seed)
    s = cfg.init_scale
    return {name: rng.uniform(-s, s, size=shape) for name, shape in param_shapes(cfg).items()}


def zeros_like_params(params):
    return {k: np.zeros_like(v) for k, v in params.items()}


def _sigmoid(x, out=None):
    out = np.multiply(x, 0.5, out=out)
    np.tanh(out, out=out)
    out += 1.0
    out *= 0.5
    return out


def lstm_step(x, h, c, Wx, Wh, b):
    """One cell update without caching; inference feeds back its own predictions."""
    H = h.shape[-1]
    z = x @ Wx + h @ Wh + b
    ifo = _sigmoid(z[..., :3 * H])
    g = np.tanh(z[..., 3 * H:])
    c_new = ifo[..., H:2 * H] * c + ifo[..., :H] * g
    h_new = ifo[..., 2 * H:] * np.tanh(c_new)
    return h_new, c_new


@dataclass
class LSTMCache:
    x: np.ndarray        # (T, B, H) inputs
    h_prev: np.ndarray   # (T, B, H)
    c_prev: np.ndarray
    ifo: np.ndarray      # (T, B, 3H) sigmoid gates
    g: np.ndarray        # (T, B, H)
    tc: np.ndarray       # (T, B, H) tanh of the new cell
    mask: np.ndarray | None  # (T, B, 1) bool, None when every step is real


def lstm_forward(x, h, c, Wx, Wh, b, mask=None):
    """Run an LSTM over ``x`` of shape ``(B, T, H_in)``.

    Where ``mask[b, t]`` is False the state is carried through unchanged.
    Returns per-step hidden states ``(B, T, H)``, the final ``(h, c)``, and
    the cache for :func:`lstm_backward`.
    """
    B, T, _ = x.shape
    H = h.shape[1]
    xt = np.ascontiguousarray(np.swapaxes(x, 0, 1))
    zx = xt @ Wx + b
    dt = zx.dtype
    hs = np.empty((T, B, H), dt)
    h_prev = np.empty((T, B, H), dt)
    c_prev = np.empty((T, B, H), dt)
    ifo = np.empty((T, B, 3 * H), dt)
    g = np.empty((T, B, H), dt)
    tc = np.empty((T, B, H), dt)
    m = None if mask is None else np.swapaxes(mask, 0, 1)[:, :, None]
    for t in range(T):
        h_prev[t] = h
        c_prev[t] = c
        z = zx[t]
        z += h @ Wh
        _sigmoid(z[:, :3 * H], out=ifo[t])
        np.tanh(z[:, 3 * H:], out=g[t])
        c_new = ifo[t, :, H:2 * H] * c
        c_new += ifo[t, :, :H] * g[t]
        np.tanh(c_new, out=tc[t])
        h_new = ifo[t, :, 2 * H:] * tc[t]
        if m is not None and not m[t].all():
            h_new = np.where(m[t], h_new, h)
            c_new = np.where(m[t], c_new, c)
        h, c = h_new, c_new
        hs[t] = h
    cache = LSTMCache(x=xt, h_prev=h_prev, c_prev=c_prev, ifo=ifo, g=g, tc=tc, mask=m)
    return np.swapaxes(hs, 0, 1), (h, c), cache


def lstm_backward(dhs, dh, dc, cache: LSTMCache, Wx, Wh, grads, prefix):
    """Backprop through :func:`lstm_forward`.

    ``dhs`` is the upstream gradient on every step's hidden state, ``dh``/``dc``
    on the final state.  Weight gradients are added into ``grads``; returns
    gradients for the inputs ``(B, T, H_in)`` and the initial ``(h, c)``.
    """
    T, B, H = cache.g.shape
    dz = np.empty((T, B, 4 * H), cache.g.dtype)
    dhs_t = np.swapaxes(dhs, 0, 1)
    m = cache.mask
    for t in range(T - 1, -1, -1):
        dh = dh + dhs_t[t]
        masked = m is not None and not m[t].all()
        if masked:
            dh_skip = np.where(m[t], 0.0, dh)
            dc_skip = np.where(m[t], 0.0, dc)
            dh = np.where(m[t], dh, 0.0)
            dc = np.where(m[t], dc, 0.0)
        i = cache.ifo[t, :, :H]
        f = cache.ifo[t, :, H:2 * H]
        o = cache.ifo[t, :, 2 * H:]
        g, tc = cache.g[t], cache.tc[t]
        dc = dc + dh * o * (1.0 - tc * tc)
        dzt = dz[t]
        dzt[:, :H] = dc * g * i * (1.0 - i)
        dzt[:, H:2 * H] = dc * cache.c_prev[t] * f * (1.0 - f)
        dzt[:, 2 * H:3 * H] = dh * tc * o * (1.0 - o)
        dzt[:, 3 * H:] = dc * i * (1.0 - g * g)
        dh = dzt @ Wh.T
        dc = dc * f
        if masked:
            dh += dh_skip
            dc += dc_skip
    flat = dz.reshape(T * B, 4 * H)
    grads[prefix + "Wx"] += cache.x.reshape(T * B, -1).T @ flat
    grads[prefix + "Wh"] += cache.h_prev.reshape(T * B, H).T @ flat
    grads[prefix + "b"] += flat.sum(axis=0)
    dx = np.swapaxes((dz @ Wx.T), 0, 1)
    return dx, dh, dc


@dataclass
class Batch:
    points: np.ndarray      # (B, N, 2), zero padded
    lengths: np.ndarray     # (B,) real point counts
    labels: np.ndarray      # (B, M) slot indices, terminal remapped to N, padded with N
    steps: np.ndarray       # (B,) real decode lengths (terminal included)
    ids: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def make_batch(samples, ids=None) -> Batch:
    """Pack ``(points, labels)`` pairs; labels must already end with the terminal index n."""
    samples = list(samples)
    if not samples:
        raise ValueError("empty batch")
    B = len(samples)
    N = max(len(p) for p, _ in samples)
    M = max(len(l) for _, l in samples)
    pts = np.zeros((B, N, 2))
    lab = np.full((B, M), N, dtype=np.int64)
    lengths = np.zeros(B, dtype=np.int64)
    steps = np.zeros(B, dtype=np.int64)
    for k, (p, l) in enumerate(samples):
        p = np.asarray(p, dtype=np.float64)
        l = np.asarray(l, dtype=np.int64)
        n = len(p)
        if n == 0:
            raise ValueError("sample has no input points")
        if len(l) == 0 or l.min() < 0 or l.max() > n:
            raise ValueError(f"label out of range for sample {k} with {n} points")
        pts[k, :n] = p
        lab[k, :len(l)] = np.where(l == n, N, l)
        lengths[k] = n
        steps[k] = len(l)
    return Batch(points=pts, lengths=lengths, labels=lab, steps=steps,
                 ids=list(ids) if ids is not None else list(range(B)))


def with_terminal(labels, n: int) -> np.ndarray:
    return np.concatenate([np.asarray(labels, dtype=np.int64), [n]])


@dataclass
class ForwardTrace:
    encoder_states: np.ndarray     # (B, N+1, H); slot N is the terminal state
    decoder_states: np.ndarray     # (B, M, H)
    scores: np.ndarray             # (B, M, N+1), -inf on padded slots
    log_probs: np.ndarray          # (B, M, N+1)
    nll: np.ndarray                # (B,) per-sample negative log-likelihood
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)


def slot_mask(lengths: np.ndarray, N: int) -> np.ndarray:
    j = np.arange(N + 1)[None, :]
    return (j < lengths[:, None]) | (j == N)


def encoder_inputs(params, points):
    B, N, _ = points.shape
    H = params["emb_b"].shape[0]
    X = points.astype(params["emb_W"].dtype, copy=False) @ params["emb_W"] + params["emb_b"]
    Xin = np.empty((B, N + 1, H), X.dtype)
    Xin[:, :N] = X
    Xin[:, N] = params["term_emb"]
    return X, Xin


def encode_batch(params, points, lengths, keep_cache=False):
    """Encoder states ``(B, N+1, H)`` and the final ``(h, c)`` after the terminal step."""
    B, N, _ = points.shape
    H = params["emb_b"].shape[0]
    X, Xin = encoder_inputs(params, points)
    mask = slot_mask(lengths, N)
    if mask.all():
        mask = None
    zeros = np.zeros((B, H), X.dtype)
    hs, final, cache = lstm_forward(Xin, zeros, zeros, params["enc_Wx"], params["enc_Wh"],
                                    params["enc_b"], mask)
    return hs, final, X, (cache if keep_cache else None)


def attention_scores(params, encoder_states, d):
    """``u_j = v . tanh(W1 e_j + W2 d)`` for every slot; shapes ``(..., N+1)``."""
    E1 = encoder_states @ params["W1"]
    T = np.tanh(E1 + (d @ params["W2"])[..., None, :])
    return T @ params["v"]


def pointer_distribution(u) -> np.ndarray:
    """Softmax over the last axis with max subtraction."""
    u = np.asarray(u, dtype=np.float64)
    z = u - np.max(u, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(u):
    mx = np.max(u, axis=-1, keepdims=True)
    z = u - mx
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def forward(params, batch: Batch, keep_cache: bool = True) -> ForwardTrace:
    """Teacher-forced pass: step ``i + 1`` is fed the embedding of true label ``i``.

    Teacher forcing makes the decoder recurrence independent of the attention
    output, so both LSTMs run first and attention is evaluated for all real
    ``(sample, step)`` rows in one block.
    """
    P, L, Y, S = batch.points, batch.lengths, batch.labels, batch.steps
    B, N, _ = P.shape
    M = Y.shape[1]
    H = params["emb_b"].shape[0]
    hs, (h, c), X, enc_cache = encode_batch(params, P, L, keep_cache=True)

    dt = X.dtype
    feed = np.concatenate([X, np.zeros((B, 1, H), dt)], axis=1)
    dec_in = np.empty((B, M, H), dt)
    dec_in[:, 0] = params["start_emb"]
    dec_in[:, 1:] = feed[np.arange(B)[:, None], Y[:, :-1]]
    ds, _, dec_cache = lstm_forward(dec_in, h, c, params["dec_Wx"], params["dec_Wh"],
                                    params["dec_b"])

    step_mask = np.arange(M)[None, :] < S[:, None]
    rb, ri = np.nonzero(step_mask)          # b-major order
    valid = slot_mask(L, N)
    E1 = hs @ params["W1"]
    D2 = ds[rb, ri] @ params["W2"]
    starts = np.flatnonzero(np.r_[True, rb[1:] != rb[:-1]])
    stops = np.r_[starts[1:], len(rb)]
    T = np.empty((len(rb), N + 1, E1.shape[2]), dt)
    for lo, hi in zip(starts, stops):
        np.add(E1[rb[lo]][None], D2[lo:hi, None, :], out=T[lo:hi])
    np.tanh(T, out=T)
    u = T @ params["v"]
    u[~valid[rb]] = -np.inf
    lp = log_softmax(u.astype(np.float64))
    target = Y[rb, ri]
    nll = -np.bincount(rb, weights=lp[np.arange(len(rb)), target], minlength=B)

    scores = np.full((B, M, N + 1), -np.inf)
    logp = np.full((B, M, N + 1), -np.inf)
    scores[rb, ri] = u
    logp[rb, ri] = lp
    cache = {}
    if keep_cache:
        cache = dict(enc=enc_cache, dec=dec_cache, rows=(rb, ri), starts=starts, T=T, lp=lp,
                     target=target)
    return ForwardTrace(encoder_states=hs, decoder_states=ds, scores=scores, log_probs=logp,
                        nll=nll, cache=cache)


def backward(params, batch: Batch, trace: ForwardTrace) -> dict[str, np.ndarray]:
    """Gradients of the batch-mean NLL with respect to every parameter.

    Consumes the attention block cached by :func:`forward` (it is squared in
    place), so each trace supports one backward pass.
    """
    P, L, Y = batch.points, batch.lengths, batch.labels
    B, N, _ = P.shape
    M = Y.shape[1]
    H = params["emb_b"].shape[0]
    cache = trace.cache
    if "T" not in cache:
        raise RuntimeError("trace has no attention cache; run forward(keep_cache=True) again")
    grads = zeros_like_params(params)
    rb, ri = cache["rows"]
    R = len(rb)
    v, W1, W2 = params["v"], params["W1"], params["W2"]

    dU = np.exp(cache["lp"])
    dU[np.arange(R), cache["target"]] -= 1.0
    dU /= B
    dt = v.dtype
    dU = dU.astype(dt, copy=False)
    T = cache.pop("T")
    grads["v"] += np.tensordot(dU, T, axes=([0, 1], [0, 1]))
    # dS = dU v (1 - T^2); with G = dU T^2 and sum_j dU = 0:
    #   dD2 = -v * sum_j G,  dE1 = v * (sum_rows dU - sum_rows G)
    np.multiply(T, T, out=T)
    dD2 = -v * np.matmul(dU[:, None, :], T)[:, 0]
    T *= dU[:, :, None]
    G = T
    starts = cache["starts"]
    dE1 = v * (np.add.reduceat(dU, starts, axis=0)[:, :, None]
               - np.add.reduceat(G, starts, axis=0))
    del G, T

    d_rows = trace.decoder_states[rb, ri]
    grads["W2"] += d_rows.T @ dD2
    dds = np.zeros((B, M, H), dt)
    dds[rb, ri] = dD2 @ W2.T
    zeros = np.zeros((B, H), dt)
    d_dec_in, dh, dc = lstm_backward(dds, zeros, zeros, cache["dec"], params["dec_Wx"],
                                     params["dec_Wh"], grads, "dec_")
    grads["start_emb"] += d_dec_in[:, 0].sum(axis=0)

    hs = trace.encoder_states
    grads["W1"] += np.tensordot(hs, dE1, axes=([0, 1], [0, 1]))
    dhs = dE1 @ W1.T
    d_enc_in, _, _ = lstm_backward(dhs, dh, dc, cache["enc"], params["enc_Wx"],
                                   params["enc_Wh"], grads, "enc_")
    grads["term_emb"] += d_enc_in[:, N].sum(axis=0)
    dX = d_enc_in[:, :N].copy()
    fb, fi = np.nonzero(Y[:, :-1] < N)
    np.add.at(dX, (fb, Y[fb, fi]), d_dec_in[fb, fi + 1])
    grads["emb_W"] += np.tensordot(P.astype(dt, copy=False), dX, axes=([0, 1], [0, 1]))
    grads["emb_b"] += dX.sum(axis=(0, 1))
    return grads


def loss_and_grad(params, batch: Batch):
    """Mean per-sample NLL and its exact gradient."""
    if batch.size == 0:
        raise ValueError("empty batch")
    trace = forward(params, batch, keep_cache=True)
    bad = ~np.isfinite(trace.nll)
    if bad.any():
        ids = [batch.ids[k] for k in np.flatnonzero(bad)]
        raise NumericError(f"non-finite loss for samples {ids}", ids)
    loss = float(trace.nll.mean())
    grads = backward(params, batch, trace)
    return loss, grads


def forward_teacher_forced(params, points, labels):
    """Single-sample trace and NLL; ``labels`` must end with the terminal index ``len(points)``."""
    batch = make_batch([(points, labels)])
    trace = forward(params, batch, keep_cache=False)
    return trace, float(trace.nll[0])


def encode(params, points) -> np.ndarray:
    """``(n + 1, H)`` encoder states for one sequence; the last row is the terminal slot."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("cannot encode an empty sequence")
    hs, _, _, _ = encode_batch(params, points[None], np.array([len(points)]))
    return hs[0]
