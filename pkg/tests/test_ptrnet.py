import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roomcloud.errors import NumericError, PartialRoomError
from roomcloud.ptrnet import (
    AdamState,
    PtrNetConfig,
    adam_step,
    attention_scores,
    beam_decode,
    clip_gradients,
    decode_rooms,
    encode,
    forward,
    forward_teacher_forced,
    global_norm,
    greedy_decode,
    init_params,
    load_checkpoint,
    loss_and_grad,
    make_batch,
    pointer_distribution,
    save_checkpoint,
    train,
    with_terminal,
)
from roomcloud.ptrnet.model import lstm_step


def tiny(hidden=4, attn=5, seed=0, **kw):
    return PtrNetConfig(hidden=hidden, attn=attn, seed=seed, **kw)


def rand_points(rng, n):
    return rng.uniform(-1, 1, size=(n, 2))


def fd_check(params, batch, eps=1e-4):
    """Max relative error of analytic vs central-difference gradients over every entry."""
    _, grads = loss_and_grad(params, batch)
    worst = 0.0
    for name, p in params.items():
        num = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + eps
            lp = forward(params, batch, keep_cache=False).nll.mean()
            p[i] = old - eps
            lm = forward(params, batch, keep_cache=False).nll.mean()
            p[i] = old
            num[i] = (lp - lm) / (2 * eps)
        denom = max(np.abs(num).max(), np.abs(grads[name]).max(), 1e-8)
        worst = max(worst, np.abs(num - grads[name]).max() / denom)
    return worst


# ---------------------------------------------------------------- config and init

def test_config_validation_and_scale():
    with pytest.raises(ValueError):
        PtrNetConfig(hidden=0)
    with pytest.raises(ValueError):
        PtrNetConfig(lr=0)
    with pytest.raises(ValueError):
        PtrNetConfig(dtype="float16")
    big = PtrNetConfig.paper_scale()
    assert (big.hidden, big.attn, big.batch) == (512, 512, 128)
    assert PtrNetConfig().max_decode_len == 51


def test_init_deterministic_and_bounded():
    a, b = init_params(tiny(seed=3)), init_params(tiny(seed=3))
    c = init_params(tiny(seed=4))
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)
    assert all(np.abs(v).max() < 0.08 for v in a.values())


# ---------------------------------------------------------------- forward pieces

def test_encode_shapes_and_symmetry():
    rng = np.random.default_rng(0)
    params = init_params(tiny())
    pts = rand_points(rng, 6)
    e = encode(params, pts)
    assert e.shape == (7, 4)
    zero = {k: np.zeros_like(v) for k, v in params.items()}
    ez = encode(zero, pts)
    assert np.allclose(ez, ez[0])
    assert not np.allclose(encode(params, pts[::-1])[-1], e[-1])
    with pytest.raises(ValueError):
        encode(params, np.zeros((0, 2)))


def test_attention_scores_cases():
    params = init_params(tiny(hidden=2, attn=3))
    e = np.random.default_rng(1).normal(size=(4, 2))
    d = np.array([0.3, -0.2])
    zero_v = dict(params, v=np.zeros(3))
    assert np.all(attention_scores(zero_v, e, d) == 0)
    same = np.tile(e[:1], (4, 1))
    u = attention_scores(params, same, d)
    assert np.allclose(u, u[0])


def test_attention_hand_computed():
    params = {"W1": np.array([[1.0, 0.0], [0.0, 2.0]]), "W2": np.array([[0.5, 0.5], [-1.0, 0.0]]),
              "v": np.array([1.0, -1.0])}
    e = np.array([[0.1, 0.2], [0.3, -0.4]])
    d = np.array([0.2, 0.1])
    # W2^T d = (0.5*0.2 - 0.1, 0.5*0.2) = (0.0, 0.1)
    want = [math.tanh(0.1 + 0.0) - math.tanh(0.4 + 0.1), math.tanh(0.3) - math.tanh(-0.8 + 0.1)]
    assert np.allclose(attention_scores(params, e, d), want, atol=1e-15)


def test_pointer_distribution_cases():
    assert np.allclose(pointer_distribution(np.zeros(4)), 0.25)
    u = np.random.default_rng(0).normal(size=7)
    assert np.allclose(pointer_distribution(u), pointer_distribution(u + 123.0))
    s = pointer_distribution(np.r_[u, 1000.0])
    assert s[-1] >= 1 - 1e-6


@settings(max_examples=50)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30))
def test_pointer_distribution_sums_to_one(u):
    p = pointer_distribution(np.array(u))
    assert abs(p.sum() - 1) < 1e-9 and np.all(p > 0)


def test_uniform_net_nll():
    params = {k: np.zeros_like(v) for k, v in init_params(tiny()).items()}
    pts = rand_points(np.random.default_rng(2), 6)
    labels = with_terminal([0, 1, 2, 3], 6)
    _, nll = forward_teacher_forced(params, pts, labels)
    assert nll == pytest.approx(5 * math.log(7))


def hand_forward(params, pts, labels):
    """Step-by-step reference forward written directly from the equations."""
    H = params["emb_b"].shape[0]
    X = pts @ params["emb_W"] + params["emb_b"]
    h, c = np.zeros(H), np.zeros(H)
    enc = []
    for x in list(X) + [params["term_emb"]]:
        h, c = lstm_step(x, h, c, params["enc_Wx"], params["enc_Wh"], params["enc_b"])
        enc.append(h)
    enc = np.array(enc)
    nll, x = 0.0, params["start_emb"]
    for lab in labels:
        h, c = lstm_step(x, h, c, params["dec_Wx"], params["dec_Wh"], params["dec_b"])
        u = np.array([params["v"] @ np.tanh(params["W1"].T @ e + params["W2"].T @ h) for e in enc])
        nll -= u[lab] - math.log(np.exp(u - u.max()).sum()) - u.max()
        x = X[lab] if lab < len(pts) else np.zeros(H)
    return nll


def test_forward_matches_hand_reference():
    rng = np.random.default_rng(3)
    params = init_params(tiny(hidden=3, attn=2, seed=9))
    pts = rand_points(rng, 5)
    labels = with_terminal([4, 0, 2], 5)
    _, nll = forward_teacher_forced(params, pts, labels)
    assert nll == pytest.approx(hand_forward(params, pts, labels), rel=1e-12)
    assert nll >= 0


def test_trace_distributions_normalized():
    rng = np.random.default_rng(4)
    params = init_params(tiny())
    batch = make_batch([(rand_points(rng, 6), with_terminal([1, 2], 6)),
                        (rand_points(rng, 4), with_terminal([3], 4))])
    tr = forward(params, batch)
    for b, steps in enumerate(batch.steps):
        for i in range(steps):
            p = tr.probs[b, i]
            assert abs(p.sum() - 1) < 1e-9
            valid = np.r_[np.arange(batch.lengths[b]), batch.points.shape[1]]
            assert np.all(p[valid] > 0) and np.all(p[valid] < 1)


def test_label_out_of_range():
    with pytest.raises(ValueError):
        make_batch([(np.zeros((3, 2)), np.array([0, 5]))])
    with pytest.raises(ValueError):
        make_batch([])


# ---------------------------------------------------------------- gradients

@pytest.mark.parametrize("hidden", [4, 8])
def test_gradients_match_finite_differences(hidden):
    for seed in range(3):
        rng = np.random.default_rng(seed)
        params = init_params(tiny(hidden=hidden, attn=hidden, seed=seed, init_scale=0.5))
        batch = make_batch([(rand_points(rng, 6), with_terminal(rng.integers(0, 6, 4), 6))])
        assert fd_check(params, batch) < 1e-4


def test_gradients_padded_batch():
    rng = np.random.default_rng(11)
    params = init_params(tiny(hidden=4, attn=3, init_scale=0.5))
    batch = make_batch([(rand_points(rng, 6), with_terminal(rng.integers(0, 6, 4), 6)),
                        (rand_points(rng, 3), with_terminal([2, 0], 3)),
                        (rand_points(rng, 5), with_terminal([], 5))])
    assert fd_check(params, batch) < 1e-4


def test_duplicate_sample_same_gradient():
    rng = np.random.default_rng(5)
    params = init_params(tiny(init_scale=0.3))
    s = (rand_points(rng, 6), with_terminal([1, 4, 2], 6))
    l1, g1 = loss_and_grad(params, make_batch([s]))
    l2, g2 = loss_and_grad(params, make_batch([s, s]))
    assert l1 == pytest.approx(l2)
    assert all(np.allclose(g1[k], g2[k], atol=1e-14) for k in g1)


def test_float32_close_to_float64():
    rng = np.random.default_rng(6)
    params = init_params(tiny(hidden=16, attn=16, init_scale=0.3))
    batch = make_batch([(rand_points(rng, 30), with_terminal(rng.integers(0, 30, 10), 30))] * 3)
    l64, g64 = loss_and_grad(params, batch)
    l32, g32 = loss_and_grad({k: v.astype(np.float32) for k, v in params.items()}, batch)
    assert l32 == pytest.approx(l64, rel=1e-5)
    for k in g64:
        assert np.abs(g32[k] - g64[k]).max() <= 1e-4 * max(np.abs(g64[k]).max(), 1e-3)


def test_nonfinite_loss_reports_sample():
    params = init_params(tiny())
    params["v"][:] = np.nan
    batch = make_batch([(np.zeros((3, 2)), with_terminal([0], 3))], ids=[42])
    with pytest.raises(NumericError) as err:
        loss_and_grad(params, batch)
    assert err.value.sample_ids == [42]


# ---------------------------------------------------------------- optimizer

def test_clip_gradients():
    g = {"a": np.array([6.0, 8.0])}
    out, norm = clip_gradients(g, 5.0)
    assert norm == 10.0 and np.allclose(out["a"], [3, 4]) and global_norm(out) == pytest.approx(5)
    g = {"a": np.array([3.0, 0.0])}
    out, _ = clip_gradients(g, 5.0)
    assert np.array_equal(out["a"], g["a"])
    z = {"a": np.zeros(3)}
    assert np.array_equal(clip_gradients(z, 5.0)[0]["a"], z["a"])


def test_adam_zero_grad_and_first_step():
    p = {"w": np.array([1.0, -2.0, 0.5])}
    st0 = AdamState.zeros_like(p)
    adam_step(p, {"w": np.zeros(3)}, st0, 1e-3)
    assert np.array_equal(p["w"], [1.0, -2.0, 0.5]) and st0.step == 1
    g = np.array([0.3, -5.0, 1e-3])
    p = {"w": np.zeros(3)}
    s = AdamState.zeros_like(p)
    adam_step(p, {"w": g}, s, 1e-3)
    # bias-corrected m/sqrt(v) = sign(g) on step one, up to eps
    assert np.allclose(p["w"], -1e-3 * g / (np.abs(g) + 1e-8), rtol=1e-12)
    assert s.step == 1


# ---------------------------------------------------------------- decoding

def test_beam_width_one_is_greedy():
    params = init_params(tiny(hidden=8, attn=8, seed=1, init_scale=0.8))
    rng = np.random.default_rng(0)
    for _ in range(10):
        pts = rand_points(rng, int(rng.integers(3, 15)))
        g = greedy_decode(params, pts, b=3, k_max=3)
        b1 = beam_decode(params, pts, b=3, k_max=3, width=1)
        assert g.indices == b1.indices and g.log_prob == b1.log_prob


def test_beam_contracts():
    params = init_params(tiny(hidden=8, attn=8, seed=2, init_scale=0.8))
    rng = np.random.default_rng(1)
    for _ in range(10):
        pts = rand_points(rng, 12)
        scores = [beam_decode(params, pts, b=4, k_max=3, width=w).log_prob for w in (1, 2, 3, 4)]
        assert all(b >= a for a, b in zip(scores, scores[1:]))
        dec = beam_decode(params, pts, b=4, k_max=3, width=4)
        assert len(dec.indices) <= 4 * 3 + 1
        assert dec.indices[-1] == 12
        body = dec.indices[:-1]
        assert len(body) % 4 == 0 and len(body) > 0
        assert all(0 <= i < 12 for i in body)


def test_decode_rooms():
    pts = np.arange(60, dtype=float).reshape(30, 2)
    rooms = decode_rooms(list(range(20)) + [30], pts, 10)
    assert len(rooms) == 2 and np.array_equal(rooms[1], pts[10:20])
    (one,) = decode_rooms(list(range(5, 15)), pts, 10)
    assert np.array_equal(one, pts[5:15])
    with pytest.raises(PartialRoomError) as err:
        decode_rooms(list(range(15)), pts, 10)
    assert err.value.remainder == list(range(10, 15))


# ---------------------------------------------------------------- training and checkpoints

def toy_samples(n=8, pts=8):
    rng = np.random.default_rng(0)
    out = []
    for _ in range(n):
        p = rand_points(rng, pts)
        out.append((p, np.argsort(p[:, 0])[:3]))
    return out


def test_checkpoint_round_trip(tmp_path):
    cfg = tiny()
    params = init_params(cfg)
    state = AdamState.zeros_like(params)
    state.step = 7
    save_checkpoint(tmp_path / "c.ckpt", params, cfg, state, {"note": "x"})
    p2, cfg2, st2, header = load_checkpoint(tmp_path / "c.ckpt")
    assert cfg2 == cfg and st2.step == 7 and header["extra"] == {"note": "x"}
    assert all(np.array_equal(params[k], p2[k]) for k in params)


def test_checkpoint_rejects_garbage(tmp_path):
    from roomcloud.errors import DatasetFormatError
    (tmp_path / "bad").write_bytes(b"not a checkpoint")
    with pytest.raises(DatasetFormatError):
        load_checkpoint(tmp_path / "bad")


def test_train_deterministic_and_resumable(tmp_path):
    data = toy_samples()
    cfg = tiny(hidden=6, attn=6, batch=4, max_steps=12, checkpoint_every=5, b=3, k_max=1)
    full = train(data, cfg, checkpoint_path=tmp_path / "a.ckpt", log_path=tmp_path / "a.csv")
    again = train(data, cfg, checkpoint_path=tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    half = train(data, cfg.replace(max_steps=5), checkpoint_path=tmp_path / "c.ckpt")
    resumed = train(data, cfg, checkpoint_path=tmp_path / "c.ckpt", resume=tmp_path / "c.ckpt")
    assert half.losses + resumed.losses == full.losses == again.losses
    assert (tmp_path / "c.ckpt").read_bytes() == (tmp_path / "a.ckpt").read_bytes()
    rows = (tmp_path / "a.csv").read_text().splitlines()
    assert rows[0] == "step,loss,grad_norm,wall_time_s" and len(rows) == 13


def test_train_loss_decreases():
    data = toy_samples(4)
    cfg = tiny(hidden=16, attn=16, batch=4, max_steps=150, lr=1e-2, b=3, k_max=1)
    res = train(data, cfg)
    assert np.mean(res.losses[-10:]) < 0.5 * np.mean(res.losses[:10])


def test_learning_rate_schedule():
    from roomcloud.ptrnet import learning_rate
    flat = tiny(lr=2e-3)
    assert learning_rate(flat, 0) == learning_rate(flat, 10**6) == 2e-3
    cos = tiny(lr=2e-3, lr_decay_steps=100)
    assert learning_rate(cos, 0) == 2e-3
    assert learning_rate(cos, 50) == pytest.approx(1e-3)
    assert learning_rate(cos, 100) == pytest.approx(0.0, abs=1e-18)
    assert learning_rate(cos, 500) == learning_rate(cos, 100)
    lrs = [learning_rate(cos, s) for s in range(101)]
    assert all(b <= a for a, b in zip(lrs, lrs[1:]))
