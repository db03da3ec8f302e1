import numpy as np
import pytest

from codedeq.channel import DEFAULT_TAPS, ChannelSpec, SeededRng, apply_fir, transmit
from codedeq.equalizers import (
    CnnEqualizerArch,
    CNNEqualizer,
    FrameSpec,
    RnnEqualizerArch,
    RNNEqualizer,
    TrainConfig,
    arch_from_descriptor,
    build_model,
    equalize_sequence,
    frame_stream,
    load_equalizer,
    make_training_pairs,
    shuffle_pairs,
    train_equalizer,
)
from codedeq.modem import qpsk_modulate
from codedeq.neural import ShapeError, check_model

SMALL_CNN = CnnEqualizerArch(conv1_filters=4, conv2_filters=3)
SMALL_RNN = RnnEqualizerArch(lstm1_units=2, lstm2_units=2, dense_units=3)


def qpsk(n, seed=0):
    return qpsk_modulate(SeededRng(seed).bits(2 * n))


# ---- framing --------------------------------------------------------------------

def test_twelve_symbols_two_windows():
    y = np.arange(1, 13) + 0j
    f = frame_stream(y)
    assert f.windows.shape == (2, 2, 12)
    assert np.array_equal(f.windows[0, 0], np.r_[0, 0, 0, 1:10])
    assert np.array_equal(f.windows[1, 0], np.r_[4:13, 0, 0, 0])
    assert not f.windows[:, 1].any()


def test_six_symbols_one_window():
    y = (np.arange(6) + 1) * (1 - 1j)
    f = frame_stream(y)
    assert len(f) == 1
    assert np.array_equal(f.windows[0, 0], np.r_[0, 0, 0, 1:7, 0, 0, 0])
    assert np.array_equal(f.windows[0, 1], -f.windows[0, 0])


@pytest.mark.parametrize("n", [1, 5, 6, 7, 12, 13, 100])
def test_payloads_partition_stream(n):
    f = frame_stream(np.ones(n, complex))
    assert len(f) == -(-n // 6)
    idx = np.concatenate([f.payload_indices(k) for k in range(len(f))])
    assert np.array_equal(idx, np.arange(n))


def test_windows_overlap_by_twice_guard():
    y = np.arange(30) + 1j * np.arange(30)
    w = frame_stream(y).windows
    for k in range(len(w) - 1):
        assert np.array_equal(w[k, :, -6:], w[k + 1, :, :6])


def test_empty_stream():
    assert len(frame_stream(np.zeros(0, complex))) == 0


def test_bad_frame_spec():
    with pytest.raises(ValueError):
        FrameSpec(payload=0)
    with pytest.raises(ValueError):
        FrameSpec(channels=3)


def test_training_pairs_identity_channel():
    x = qpsk(30)
    windows, targets = make_training_pairs(x, x)
    assert len(windows) == len(targets) == 5
    center = windows[:, :, 3:9]
    assert np.array_equal(np.concatenate([center[:, 0], center[:, 1]], axis=1), targets)


def test_training_pairs_length_mismatch():
    with pytest.raises(ValueError):
        make_training_pairs(qpsk(10), qpsk(11))


def test_shuffle_reproducible():
    w, t = make_training_pairs(qpsk(60), qpsk(60))
    a, b = shuffle_pairs(w, t, 3), shuffle_pairs(w, t, 3)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not np.array_equal(shuffle_pairs(w, t, 4)[1], a[1])


# ---- models ---------------------------------------------------------------------

def test_default_architectures_shapes():
    rng = np.random.default_rng(0)
    x = np.zeros((5, 2, 12))
    for arch in (CnnEqualizerArch(), RnnEqualizerArch()):
        assert build_model(arch, rng).forward(x).shape == (5, 12)


def _worst_model_error(arch, draws, max_entries=None):
    worst = 0.0
    for draw in range(draws):
        rng = np.random.default_rng(50 + draw)
        model = build_model(arch, rng)
        # zero-initialised biases can park a ReLU input exactly on its kink
        for k, v in model.named_params().items():
            if k.endswith("bias") or ".b_" in k:
                v[...] = 0.1 * rng.standard_normal(v.shape)
        x = rng.standard_normal((1, 2, 12))
        target = rng.standard_normal((1, 12))
        errs = check_model(model, x, target, max_entries=max_entries, rng=rng)
        worst = max(worst, max(errs.values()))
    return worst


@pytest.mark.parametrize("arch", [SMALL_CNN, SMALL_RNN], ids=["cnn", "rnn"])
def test_small_model_gradients_every_entry(arch):
    assert _worst_model_error(arch, 10) < 1e-4


@pytest.mark.parametrize("arch", [CnnEqualizerArch(), RnnEqualizerArch()], ids=["cnn", "rnn"])
def test_default_model_gradients_sampled(arch):
    assert _worst_model_error(arch, 10, max_entries=6) < 1e-4


def test_descriptor_round_trip():
    for arch in (CnnEqualizerArch(conv1_width=5), RnnEqualizerArch(dense_units=7)):
        assert arch_from_descriptor(arch.descriptor()) == arch
    with pytest.raises(ValueError):
        arch_from_descriptor({"kind": "mlp"})
    with pytest.raises(ValueError):
        arch_from_descriptor({"kind": "cnn", "depth": 3})


# ---- training -------------------------------------------------------------------

def _isi_pairs(n=600, snr=20.0, seed=1):
    x = qpsk(n, seed)
    y = transmit(x, ChannelSpec(snr_db=snr), SeededRng(seed, (9,)))
    return make_training_pairs(y, x)


def test_overfits_identical_pairs():
    w, t = _isi_pairs(6)
    windows, targets = np.repeat(w, 64, axis=0), np.repeat(t, 64, axis=0)
    cfg = TrainConfig(max_epochs=100, batch_size=16, learning_rate=3e-3, patience=100)
    res = train_equalizer(SMALL_CNN, windows, targets, cfg)
    assert res.log[-1].train_loss < 1e-3


def test_patience_one_stops_at_epoch_two():
    w, t = _isi_pairs()
    cfg = TrainConfig(patience=1, learning_rate=0.0, batch_size=16)
    res = train_equalizer(SMALL_CNN, w, t, cfg)
    assert res.stopped_epoch == 2
    assert res.best_epoch == 1


def test_restores_best_parameters():
    w, t = _isi_pairs()
    cfg = TrainConfig(max_epochs=8, patience=2, batch_size=16, learning_rate=5e-2)
    res = train_equalizer(SMALL_CNN, w, t, cfg)
    best = res.log[res.best_epoch - 1].val_loss
    assert best == min(r.val_loss for r in res.log)
    X, Y = shuffle_pairs(w, t, cfg.seed)
    n_val = round(0.2 * len(X))
    from codedeq.neural import mse_loss
    assert mse_loss(res.model.predict(X[-n_val:]), Y[-n_val:])[0] == pytest.approx(best, rel=1e-12)


def test_training_is_deterministic():
    w, t = _isi_pairs()
    cfg = TrainConfig(max_epochs=3, batch_size=16)
    a = train_equalizer(SMALL_RNN, w, t, cfg)
    b = train_equalizer(SMALL_RNN, w, t, cfg)
    assert a.log == b.log
    pa, pb = a.model.named_params(), b.model.named_params()
    assert all(np.array_equal(pa[k], pb[k]) for k in pa)


def test_training_errors():
    w, t = _isi_pairs(60)
    with pytest.raises(ValueError):
        train_equalizer(SMALL_CNN, w, t, TrainConfig(batch_size=128))
    with pytest.raises(ValueError):
        train_equalizer(SMALL_CNN, w[:0], t[:0])
    with pytest.raises(ShapeError):
        train_equalizer(SMALL_CNN, w[:, :, :10], t, TrainConfig(batch_size=1))
    with pytest.raises(ValueError):
        TrainConfig(validation_fraction=1.0)
    with pytest.raises(ValueError):
        TrainConfig(patience=0)


# ---- inference --------------------------------------------------------------------

def test_output_length_and_window_independence():
    rng = np.random.default_rng(2)
    model = build_model(SMALL_RNN, rng)
    y = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    out = equalize_sequence(model, y)
    assert out.shape == (40,)
    frames = frame_stream(y)
    perm = rng.permutation(len(frames))
    shuffled = model.predict(frames.windows[perm])
    back = np.empty_like(shuffled)
    back[perm] = shuffled
    assert np.allclose((back[:, :6] + 1j * back[:, 6:]).ravel()[:40], out, atol=1e-14)


@pytest.mark.parametrize("arch", [SMALL_CNN, SMALL_RNN])
def test_guard_change_is_local(arch):
    rng = np.random.default_rng(3)
    model = build_model(arch, rng)
    y = rng.standard_normal(36) + 1j * rng.standard_normal(36)
    base = equalize_sequence(model, y)
    # symbol 14 is payload of window 2 and guard of window 1 only
    y2 = y.copy()
    y2[14] += 0.5
    changed = equalize_sequence(model, y2) != base
    assert not changed[:6].any() and not changed[18:].any()
    assert changed[6:12].any()


def test_identity_model_reproduces_payload():
    x = qpsk(1200, seed=4)
    est = CNNEqualizer(conv1_filters=8, conv2_filters=4, batch_size=32, max_epochs=40,
                       learning_rate=3e-3).fit(x, x)
    err = np.mean(np.abs(est.predict(x) - x) ** 2) / 2
    assert err < 5 * min(r.train_loss for r in est.training_log_) + 1e-3


def test_cnn_learns_isi_channel():
    x = qpsk(3000, seed=5)
    y = apply_fir(x, DEFAULT_TAPS)
    est = CNNEqualizer(conv1_filters=8, conv2_filters=4, batch_size=32, max_epochs=30,
                       learning_rate=3e-3).fit(y, x)
    z = est.predict(y)
    assert np.mean(np.abs(z - x) ** 2) < 0.05 * np.mean(np.abs(y - x) ** 2)


# ---- estimator surface ------------------------------------------------------------

def test_estimator_params():
    est = RNNEqualizer(lstm1_units=8)
    p = est.get_params()
    assert p["lstm1_units"] == 8 and p["batch_size"] == 128
    assert est.set_params(patience=2).patience == 2
    with pytest.raises(Exception):
        est.predict(qpsk(6))


@pytest.mark.parametrize("cls,kw", [
    (CNNEqualizer, dict(conv1_filters=4, conv2_filters=3)),
    (RNNEqualizer, dict(lstm1_units=3, lstm2_units=2, dense_units=4)),
])
def test_save_load_round_trip(tmp_path, cls, kw):
    x = qpsk(300, seed=6)
    est = cls(max_epochs=2, batch_size=8, **kw).fit(x, x)
    path = tmp_path / "m.cdqw"
    est.save(path)
    back = load_equalizer(path)
    assert type(back) is cls
    assert np.array_equal(back.predict(x), est.predict(x))
    path2 = tmp_path / "m2.cdqw"
    back.save(path2)
    assert path.read_bytes() == path2.read_bytes()
