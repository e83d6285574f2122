import numpy as np
import pytest

from vdfcommittee import sortition as srt
from vdfcommittee.adversary import (
    STRATEGIES,
    AdversaryState,
    make_strategy,
    split_world_replay,
    strawman_run,
)
from vdfcommittee.clocksync import ClockConfig, ClockSyncTrial
from vdfcommittee.errors import ConfigurationError
from vdfcommittee.simnet import PartialSyncGST


@pytest.fixture(scope="module")
def ring():
    return srt.KeyRing(srt.gen_keys(1, 10))


def test_budget_and_double_corruption(ring):
    adv = AdversaryState(3, 10)
    assert adv.corrupt(0, 1.0, ring)
    assert not adv.corrupt(0, 2.0, ring)
    assert adv.corrupted == {0: 1.0}
    assert adv.corrupt(1, 2.0, ring) and adv.corrupt(2, 2.0, ring)
    assert not adv.corrupt(3, 3.0, ring)
    assert adv.refused == 1 and adv.remaining == 0


def test_budget_must_respect_resilience():
    with pytest.raises(ConfigurationError):
        AdversaryState(4, 12)
    AdversaryState(3, 10)


def test_captured_key_mines_verifiable_outputs(ring):
    adv = AdversaryState(3, 10)
    adv.corrupt(5, 0.0, ring)
    ctx = srt.context("vote", 7)
    out = srt.mine(adv.captured_keys[5], ctx)
    assert ring.verify(ring.pk(5), ctx, out)
    assert 6 not in adv.captured_keys


def test_make_strategy():
    assert set(STRATEGIES) == {"passive", "static", "key_reuse", "split_world", "chaos", "fast_forward"}
    s = make_strategy("chaos", drop=0.2)
    assert s.params == {"drop": 0.2}
    with pytest.raises(ConfigurationError, match="unknown adversary strategy"):
        make_strategy("nope")


def test_strawman_split_at_n60():
    n = 60
    splits = 0
    for seed in range(20):
        keys = srt.gen_keys(seed, n)
        rng = np.random.default_rng([seed, 41])
        a = strawman_run(keys, np.ones(n, dtype=np.int64), 3 / n, rng, "A")
        b = strawman_run(keys, np.zeros(n, dtype=np.int64), 3 / n, rng, "B")
        assert set(a.outputs.tolist()) == {1} and set(b.outputs.tolist()) == {0}
        rep = split_world_replay(keys, a, b, rng)
        assert rep["applicable"]
        assert rep["corrupted"] == len(a.speakers | b.speakers) <= n // 3 - 1
        assert rep["h1_outputs"] == [1] and rep["h0_outputs"] == [0]
        splits += rep["split"]
    assert splits == 20


def test_identical_worlds_do_not_split():
    n = 60
    keys = srt.gen_keys(2, n)
    rng = np.random.default_rng(0)
    a = strawman_run(keys, np.ones(n, dtype=np.int64), 3 / n, rng)
    rep = split_world_replay(keys, a, a, rng)
    assert rep["applicable"] and not rep["split"]


def test_split_world_budget_gate():
    n = 60
    keys = srt.gen_keys(2, n)
    rng = np.random.default_rng(0)
    a = strawman_run(keys, np.ones(n, dtype=np.int64), 0.5, rng)
    b = strawman_run(keys, np.zeros(n, dtype=np.int64), 0.5, rng)
    rep = split_world_replay(keys, a, b, rng)
    assert rep == {"applicable": False, "corrupted": len(a.speakers | b.speakers), "split": False}


def test_fast_forward_without_asynchrony_has_nothing_to_drop():
    cfg = ClockConfig(n=16, f=5, variant="sublinear", mode=PartialSyncGST(1.0, gst_time=20.0, round_cap=0),
                      committee_threshold=0.5, lam=1, horizon=100.0)
    trial = ClockSyncTrial(cfg, 0, make_strategy("fast_forward"), keep_trace=True)
    out = trial.run()
    assert out["gst"] == 0.0
    assert trial.net.trace
    assert not any(e[1] == "reschedule" and e[4] == float("inf") for e in trial.net.trace)
