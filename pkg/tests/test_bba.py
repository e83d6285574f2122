import numpy as np
import pytest

from vdfcommittee.adversary import make_strategy
from vdfcommittee.bba import (
    BbaConfig,
    BbaTrial,
    bba_commit_check,
    detect_good_epoch,
    run_bba_trial,
)
from vdfcommittee.errors import ConfigurationError
from vdfcommittee.simnet import PartialSyncGST, PartialSyncRandomDrop


def _epochs(*proposals, quorum_bits=None):
    out = {}
    for S, props in enumerate(proposals, start=1):
        out[S] = {"proposals": list(props), "quorum_bits": set((quorum_bits or {}).get(S, ())), "honest_acks": []}
    return out


def test_quorum_arithmetic():
    assert BbaConfig(n=10, f=3).quorum == 7
    assert BbaConfig(n=10, f=3, literal_quorum=True).quorum == 6
    assert BbaConfig(n=10, f=3).flip_trigger == 3
    sub = BbaConfig(n=64, f=6, mode_name="sublinear", network=PartialSyncRandomDrop(1.0))
    assert sub.quorum == 24 and sub.flip_trigger == 12
    assert sub.propose_threshold == pytest.approx(1 / (12 * 64))
    assert BbaConfig(n=64, f=21).propose_threshold == pytest.approx(1 / 128)


def test_quorum_intersection():
    """Two default quorums always share more than f replicas; the literal floor does not."""
    for n in range(4, 200):
        f = (n - 1) // 3
        q = BbaConfig(n=n, f=f).quorum
        assert 2 * q - n >= f + 1
        assert q <= n - f
    q_lit = BbaConfig(n=10, f=3, literal_quorum=True).quorum
    assert 2 * q_lit - 10 < 3 + 1


def test_config_validation():
    with pytest.raises(ConfigurationError):
        BbaConfig(n=10, f=4)
    with pytest.raises(ConfigurationError):
        BbaConfig(n=10, f=3, mode_name="async")
    with pytest.raises(ConfigurationError):
        BbaConfig(n=10, f=3, K=0)
    with pytest.raises(ConfigurationError):
        BbaTrial(BbaConfig(n=10, f=3), 0, [0, 1, 2] + [0] * 7)


def test_commit_check():
    assert bba_commit_check([1, 1, 1]) == "consistent"
    assert bba_commit_check([1, 0, 1]) == "violation"
    assert bba_commit_check([-1, -1]) == "no_decision"
    assert bba_commit_check([1, -1, 0], honest_mask=[True, True, False]) == "no_decision"
    assert bba_commit_check([1, 1, 0], honest_mask=[True, True, False]) == "consistent"


def test_detect_good_epoch():
    two = _epochs([(1, 0, True), (2, 1, True)])
    assert not detect_good_epoch(two, 1)
    byz = _epochs([(1, 0, False)])
    assert not detect_good_epoch(byz, 1)
    matches = _epochs([], [(3, 1, True)], quorum_bits={1: {1}})
    assert detect_good_epoch(matches, 2)
    unlucky = _epochs([], [(3, 0, True)], quorum_bits={1: {1}})
    assert not detect_good_epoch(unlucky, 2)
    fresh = _epochs([(4, 0, True)])
    assert detect_good_epoch(fresh, 1)
    assert not detect_good_epoch(fresh, 9)


def test_lucky_bit_frequency():
    rng = np.random.default_rng(0)
    lucky = 0
    trials = 10_000
    for _ in range(trials):
        history = {1: {int(rng.integers(0, 2))}} if rng.random() < 0.5 else {1: set()}
        eps = _epochs([], [(0, int(rng.integers(0, 2)), True)], quorum_bits={1: history[1]})
        lucky += detect_good_epoch(eps, 2)
    assert lucky / trials >= 0.5 - 0.02


@pytest.mark.parametrize("mode", ["linear", "sublinear"])
def test_unanimous_inputs_commit_that_bit(mode):
    for bit in (0, 1):
        if mode == "linear":
            cfg = BbaConfig(n=16, f=5, network=PartialSyncGST(1.0, gst_time=20.0))
        else:
            cfg = BbaConfig(n=64, f=6, mode_name="sublinear", network=PartialSyncRandomDrop(1.0, gst_time=20.0, p=0.3),
                            T=10_000, clock_lam=7)
        out = run_bba_trial(cfg, 2, np.full(cfg.n, bit), make_strategy("chaos"))
        assert out["verdict"] == "consistent"
        assert out["committed_bits"] == [bit]
        assert not out["validity_violation"]


def test_first_good_epoch_is_acked_by_everyone():
    cfg = BbaConfig(n=16, f=5, network=PartialSyncGST(1.0, gst_time=0.0), init_flag=0)
    seen = 0
    for seed in range(6):
        t = BbaTrial(cfg, seed, np.random.default_rng(seed).integers(0, 2, 16))
        t.run()
        if t.first_good is None:
            continue
        S, bit = t.first_good
        acks = t.epochs[S]["honest_acks"]
        assert len(acks) == 16 and {b for _, b in acks} == {bit}
        seen += 1
    assert seen >= 3


def test_mixed_linear_runs_are_consistent_and_deterministic():
    cfg = BbaConfig(n=16, f=5, network=PartialSyncGST(1.0, gst_time=20.0))
    inputs = np.random.default_rng(1).integers(0, 2, 16)
    a = run_bba_trial(cfg, 1, inputs, make_strategy("chaos", drop=0.3))
    b = run_bba_trial(cfg, 1, inputs, make_strategy("chaos", drop=0.3))
    assert a == b
    assert a["verdict"] == "consistent" and a["all_committed"]
    assert a["double_quorum_rounds"] == 0
