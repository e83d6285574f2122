from types import SimpleNamespace

import numpy as np
import pytest

from vdfcommittee import sortition as srt
from vdfcommittee.adversary import make_strategy
from vdfcommittee.clocksync import (
    ClockConfig,
    ClockSyncTrial,
    RoundCertificate,
    RoundPropose,
    certificate_verify,
    run_clock_trial,
    sublinear_lambda,
    sublinear_threshold,
)
from vdfcommittee.errors import ConfigurationError
from vdfcommittee.simnet import PartialSyncGST, PartialSyncRandomDrop

# 2 * log2(1024)^2 / (3 * 0.7)
EXPECTED_COMMITTEE_1024 = 200 / 2.1


def test_linear_quorum_arithmetic():
    assert ClockConfig(n=10, f=3).quorum == 7
    assert ClockConfig(n=64, f=21).quorum == 43


def test_sublinear_parameters():
    assert sublinear_threshold(1024) * 1024 == pytest.approx(EXPECTED_COMMITTEE_1024)
    assert sublinear_lambda(1024) == 31
    cfg = ClockConfig(n=1024, f=102, variant="sublinear", mode=PartialSyncRandomDrop(1.0, p=0.3))
    assert cfg.quorum == 2 * 31 + 1
    assert cfg.copies == 2
    with pytest.raises(ConfigurationError):
        ClockConfig(n=64, f=6, d=1, c=1)


def test_committee_size_matches_expectation():
    sks = np.array([k.sk for k in srt.gen_keys(0, 1024)], dtype=np.uint64)
    ctxs = [srt.context("clock", "tentative", r) for r in range(10_000)]
    counts = srt.committee_counts(sks, ctxs, sublinear_threshold(1024))
    assert abs(counts.mean() / EXPECTED_COMMITTEE_1024 - 1) < 0.05


def test_certificate_verify():
    assert certificate_verify(RoundCertificate(4, tuple(range(7))), 7)
    assert not certificate_verify(RoundCertificate(4, (0, 1, 2, 3, 4, 5, 5)), 7)
    assert not certificate_verify(RoundCertificate(4, tuple(range(6))), 7)
    lam = 3
    assert not certificate_verify(RoundCertificate(2, tuple(range(2 * lam)), "sublinear"), 2 * lam + 1)
    assert certificate_verify(RoundCertificate(2, tuple(range(2 * lam + 1)), "sublinear"), 2 * lam + 1)
    assert not certificate_verify(RoundCertificate(2, tuple(range(9))), 7, lambda v, r: v != 3)
    assert certificate_verify(RoundCertificate(0, ()), 7)


def test_proposal_at_round_cap_rejected():
    cfg = ClockConfig(n=10, f=3, mode=PartialSyncGST(1.0, gst_time=5.0), T=8)
    trial = ClockSyncTrial(cfg, 0)
    genesis = RoundCertificate(0, ())
    ok = SimpleNamespace(msg_id=1, message=RoundPropose(1, 0, genesis))
    assert trial._valid(ok)
    capped = SimpleNamespace(msg_id=2, message=RoundPropose(8, 0, RoundCertificate(7, tuple(range(7)))))
    assert not trial._valid(capped)


def test_only_rounds_above_C_are_voted():
    cfg = ClockConfig(n=10, f=3, mode=PartialSyncGST(1.0, gst_time=5.0))
    trial = ClockSyncTrial(cfg, 0)
    rs = np.arange(10)
    trial.C[:] = 9
    trial.stage[:] = 0
    trial.prop_seen[7] = np.zeros(10)
    trial._decide(1.0, rs, trial.att.copy())
    assert np.all(trial.target == -1)
    trial.stage[:] = 0
    trial.prop_seen[10] = np.zeros(10)
    trial._decide(1.0, rs, trial.att.copy())
    assert np.all(trial.target == 10)


def test_linear_sync_after_gst_under_chaos():
    for seed in range(5):
        cfg = ClockConfig(n=16, f=5, mode=PartialSyncGST(1.0, gst_time=30.0))
        out = run_clock_trial(cfg, seed, make_strategy("chaos"))
        assert out["sync_round"] is not None
        assert out["sync_after_gst"] <= 9.0
        assert out["monotone_violations"] == out["overlap_violations"] == out["regressions"] == 0


def test_synchronous_start_confirms_round_one_quickly():
    cfg = ClockConfig(n=10, f=3, mode=PartialSyncGST(1.0, gst_time=0.0))
    trial = ClockSyncTrial(cfg, 0)
    trial.gst_confirmed = 0
    trial.start()
    trial.net.run_until(until=10.0)
    assert trial.max_confirmed >= 1
    assert trial.confirmed_by[1][trial.net.honest].all()


def test_sublinear_without_drops_syncs():
    cfg = ClockConfig(n=64, f=6, variant="sublinear", mode=PartialSyncRandomDrop(1.0, gst_time=10.0, p=0.0), lam=7)
    out = run_clock_trial(cfg, 1, make_strategy("chaos"))
    assert out["sync_round"] is not None
    assert out["regressions"] == out["monotone_violations"] == 0


def test_determinism():
    cfg = ClockConfig(n=16, f=5, variant="sublinear", mode=PartialSyncRandomDrop(1.0, gst_time=10.0, p=0.3, phi_max=0.5),
                      committee_threshold=0.6, lam=2)
    a = run_clock_trial(cfg, 4, make_strategy("chaos"))
    b = run_clock_trial(cfg, 4, make_strategy("chaos"))
    assert a == b
