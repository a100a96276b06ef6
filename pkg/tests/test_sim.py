import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellfree_pm.association import associate, fpc_powers
from cellfree_pm.config import SimConfig
from cellfree_pm.detectors import parse_detector
from cellfree_pm.sim import (
    CSV_COLUMNS,
    PipelineError,
    build_drop,
    draw_trial,
    fuse_llrs,
    hard_decisions,
    operating_point,
    records_to_csv,
    run_sweep,
    run_trial,
    simulate_point,
    snr_k,
)

SMALL = dict(n_aps=6, n_users=4, n_ap_antennas=2, tau_p=2, N=[2], seed=3)


def small_cfg(**kw):
    return SimConfig(**{**SMALL, **kw})


def test_fuse_examples():
    local = {(0, 0): np.array([2.0]), (1, 0): np.array([-0.5]), (2, 0): np.array([1.0])}
    fused = fuse_llrs(local, [np.array([0, 1, 2])], [0])[0]
    assert fused[0] == pytest.approx(2.5)
    assert hard_decisions(fused)[0] == 1
    single = fuse_llrs({(4, 0): np.array([0.3, -1.0])}, [np.array([4])], [0])[0]
    np.testing.assert_array_equal(single, [0.3, -1.0])
    with pytest.raises(PipelineError):
        fuse_llrs(local, [np.array([0, 5])], [0])


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=6), st.randoms())
def test_fusion_is_order_free_and_exact(values, rnd):
    aps = list(range(len(values)))
    local = {(m, 0): np.array([v]) for m, v in zip(aps, values)}
    shuffled = aps[:]
    rnd.shuffle(shuffled)
    a = fuse_llrs(local, [np.array(aps)], [0])[0][0]
    b = fuse_llrs(local, [np.array(shuffled)], [0])[0][0]
    assert a == pytest.approx(b, abs=1e-12)
    assert abs(a - sum(values)) <= 1e-12 * max(1.0, sum(abs(v) for v in values))


def test_snr_examples():
    beta = np.array([[1e-8]])
    assoc = associate(beta, 1)
    assert snr_k(0, np.array([0.01]), assoc, beta, 6.31e-13, 8) == pytest.approx(31.03, abs=0.01)
    base = snr_k(0, np.array([0.01]), assoc, beta, 1e-12, 8)
    assert snr_k(0, np.array([0.01]), assoc, beta * 10, 1e-12, 8) == pytest.approx(base + 10)
    assert snr_k(0, np.array([0.0]), assoc, beta, 1e-12, 8) == float("-inf")


def test_operating_point_hits_target_snr():
    cfg = small_cfg()
    drop = build_drop(cfg)
    for target in (-3.0, 7.5):
        pt = operating_point(cfg, drop, 2, target)
        got = snr_k(0, pt.eta, pt.assoc, drop.beta, drop.sigma2_w, cfg.n_ap_antennas)
        assert got == pytest.approx(target)
        assert np.all(pt.sigma2_e >= drop.sigma2_w)


def test_trials_replay_identically():
    cfg = small_cfg()
    drop = build_drop(cfg)
    a, b = draw_trial(cfg, drop, 5), draw_trial(cfg, drop, 5)
    np.testing.assert_array_equal(a.g, b.g)
    np.testing.assert_array_equal(a.g_hat, b.g_hat)
    np.testing.assert_array_equal(a.info, b.info)
    eta = np.ones(cfg.n_users) * 1e-3
    np.testing.assert_array_equal(a.observe(eta, drop.sigma2_w), b.observe(eta, drop.sigma2_w))
    assert not np.array_equal(a.g, draw_trial(cfg, drop, 6).g)


def test_noiseless_drop_has_no_errors():
    cfg = small_cfg(n_ap_antennas=4, perfect_csi=True, noise_power_override_w=1e-30,
                    max_frames=10, target_frame_errors=100)
    drop = build_drop(cfg)
    # keep the probe at its FPC power; a finite SNR target over 1e-30 W of
    # noise would push its power far below double precision of the others
    assoc = associate(drop.beta, 4)
    eta = fpc_powers(drop.beta, assoc, cfg.fpc)
    snr = snr_k(0, eta, assoc, drop.beta, drop.sigma2_w, cfg.n_ap_antennas)
    specs = [parse_detector(d) for d in ("pm(2)", "exact_ml", "c_pm(2)")]
    for rec in simulate_point(cfg, [drop], 4, snr, specs):
        assert rec.frame_errors == 0, rec.detector


def test_outage_user_counts_as_error():
    cfg = small_cfg(report_all_users=True, n_users=5, max_frames=2)
    drop = build_drop(cfg)
    pt = operating_point(cfg, drop, 1, 5.0)
    outage = pt.assoc.outage_users()
    assert outage, "this seed is expected to leave someone unserved"
    res = run_trial(cfg, drop, pt, draw_trial(cfg, drop, 0), [parse_detector("mrc")])
    flags = res["mrc"][0]
    assert all(flags[list(pt.eval_users).index(k)] for k in outage)


def test_records_are_deterministic():
    cfg = small_cfg(detectors=["mrc", "pm(2)"], snr_points_db=[0.0, 5.0], target_frame_errors=5, max_frames=15)
    assert records_to_csv(run_sweep(cfg)) == records_to_csv(run_sweep(cfg))


def test_paired_detectors_share_frames():
    cfg = small_cfg(target_frame_errors=10_000, max_frames=12)
    drop = build_drop(cfg)
    alone = simulate_point(cfg, [drop], 2, 3.0, [parse_detector("mrc")])[0]
    mixed = simulate_point(cfg, [drop], 2, 3.0, [parse_detector("pm(2)"), parse_detector("mrc")])[1]
    np.testing.assert_array_equal(alone.error_flags, mixed.error_flags)


def test_paired_mode_runs_all_until_done():
    cfg = small_cfg(target_frame_errors=3, max_frames=40)
    drop = build_drop(cfg)
    recs = simulate_point(cfg, [drop], 2, -5.0, [parse_detector("mrc"), parse_detector("pm(2)")], paired=True)
    assert recs[0].frames == recs[1].frames


def test_sweep_edge_cases(caplog):
    assert run_sweep(small_cfg(detectors=[])) == []
    cfg = small_cfg(detectors=["exact_ml"], snr_points_db=[40.0], target_frame_errors=1, max_frames=4)
    with caplog.at_level("WARNING"):
        (rec,) = run_sweep(cfg)
    assert rec.frames <= 4
    assert rec.low_confidence == (rec.frame_errors < 1)


def test_csv_layout_and_order():
    cfg = small_cfg(detectors=["pm(2)", "mrc", "pm(1)"], N=[2, 1], snr_points_db=[5.0, 0.0],
                    target_frame_errors=1, max_frames=2)
    text = records_to_csv(run_sweep(cfg))
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    rows = [line.split(",") for line in lines[1:]]
    keys = [(r[0], int(r[2]), int(r[1] or -1), float(r[3])) for r in rows]
    assert keys == sorted(keys)
    assert all(r[7] == "0" for r in rows)
    assert len(rows) == 3 * 2 * 2


def test_ml_not_worse_than_mrc():
    cfg = SimConfig(n_aps=10, n_users=8, n_ap_antennas=4, tau_p=4, N=[4], seed=0,
                    target_frame_errors=10_000, max_frames=500)
    drop = build_drop(cfg)
    mrc, ml = simulate_point(cfg, [drop], 4, 4.0, [parse_detector("mrc"), parse_detector("exact_ml")])
    assert ml.frame_errors <= mrc.frame_errors
