import json
import math

import numpy as np
import pytest

from istbc.errors import BudgetError
from istbc.montecarlo import (SimConfig, run_cer, run_quantization_sweep,
                              wilson_interval)


def small_cfg(**over):
    base = dict(code="ic", n=2, m=2, snr_db=(10.0,), decoder="exhaustive",
                master_seed=5, max_trials=20_000, target_errors=10 ** 9,
                batch_size=2048)
    base.update(over)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_cfg(snr_db=(10.0, 8.0))
    with pytest.raises(ValueError):
        small_cfg(snr_db=())
    with pytest.raises(ValueError):
        small_cfg(axis="weird")
    with pytest.raises(ValueError):
        small_cfg(decoder="zf")
    with pytest.raises(ValueError):
        small_cfg(encoder="q=1")
    with pytest.raises(ValueError):
        small_cfg(encoder="3bits")
    with pytest.raises(ValueError):
        small_cfg(confidence=1.0)
    assert small_cfg(encoder="q=5").encoder_q == 5
    assert small_cfg().encoder_q is None


def test_noiseless_limit_has_no_errors():
    r = run_cer(small_cfg(snr_db=(60.0,), max_trials=1000, batch_size=500))
    assert r.points[0].errors == 0
    assert r.points[0].trials == 1000


def test_reproducible_and_worker_independent():
    cfg = small_cfg(max_trials=8192, target_errors=10 ** 9)
    r1 = run_cer(cfg, workers=1)
    r2 = run_cer(cfg, workers=1)
    r3 = run_cer(cfg, workers=2)
    assert r1 == r2 == r3


def test_early_stopping_is_batch_deterministic():
    cfg = small_cfg(snr_db=(6.0,), max_trials=100_000, target_errors=100,
                    batch_size=1000)
    a = run_cer(cfg, workers=1)
    b = run_cer(cfg, workers=2)
    assert a == b
    p = a.points[0]
    assert p.errors >= 100
    assert p.trials % 1000 == 0
    assert p.trials < 100_000  # stopped early at this CER level


def test_cer_decreases_with_snr():
    cfg = small_cfg(snr_db=(6.0, 10.0, 14.0), max_trials=30_000,
                    target_errors=10 ** 9, batch_size=4096)
    r = run_cer(cfg)
    cers = [p.cer for p in r.points]
    assert cers[0] > cers[1] > cers[2]


def test_points_echo_config_and_order():
    cfg = small_cfg(snr_db=(8.0, 12.0), max_trials=4096)
    r = run_cer(cfg)
    assert [p.snr_db for p in r.points] == [8.0, 12.0]
    assert all(p.axis == "snr" for p in r.points)
    assert r.config == cfg
    assert r.eta == pytest.approx(1.8, rel=1e-12)


def test_psnr_axis_equals_shifted_snr_axis():
    probe = run_cer(small_cfg(max_trials=1024, batch_size=1024))
    shift = 10 * math.log10(probe.eta)
    grid = (12.0, 16.0)
    rp = run_cer(small_cfg(snr_db=grid, axis="psnr", max_trials=8192))
    rs = run_cer(small_cfg(snr_db=tuple(g - shift for g in grid), axis="snr",
                           max_trials=8192))
    for a, b in zip(rp.points, rs.points):
        assert a.errors == b.errors
        assert a.trials == b.trials


def test_sphere_and_exhaustive_paths_agree():
    ce = small_cfg(max_trials=2000, batch_size=1000)
    cs = small_cfg(max_trials=2000, batch_size=1000, decoder="sphere")
    assert run_cer(ce).points[0].errors == run_cer(cs).points[0].errors


def test_wilson_interval_brackets_and_shrinks():
    lo, hi = wilson_interval(10, 100, 0.95)
    assert lo < 0.1 < hi
    lo0, hi0 = wilson_interval(0, 50, 0.95)
    assert lo0 == 0.0 and hi0 > 0
    # width ~ 1/sqrt(trials): quadrupling trials halves the width (within 20%)
    w1 = np.diff(wilson_interval(100, 1000, 0.95))[0]
    w2 = np.diff(wilson_interval(400, 4000, 0.95))[0]
    assert w1 / w2 == pytest.approx(2.0, rel=0.2)


def test_ci_width_shrinks_with_trials_in_runs():
    cfg1 = small_cfg(snr_db=(8.0,), max_trials=4096, batch_size=4096)
    cfg2 = small_cfg(snr_db=(8.0,), max_trials=16384, batch_size=4096)
    p1 = run_cer(cfg1).points[0]
    p2 = run_cer(cfg2).points[0]
    w1 = p1.ci_high - p1.ci_low
    w2 = p2.ci_high - p2.ci_low
    assert w1 / w2 == pytest.approx(2.0, rel=0.2)


def test_quantization_sweep_ic_q3_identical_to_exact():
    # the integer code encodes exactly at q = mn/2 + 1, so the curves coincide
    cfg = small_cfg(snr_db=(8.0, 12.0), max_trials=8192)
    exact, q3 = run_quantization_sweep(cfg, [3])
    assert exact.config.encoder == "exact"
    assert q3.config.encoder == "q=3"
    for a, b in zip(exact.points, q3.points):
        assert a.errors == b.errors and a.trials == b.trials


def test_quantized_golden_floors_and_exact_does_not():
    cfg = SimConfig(code="golden", n=2, m=2, snr_db=(20.0, 30.0),
                    decoder="exhaustive", encoder="q=3", master_seed=9,
                    max_trials=30_000, target_errors=200, batch_size=4096)
    floor = run_cer(cfg)
    # the 3-bit golden encoder is error-floored well above the exact curve
    assert floor.points[1].cer > 0.05
    exact = run_cer(SimConfig(code="golden", n=2, m=2, snr_db=(20.0,),
                              decoder="exhaustive", encoder="exact", master_seed=9,
                              max_trials=30_000, target_errors=10 ** 9,
                              batch_size=4096))
    assert exact.points[0].cer < floor.points[1].cer / 3


def test_quantized_golden_q12_within_ci_of_exact():
    # 12-bit operands leave the golden encoder statistically indistinguishable
    # from exact encoding at moderate SNR
    base = dict(code="golden", n=2, m=2, snr_db=(15.0, 20.0), decoder="exhaustive",
                master_seed=13, max_trials=60_000, target_errors=150,
                batch_size=4096)
    exact, q12 = run_quantization_sweep(SimConfig(**base), [12])
    for a, b in zip(exact.points, q12.points):
        assert max(a.ci_low, b.ci_low) <= min(a.ci_high, b.ci_high), (a, b)


def test_exhaustive_decoder_feasibility_gate():
    cfg = SimConfig(code="ic", n=2, m=8, snr_db=(10.0,), decoder="exhaustive",
                    max_trials=100)
    with pytest.raises(BudgetError):
        run_cer(cfg)


def test_csv_and_json_serialization(tmp_path):
    cfg = small_cfg(snr_db=(8.0, 12.0), max_trials=2048, batch_size=1024)
    r = run_cer(cfg)
    csv_path = tmp_path / "out.csv"
    json_path = tmp_path / "out.json"
    r.write_csv(csv_path)
    r.write_json(json_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "snr_db,axis,trials,errors,cer,ci_low,ci_high"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[1] == "snr"
    assert int(first[2]) == r.points[0].trials
    payload = json.loads(json_path.read_text())
    assert payload["config"]["code"] == "ic"
    assert payload["config"]["master_seed"] == 5
    assert len(payload["points"]) == 2
    assert payload["eta"] == pytest.approx(1.8)
    # byte-identical rerun
    again = tmp_path / "again.csv"
    run_cer(cfg).write_csv(again)
    assert again.read_bytes() == csv_path.read_bytes()
