"""Smoke test for the softsnake Python module: python python/smoke_test.py"""

import json
import math
import os
import tempfile

import softsnake


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    cfg = softsnake.RobotConfig()
    assert close(cfg.nominal_length, 0.45, 1e-12)
    assert len(cfg.digest()) == 64
    assert softsnake.RobotConfig.from_json(cfg.to_json()).digest() == cfg.digest()

    tip = softsnake.chain_tip([0.0] * 9, cfg)
    assert close(tip[2], 0.45, 1e-12), tip
    bent = softsnake.sample_backbone([0.02, 0, 0, 0, 0, 0, 0, 0, 0], n=11)
    assert len(bent) == 11 and bent[0] == [0.0, 0.0, 0.0]

    lengths = softsnake.lengths_from_arc(10.0, 0.3, 0.16)
    kappa, phi, s_c = softsnake.arc_from_lengths([l - 0.15 for l in lengths])
    assert close(kappa, 10.0, 1e-9) and close(phi, 0.3, 1e-9) and close(s_c, 0.16, 1e-12)

    shape = softsnake.gait_shape("serpentine", 0.25)
    assert len(shape) == 31

    fits = softsnake.fit_cycle("roll-in", samples=16)
    assert len(fits) == 16 and all(f.converged for f in fits)
    assert max(f.residual_mean for f in fits) < 1e-3

    traj = softsnake.fit_trajectory("roll-out", period=2.0, cycles=2, samples=16)
    assert len(traj) == 32 and traj.gait == "roll_outward"
    assert close(traj.times[1], 0.125, 1e-15)
    assert traj.reversed().reversed() == traj
    assert softsnake.Trajectory.from_json(traj.to_json()) == traj
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "t.json")
        traj.export(path)
        assert softsnake.Trajectory.load(path) == traj
        traj.export(os.path.join(d, "t.csv"))

    pressures, clamped, deadzone = softsnake.pressure_map([0.04] * 9)
    assert pressures == [4.0] * 9 and not clamped and not deadzone

    speed = softsnake.predict_velocity("roll-in", 4.0, 1.0)
    assert close(speed, 2 * math.pi * 0.0125 * 100, 1e-12)

    report = json.loads(softsnake.estimate_report())
    assert len(report["rows"]) == 48
    assert report["summary"]["serpentine_below_fifth_of_rolling"]

    try:
        softsnake.chain_tip([0.1] + [0.0] * 8)
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-bounds joints accepted")

    print("softsnake", softsnake.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
