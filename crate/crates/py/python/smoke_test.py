"""Quick check that the extension module imports and its main entry points run."""

import json
import math
import os
import tempfile

import vzsim


def main():
    y_asym = vzsim.GateSequence.gate("Y", strategy="asym")
    assert str(y_asym) == "Rz(-pi), X", str(y_asym)

    xy4 = vzsim.GateSequence.build("XY4:asym")
    ur4 = vzsim.GateSequence.build("UR4")
    assert xy4.fold().equivalent(ur4.fold())
    assert vzsim.equivalent("XY4:asym", "UR4")
    assert not vzsim.equivalent("XY4:sym", "UR4")

    u = xy4.unitary()
    assert abs(abs(u[0][0]) - 1.0) < 1e-12

    exact, sampled = vzsim.simulate(xy4, 4, noise=vzsim.NoiseModel.noiseless(), shots=0)
    assert abs(exact - 1.0) < 1e-8 and sampled is None

    noise = vzsim.NoiseModel(t1_us=50.0, tphi_us=80.0)
    exact, sampled = vzsim.simulate(ur4, 8, initial="plus_i", noise=noise, shots=800, seed=3)
    assert 0.5 < exact < 1.0
    assert sampled is not None and 0.0 <= sampled <= 1.0

    cfg = vzsim.ExperimentConfig.from_json(json.dumps({
        "sequences": [{"name": "XY4", "strategy": "sym"}],
        "cycle_counts": list(range(1, 9)),
        "noise": {"quasistatic_sigma_rad_per_ns": 0.0},
    }))
    curves = vzsim.sweep(cfg)
    assert len(curves) == 1 and len(curves[0].exact) == 8
    fit = curves[0].fit
    assert fit is not None and math.isfinite(fit.t_d_us)
    refit = vzsim.fit_decay(curves[0].times, curves[0].exact)
    assert abs(refit.t_d_us - fit.t_d_us) < 1e-9 * fit.t_d_us
    amplitude, _ = vzsim.oscillation_metric(curves[0].times, curves[0].exact, refit)
    assert amplitude >= 0.0

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "out.csv")
        vzsim.write_results(cfg, curves, path, timestamp=0)
        with open(path) as f:
            assert len(f.readlines()) == 9
        assert os.path.exists(os.path.join(d, "out.json"))

    print("smoke test passed")


if __name__ == "__main__":
    main()
