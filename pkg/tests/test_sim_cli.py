import csv
import io
import json

import numpy as np
import pytest

from macpolar.base_code import DecodingOrder
from macpolar.channels import bec, derived_two_user_mac, noiseless_mac, save_channel
from macpolar.cli import main, parse_channel
from macpolar.errors import ChannelError, PreconditionError
from macpolar.mac_code import construct
from macpolar.sim import DiscreteSampler, GaussianSampler, SimConfig, simulate, wilson_interval


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_wilson_known_values():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and hi == pytest.approx(0.2775, abs=1e-4)
    lo, hi = wilson_interval(5, 10)
    assert (lo, hi) == pytest.approx((0.2366, 0.7634), abs=1e-4)
    with pytest.raises(PreconditionError):
        wilson_interval(3, 2)


def test_simconfig_rejects_zero_trials():
    with pytest.raises(PreconditionError):
        SimConfig(trials=0)


def test_noiseless_simulation_is_error_free():
    W = noiseless_mac(2)
    spec = construct(W, DecodingOrder.parse("1,2,1,2"), 5)
    rep = simulate(spec, DiscreteSampler(W), 600, seed=1)
    assert rep.frame_errors == 0 and rep.bit_errors == (0, 0)
    assert rep.ci_low <= rep.fer <= rep.ci_high


def test_simulation_is_schedule_invariant():
    W = derived_two_user_mac(bec(0.5))
    spec = construct(W, DecodingOrder.parse("1,2,1,2"), 5, selection="target")
    a = simulate(spec, DiscreteSampler(W), 1000, seed=5)
    b = simulate(spec, DiscreteSampler(W), 1000, seed=5, workers=3)
    assert a == b and a.frame_errors > 0
    assert a != simulate(spec, DiscreteSampler(W), 1000, seed=6)


def test_small_bec_mac_respects_union_bound():
    W = derived_two_user_mac(bec(0.5))
    spec = construct(W, DecodingOrder.parse("1,2,1,2"), 6, beta=0.1)
    rep = simulate(spec, DiscreteSampler(W), 20000, seed=2)
    assert rep.ci_high <= rep.union_bound


def test_gaussian_sampler_log_densities():
    s = GaussianSampler(2, amplitude=1.0, noise_variance=0.5)
    assert np.array_equal(s.means, [-2, 0, 0, 2])
    x = np.zeros((1, 2, 4), np.uint8)
    ll = s(x, np.random.default_rng(0))
    assert ll.shape == (1, 4, 4)
    # the all-zero tuple has mean -2; it is the likeliest on average
    assert np.mean(np.argmax(ll, axis=-1) == 0) > 0.5


def test_parse_channel_builtins(tmp_path):
    assert parse_channel("gaussian:m=2,bins=40").outputs == 40
    assert parse_channel("derived-bec:0.3").m == 2
    assert parse_channel("product-bec:0.1,0.2,0.3").m == 3
    path = tmp_path / "w.json"
    save_channel(noiseless_mac(2), path)
    assert parse_channel(str(path)).m == 2
    for bad in ("nonsense", "bec:x", "gaussian:m", "gaussian:foo=1"):
        with pytest.raises(ChannelError):
            parse_channel(bad)


def test_cli_region(capsys):
    code, out, _ = run(capsys, "region", "--channel", "gaussian:m=3,bins=400")
    assert code == 0
    r = rows(out)
    assert len(r) == 7 and r[-1]["users"] == "1+2+3"
    single = rows(run(capsys, "region", "--channel", "bec:0.25")[1])
    assert len(single) == 1 and float(single[0]["bound"]) == pytest.approx(0.75)


def test_cli_basecodes(capsys):
    code, out, _ = run(capsys, "basecodes", "--channel", "gaussian:m=3,bins=16,grid=4", "--L", "2")
    r = rows(out)
    assert code == 0 and len(r) == 90
    assert all(row["on_face"] == "True" for row in r)
    sums = [float(row["sum"]) for row in r]
    assert max(sums) - min(sums) < 1e-9


def test_cli_basecodes_budget(capsys):
    code, _, err = run(capsys, "basecodes", "--channel", "noiseless:3", "--L", "4",
                       "--budget", "100")
    assert code != 0 and "budget" in err


def test_cli_cover(capsys):
    code, out, _ = run(capsys, "cover", "--channel", "derived-bec:0.4", "--L", "1",
                       "--samples", "30", "--double", "--format", "json")
    data = json.loads(out)
    assert code == 0 and [d["L"] for d in data] == [1, 2]
    assert all(d["ok"] for d in data)
    assert data[1]["bound"] == pytest.approx(data[0]["bound"] / 2)


def test_cli_construct_and_simulate(tmp_path, capsys):
    spec = tmp_path / "code.json"
    code, out, _ = run(capsys, "construct", "--channel", "noiseless:2", "--order", "1,2,1,2",
                       "--n", "4", "--spec", str(spec))
    r = rows(out)
    assert code == 0 and all(float(row["rate"]) == 1.0 for row in r)
    code, out, _ = run(capsys, "simulate", "--channel", "noiseless:2", "--spec", str(spec),
                       "--trials", "300", "--format", "json")
    assert code == 0 and json.loads(out)[0]["frame_errors"] == 0


def test_cli_construct_threshold_bound(capsys):
    _, out, _ = run(capsys, "construct", "--channel", "derived-bec:0.3", "--order", "1,2,1,2",
                    "--n", "6", "--beta", "0.3")
    r = rows(out)
    assert float(r[0]["union_bound"]) < 2.0 ** (-(64**0.3))


def test_cli_simulate_is_reproducible(tmp_path, capsys):
    args = ["simulate", "--channel", "derived-bec:0.5", "--order", "1,2,1,2", "--n", "5",
            "--selection", "target", "--trials", "500", "--seed", "3", "--format", "json"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args, "--workers", "2")
    assert a == b


def test_cli_simulate_gaussian(capsys):
    code, out, _ = run(capsys, "simulate", "--channel", "gaussian:m=2,bins=100,variance=0.1",
                       "--order", "1,2,1,2", "--n", "4", "--method", "montecarlo",
                       "--trials", "200", "--beta", "0.3", "--format", "json")
    rep = json.loads(out)[0]
    assert code == 0 and 0 <= rep["fer"] <= rep["ci_high"]


def test_cli_counterexample(capsys):
    code, out, _ = run(capsys, "counterexample", "--channel", "bec:0.5", "--ns", "4,8",
                       "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data[0] == {"kind": "square_corner", "R1": 0.5, "R2": 0.5}
    tri = [d for d in data if d["kind"] == "triples"]
    assert tri[0]["intermediate"] > tri[1]["intermediate"]
    joint = [d for d in data if d["kind"] == "joint"]
    assert all(d["on_face"] for d in joint)
    assert any(not d["square"] for d in joint)


def test_cli_errors(tmp_path, capsys):
    code, _, err = run(capsys, "region", "--channel", "missing.json")
    assert code == 2 and "error" in err
    bad = tmp_path / "bad.json"
    bad.write_text('{"m": 1,\n "outputs": 2,\n "probs": [[0.5, 0.5], [0.5 0.5]]}')
    code, _, err = run(capsys, "region", "--channel", str(bad))
    assert code == 2 and "line 3" in err
    code, _, err = run(capsys, "construct", "--channel", "noiseless:2", "--order", "1,2,3")
    assert code == 2
    code, _, _ = run(capsys, "counterexample", "--channel", "noiseless:2")
    assert code == 2
    code, _, _ = run(capsys, "region", "--channel", "noiseless:2", "--m", "3")
    assert code == 2


def test_cli_writes_file(tmp_path, capsys):
    out = tmp_path / "region.json"
    main(["region", "--channel", "noiseless:2", "--format", "json", "--out", str(out)])
    assert json.loads(out.read_text())[-1]["bound"] == pytest.approx(2.0)
