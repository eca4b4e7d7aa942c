import csv
import json

import pytest

from levynet.cli import DEFAULTS, SUBCOMMANDS, main


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_price_at_the_money(tmp_path):
    cfg = write(tmp_path / "c.json", {"s": [1.0], "tau": 1.0})
    assert main(["price", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "price.csv")
    assert len(rows) == 1 and rows[0]["kind"] == "Fourier"
    assert float(rows[0]["value"]) == pytest.approx(0.0796557, abs=1e-7)
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["subcommand"] == "price" and rep["seed"] == 0


def test_toml_config(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('s = [0.9, 1.1]\ntau = 0.5\n[model]\nvariant = "BlackScholes"\nsigma = 0.3\n')
    assert main(["price", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    assert [float(r["s"]) for r in read_csv(tmp_path / "o" / "price.csv")] == [0.9, 1.1]


def test_two_dimensional_price_columns(tmp_path):
    cfg = write(tmp_path / "c.json", {"model": {"variant": "BlackScholes", "sigma": 0.2, "d": 2},
                                      "payoff": {"kind": "BasketCall", "K": 1.0, "weights": [0.5, 0.5]},
                                      "s": [1.0, 1.0], "nPoints": 4096})
    assert main(["price", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "price.csv")
    assert set(rows[0]) == {"s1", "s2", "value", "errorBound", "kind"} and rows[0]["kind"] == "MonteCarlo"


@pytest.mark.parametrize("cfg, key", [
    ({"model": {"sigma": 0.2}}, "model.variant"),
    ({"modl": {}}, "modl"),
])
def test_config_errors_name_the_key(tmp_path, capsys, cfg, key):
    path = write(tmp_path / "c.json", cfg)
    assert main(["price", "--config", path, "--out", str(tmp_path / "o")]) == 2
    assert key in capsys.readouterr().err


def test_unreadable_config_and_negative_seed(tmp_path, capsys):
    assert main(["price", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["price", "--seed", "-1", "--out", str(tmp_path / "o")]) == 2
    assert "seed" in capsys.readouterr().err


def test_every_subcommand_has_defaults():
    assert set(DEFAULTS) == set(SUBCOMMANDS)


@pytest.mark.parametrize("sub, cfg", [
    ("construct", {"epsilon": 0.05}),
    ("calib", {"strikeRange": {"lo": 0.8, "hi": 1.25, "N": 10}}),
    ("chaos", {"maxOrder": 4, "nList": [1, 4, 8], "emulateN": 4, "gridPoints": 5}),
])
def test_reruns_are_byte_identical(tmp_path, sub, cfg):
    path = write(tmp_path / "c.json", cfg)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main([sub, "--config", path, "--seed", "7", "--out", str(out)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1]
    assert "report.json" in outs[0] and "network.json" in outs[0]
