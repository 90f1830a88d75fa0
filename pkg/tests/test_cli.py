import io

import numpy as np
import pytest

from zkivf import cli
from zkivf.exceptions import ZkIvfError
from zkivf.formats import write_fvecs

CONFIG = """\
# tiny deployment
N0 = 12
D = 4
n_list = 4
n_probe = 2
n = 4
M = 2
K = 2
k = 2
v_max = 1.0
bits = 6
signed = true
t_cmp = 48
variant = multiset
seed = 1
"""


def run(*argv):
    out = io.StringIO()
    code = cli.main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def deployed(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    cfg = d / "tiny.cfg"
    cfg.write_text(CONFIG)
    store = d / "store"
    assert run("shape", "--config", cfg, "--out", d / "s0.v3db")[0] == 0
    assert run("shape", "--config", cfg, "--out", d / "s1.v3db", "--seed", 2)[0] == 0
    code, text = run("commit", "--snapshot", d / "s0.v3db", "--store", store)
    assert code == 0 and text.startswith("epoch 0")
    assert run("commit", "--snapshot", d / "s1.v3db", "--store", store)[0] == 0
    return d, cfg, store


def test_parse_config():
    vals = cli.parse_config(CONFIG)
    assert vals["N0"] == 12 and vals["signed"] is True and vals["v_max"] == 1.0
    with pytest.raises(cli.UsageError):
        cli.parse_config("N0 12")
    with pytest.raises(cli.UsageError):
        cli.parse_config("colour = red")


def test_query(deployed):
    d, cfg, store = deployed
    code, text = run("query", "--config", cfg, "--store", store, "--q", "0.1,0.2,-0.3,0.4",
                     "--debug")
    rows = [line.split("\t") for line in text.strip().splitlines()]
    assert code == 0 and len(rows) == 2 and int(rows[0][1]) <= int(rows[1][1])


def test_query_from_fvecs(deployed):
    d, cfg, store = deployed
    write_fvecs(d / "q.fvecs", np.array([[0.1, 0.2, -0.3, 0.4], [0, 0, 0, 0]], dtype=np.float32))
    a = run("query", "--config", cfg, "--store", store, "--queries", d / "q.fvecs", "--qi", 0)
    b = run("query", "--config", cfg, "--store", store, "--q", "0.1,0.2,-0.3,0.4")
    assert a == b


def test_prove_verify_and_epoch_substitution(deployed):
    d, cfg, store = deployed
    bundle = d / "p.bin"
    code, text = run("prove", "--config", cfg, "--store", store, "--epoch", 1,
                     "--q", "0.1,0.2,-0.3,0.4", "--out", bundle, "--seed", 4)
    assert code == 0
    code, vtext = run("verify", "--config", cfg, "--store", store, "--epoch", 1, "--bundle", bundle)
    assert code == 0 and vtext.startswith("accept")
    assert vtext.splitlines()[1] == text.splitlines()[0]
    # the same bundle presented against the other epoch's commitment
    code, vtext = run("verify", "--config", cfg, "--store", store, "--epoch", 0, "--bundle", bundle)
    assert code == 1 and vtext.startswith("reject")
    code, _ = run("verify", "--config", cfg, "--store", store, "--epoch", 1, "--bundle", bundle,
                  "--variant", "baseline")
    assert code == 1
    raw = bytearray(bundle.read_bytes())
    raw[-40] ^= 0x10
    (d / "flip.bin").write_bytes(bytes(raw))
    assert run("verify", "--config", cfg, "--store", store, "--epoch", 1,
               "--bundle", d / "flip.bin")[0] == 1
    (d / "cut.bin").write_bytes(bytes(raw[:50]))
    assert run("verify", "--config", cfg, "--store", store, "--epoch", 1,
               "--bundle", d / "cut.bin")[0] == 1


def test_exit_codes(deployed, tmp_path):
    d, cfg, store = deployed
    assert run("nonsense")[0] == 2
    assert run("query", "--config", cfg, "--store", store)[0] == 2  # no query given
    assert run("query", "--config", tmp_path / "missing.cfg", "--store", store, "--q", "0")[0] == 2
    assert run("query", "--config", cfg, "--store", store, "--q", "0.1,0.2")[0] == 3
    assert run("query", "--config", cfg, "--store", store, "--q", "0,0,0,0", "--epoch", 9)[0] == 3
    assert run("commit", "--snapshot", tmp_path / "none.v3db", "--store", store)[0] == 3
    bad = tmp_path / "bad.cfg"
    bad.write_text(CONFIG.replace("N0 = 12", "N0 = 99"))
    assert run("query", "--config", bad, "--store", store, "--q", "0,0,0,0")[0] == 3


def test_store_epoch_must_grow(deployed):
    d, cfg, store = deployed
    assert run("commit", "--snapshot", d / "s0.v3db", "--store", store, "--epoch", 0)[0] == 3


def test_tune_and_gates(deployed, tmp_path):
    d, cfg, store = deployed
    code, text = run("tune", "--config", cfg, "--N", 1024, "--B", 16, "--r", 0.0625,
                     "--n-list-max", 64, "--K", "2,4,16", "--csv", tmp_path / "g.csv")
    assert code == 0 and "n_list* =" in text
    assert (tmp_path / "g.csv").read_text().startswith("n_list,K,")
    assert run("tune", "--config", cfg, "--N", 1024, "--B", 16, "--r", 0.05,
               "--n-list-max", 64)[0] == 3
    code, text = run("gates", "--config", cfg, "--measure")
    assert code == 0 and "step4," in text and "G_B," in text


def test_bench_row(deployed):
    d, cfg, store = deployed
    code, text = run("bench", "--config", cfg, "--reps", 2, "--variant", "multiset")
    lines = text.strip().splitlines()
    assert code == 0 and len(lines) == 2
    assert len(lines[1].split(" | ")) == 6


def test_errors_are_library_errors():
    assert issubclass(cli.UsageError, Exception) and not issubclass(cli.UsageError, ZkIvfError)
