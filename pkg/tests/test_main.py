import json

import pytest

import main
from core.runner import SUMMARY_FILE, TRACE_FILE


@pytest.fixture(autouse=True)
def log_temporario(tmp_path, monkeypatch):
    monkeypatch.setenv("PGLQR_LOG_FILE", str(tmp_path / "logs" / "pglqr.log"))


def _matriz(caminho, valor):
    caminho.write_text(f"1 1\n{valor}\n")


def test_descent_kn(tmp_path, capsys):
    out = tmp_path / "kn"
    codigo = main.main(["descent", "--algorithm", "kn", "--preset", "path20", "--out", str(out)])
    assert codigo == 0
    assert "✅" in capsys.readouterr().out
    assert (out / TRACE_FILE).exists()
    dados = json.loads((out / SUMMARY_FILE).read_text())
    assert dados["status"] == "converged"
    assert dados["report"]["samples"] == 100


def test_unknown_preset(tmp_path):
    assert main.main(["descent", "--algorithm", "gd", "--preset", "ring", "--out",
                      str(tmp_path)]) == 2


def test_missing_plant(tmp_path):
    assert main.main(["descent", "--algorithm", "gd", "--out", str(tmp_path)]) == 2


def test_incompatible_algorithm(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("preset = path20\nalgorithm = pgd\n")
    assert main.main(["descent", "--config", str(cfg)]) == 2


def test_unstable_plant(tmp_path):
    for nome, valor in (("a", 1.0), ("b", 1.0), ("q", 1.0), ("r", 1.0)):
        _matriz(tmp_path / f"{nome}.txt", valor)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("a = a.txt\nb = b.txt\nq = q.txt\nr = r.txt\nalgorithm = gd\n")
    assert main.main(["descent", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 3


def test_max_iter_exit_code(tmp_path):
    out = tmp_path / "gd"
    codigo = main.main(["descent", "--algorithm", "gd", "--preset", "path20", "--max-iter", "1",
                        "--out", str(out)])
    assert codigo == 4
    assert (out / SUMMARY_FILE).exists()


def test_flow_subcommand(tmp_path):
    out = tmp_path / "flow"
    codigo = main.main(["flow", "--kind", "natural(1)", "--preset", "path20", "--horizon", "20",
                        "--out", str(out)])
    assert codigo == 0
    assert json.loads((out / SUMMARY_FILE).read_text())["algorithm"] == "flow:natural(1)"


def test_bench_configs(tmp_path):
    args = main.criar_parser().parse_args(["bench", "--out", str(tmp_path), "--no-adaptive"])
    configs = main.configs_bench(args)
    assert len(configs) == len(main.BENCH)
    assert len({c.out for c in configs}) == len(configs)
    pgd = [c for c in configs if c.algorithm == "pgd"]
    assert pgd and not pgd[0].adaptive
    assert sum(c.samples > 0 for c in configs) == 1


def test_output_not_writable(tmp_path):
    arquivo = tmp_path / "ocupado"
    arquivo.write_text("")
    codigo = main.main(["descent", "--algorithm", "kn", "--preset", "path20", "--out",
                        str(arquivo / "sub")])
    assert codigo == 5


def test_pgd_no_adaptive_overrides_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("preset = path20\nalgorithm = pgd\nadaptive = yes\n")
    args = main.criar_parser().parse_args(["pgd", "--config", str(cfg), "--no-adaptive"])
    assert main.montar_config(args).adaptive is False
    args = main.criar_parser().parse_args(["pgd", "--config", str(cfg)])
    assert main.montar_config(args).adaptive is True
