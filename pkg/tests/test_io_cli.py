import numpy as np
import pytest

from gwpp import io
from gwpp.cli import main
from gwpp.config import desk_profile, study_profile, parse_config
from gwpp.design import build_sample, normalize_weights_subset, partition_random
from gwpp.draws import ChainDraws
from gwpp.errors import ConfigError, SchemaMismatch
from gwpp.synthpop import PopulationConfig, generate_population, hold_out_missing

TINY = """
[experiment]
replications = 1
K = 2
[population]
N = 120
T = 2
[chain]
iterations = 120
burn_in = 60
thin = 2
"""


class TestFormats:
    def test_population_round_trip(self, tmp_path):
        pop = generate_population(PopulationConfig(N=30, T=3, L=2, seed=61))
        io.write_population(pop, tmp_path)
        back = io.read_population(tmp_path / "population.csv")
        np.testing.assert_array_equal(back.y, pop.y)
        np.testing.assert_array_equal(back.theta_true, pop.theta_true)
        np.testing.assert_array_equal(back.z, pop.z)
        np.testing.assert_array_equal(back.strata, pop.strata)

    def test_sample_assignment_round_trip(self, tmp_path):
        pop = generate_population(PopulationConfig(N=50, T=2, seed=62))
        s = build_sample(pop, 0.5, 0)
        s.missing = hold_out_missing(s.y, 0.3, "mcar", 1)
        io.write_sample(s, tmp_path / "sample.csv")
        io.write_missing(s, tmp_path / "missing.csv")
        back = io.read_sample(tmp_path / "sample.csv", pop, tmp_path / "missing.csv")
        np.testing.assert_array_equal(back.unit_ids, s.unit_ids)
        np.testing.assert_array_equal(back.norm_w, s.norm_w)
        np.testing.assert_array_equal(back.missing, s.missing)
        a = normalize_weights_subset(s, partition_random(s, 3, 0))
        io.write_assignment(s, a, tmp_path / "a.csv")
        b = io.read_assignment(tmp_path / "a.csv", back)
        for x, y, wx, wy in zip(a.membership, b.membership, a.subset_w, b.subset_w):
            np.testing.assert_array_equal(x, y)
            np.testing.assert_array_equal(wx, wy)

    def test_draws_round_trip_is_exact(self, tmp_path, rng):
        d = ChainDraws(["theta[1][1]", "tau[1]"], rng.normal(size=(50, 2)) * 1e3, {"seed": 5, "k": [1, 2]})
        io.write_draws(d, tmp_path / "d.csv")
        back = io.read_draws(tmp_path / "d.csv")
        np.testing.assert_array_equal(back.draws, d.draws)
        assert back.meta == d.meta and back.names == d.names

    def test_wrong_header(self, tmp_path):
        (tmp_path / "sample.csv").write_text("a,b\n1,2\n")
        with pytest.raises(SchemaMismatch):
            io.read_sample(tmp_path / "sample.csv", None)


class TestConfig:
    def test_defaults(self):
        assert parse_config("").K == desk_profile().K

    def test_study_profile(self):
        cfg = parse_config("[experiment]\nprofile = study\n")
        assert cfg.population.N == study_profile().population.N == 10_000
        assert cfg.chain.iterations == 15_000

    def test_values(self):
        cfg = parse_config("[population]\ntau = 3, 4\nP2_spec = 1 0; 0 1\n[chain]\nupdate_rho = no\n")
        assert cfg.population.tau == (3.0, 4.0)
        assert cfg.population.P2_spec == ((1.0, 0.0), (0.0, 1.0))
        assert cfg.chain.update_rho is False

    @pytest.mark.parametrize("text", ["[experiment]\nfoo = 1\n", "[extra]\nx = 1\n", "[experiment]\nK = 0\n",
                                      "[experiment]\nK = two\n", "[experiment]\nprofile = huge\n"])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "tiny.cfg").write_text(TINY)
    return d


class TestCli:
    def test_step_by_step(self, workdir, capsys):
        cfg = workdir / "tiny.cfg"
        pop, smp = workdir / "population.csv", workdir / "sample.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(workdir)]) == 0
        assert main(["sample", "--config", str(cfg), "--population", str(pop), "--out", str(workdir)]) == 0
        assert main(["partition", "--config", str(cfg), "--population", str(pop), "--sample", str(smp),
                     "--out", str(workdir)]) == 0
        files = []
        for j in (1, 2):
            out = workdir / f"s{j}.csv"
            assert main(["fit", "--config", str(cfg), "--population", str(pop), "--sample", str(smp),
                         "--assignment", str(workdir / "assignment.csv"), "--subset", str(j),
                         "--out-file", str(out)]) == 0
            files.append(str(out))
        combined = workdir / "gwpp.csv"
        assert main(["combine", *files, "--out-file", str(combined)]) == 0
        capsys.readouterr()
        assert main(["accuracy", str(combined), str(combined)]) == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert rows[0] == "parameter,accuracy"
        assert all(r.endswith(",1.000000") for r in rows[1:])
        assert main(["impute", "--config", str(cfg), "--population", str(pop), "--sample", str(smp),
                     "--draws", str(combined), "--out", str(workdir / "imp")]) == 0
        assert (workdir / "imp" / "imputation.csv").exists()

    def test_combine_mismatch(self, workdir, capsys, rng):
        a = ChainDraws(["theta[1][1]"], rng.normal(size=(20, 1)))
        b = ChainDraws(["theta[2][1]"], rng.normal(size=(20, 1)))
        io.write_draws(a, workdir / "a.csv")
        io.write_draws(b, workdir / "b.csv")
        assert main(["combine", str(workdir / "a.csv"), str(workdir / "b.csv"),
                     "--out-file", str(workdir / "x.csv")]) == 1
        assert "different parameter names" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert main(["fit", "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["accuracy", str(tmp_path / "nope.csv"), str(tmp_path / "nope.csv")]) == 1

    def test_bad_config(self, tmp_path):
        (tmp_path / "bad.cfg").write_text("[experiment]\nfoo = 1\n")
        assert main(["experiment", "--config", str(tmp_path / "bad.cfg")]) == 1

    def test_runtime_failure(self, tmp_path, monkeypatch):
        import gwpp.cli

        def boom(cfg):
            raise RuntimeError("disk on fire")

        monkeypatch.setattr(gwpp.cli, "run_pipeline", boom)
        assert main(["experiment", "--out", str(tmp_path)]) == 2

    def test_experiment(self, workdir, capsys):
        out = workdir / "exp"
        assert main(["experiment", "--config", str(workdir / "tiny.cfg"), "--workers", "4",
                     "--out", str(out)]) == 0
        assert "mean TV accuracy" in capsys.readouterr().out
        assert (out / "timing.csv").read_text().startswith("label,seconds\nfull,")
