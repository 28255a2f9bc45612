import os

import numpy as np
import pytest

from ncsred.attack import AttackConfig
from ncsred.cli import main
from ncsred.errors import InvalidInputError
from ncsred.harness import emit, metrics, read_trajectories_csv, run
from ncsred.scenario_io import build_scenario, load_scenario, parse_scenario_text


def short_scenario(seed=0, horizon=80, **attack_overrides):
    defaults = dict(rho=0.05, s=8, start_step=51, dos_step=60,
                    snapshot_width=50)
    defaults.update(attack_overrides)
    return build_scenario(seed=seed, horizon_steps=horizon,
                          attack=AttackConfig(**defaults))


class TestRun:
    def test_rejects_unknown_mode(self):
        s = short_scenario()
        with pytest.raises(InvalidInputError):
            run(s, "stealth")

    def test_nominal_converges(self):
        s = build_scenario(seed=0)
        m = metrics(run(s, "nominal"))
        assert m.pair_final.max() < 0.1
        assert m.leader_tracking_final < 0.1

    def test_zero_budget_fdi_reproduces_nominal(self):
        s = short_scenario(rho=0.0)
        a = run(s, "nominal")
        b = run(s, "fdi")
        assert np.array_equal(a.states, b.states)
        assert all(d is None for d in b.decisions)

    def test_fdi_applies_injections_after_start(self):
        s = short_scenario()
        r = run(s, "fdi")
        assert all(d is None for d in r.decisions[:51])
        attacked = [d for d in r.decisions[51:] if d is not None]
        assert len(attacked) == r.horizon - 51
        assert not r.injections[:51].any()

    def test_fdi_dos_executes_at_configured_step(self):
        s = short_scenario()
        r = run(s, "fdi_dos")
        assert len(r.dos_events) == 1
        assert r.dos_events[0].k == 60
        assert len(r.graphs) == 2
        removed = set(r.dos_events[0].removed_edges)
        assert removed and removed <= s.graph.edges

    def test_forced_dos_edge(self):
        s = short_scenario(dos_edge=(2, 4))
        r = run(s, "fdi_dos")
        assert r.dos_events[0].removed_edges == [(2, 4)]
        assert r.graphs[1].edges == s.graph.edges - {(2, 4)}

    def test_forced_dos_edge_missing_raises(self):
        s = short_scenario(dos_edge=(3, 4))
        with pytest.raises(InvalidInputError):
            run(s, "fdi_dos")


class TestMetrics:
    def test_single_agent_has_empty_pair_table(self):
        s = build_scenario(seed=0, n_agents=1, edges=set(),
                           offsets=np.zeros((1, 4)), horizon_steps=5)
        m = metrics(run(s, "nominal"))
        assert m.rows() == [("pair", "max_error", "final_error")]

    def test_identical_seeds_identical_tables(self):
        a = metrics(run(short_scenario(seed=3, horizon=60), "nominal"))
        b = metrics(run(short_scenario(seed=3, horizon=60), "nominal"))
        assert a.rows() == b.rows()
        assert a.steady_tracking_max == b.steady_tracking_max

    def test_pair_count(self):
        m = metrics(run(short_scenario(), "nominal"))
        assert len(m.pairs) == 10


class TestEmit:
    def test_files_and_row_counts(self, tmp_path):
        s = short_scenario(seed=1, horizon=70)
        r = run(s, "fdi")
        emit(r, tmp_path)
        names = sorted(os.listdir(tmp_path))
        assert names == ["attack.csv", "errors.csv", "tracking.csv",
                         "trajectories.csv", "trajectories.svg", "errors.svg"] or \
               set(names) == {"attack.csv", "errors.csv", "tracking.csv",
                              "trajectories.csv", "trajectories.svg", "errors.svg"}
        traj = (tmp_path / "trajectories.csv").read_text().strip().splitlines()
        assert len(traj) == 1 + (70 + 1) * 5
        errs = (tmp_path / "errors.csv").read_text().strip().splitlines()
        assert len(errs) == 1 + (70 + 1) * 10
        attack = (tmp_path / "attack.csv").read_text().strip().splitlines()
        assert len(attack) == 1 + (70 - 51)
        svg = (tmp_path / "errors.svg").read_text()
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")

    def test_round_trip_full_precision(self, tmp_path):
        s = short_scenario(seed=2, horizon=60)
        r = run(s, "fdi")
        emit(r, tmp_path)
        states = read_trajectories_csv(tmp_path / "trajectories.csv")
        assert np.array_equal(states, r.states)

    def test_reruns_byte_identical(self, tmp_path):
        for mode in ("nominal", "fdi"):
            d1 = tmp_path / f"{mode}_1"
            d2 = tmp_path / f"{mode}_2"
            emit(run(short_scenario(seed=5, horizon=60), mode), d1)
            emit(run(short_scenario(seed=5, horizon=60), mode), d2)
            for name in os.listdir(d1):
                assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name


class TestScenarioIO:
    def test_defaults_match_experiment(self):
        s = load_scenario(None)
        assert s.n_agents == 5
        assert s.agent_model.dt == 0.2
        assert s.horizon_steps == 500
        assert s.graph.edges == frozenset({(0, 1), (0, 2), (1, 3), (2, 4)})
        assert s.attack.rho == 0.05
        assert s.attack.s == 8

    def test_parse_file_with_overrides(self, tmp_path):
        text = """
        # comment line
        n_agents = 3
        dt = 0.1
        horizon_steps = 40
        rng_seed = 7
        edges = 1-2, 2-3       # one-based in files
        formation_offsets = 0,0; -1,0; 1,0
        gain_row1 = -0.3 -0.5 0 0
        gain_row2 = 0 0 -0.3 -0.5
        leader_gain_row1 = -2 -1 0 0
        leader_gain_row2 = 0 0 -2 -1
        rho = 0.1
        faces = 6
        start_step = 10
        dos_step = 20
        dos_edge = 2-3
        snapshot_width = 8
        """
        path = tmp_path / "scn.txt"
        path.write_text(text)
        s = load_scenario(path)
        assert s.n_agents == 3
        assert s.graph.edges == frozenset({(0, 1), (1, 2)})
        assert s.attack.dos_edge == (1, 2)
        assert s.attack.s == 6
        assert np.array_equal(s.gain[0], [-0.3, -0.5, 0, 0])
        assert s.formation_offsets[1, 0] == -1.0
        assert s.rng_seed == 7

    def test_seed_override(self, tmp_path):
        path = tmp_path / "scn.txt"
        path.write_text("rng_seed = 3\n")
        assert load_scenario(path, seed=11).rng_seed == 11

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "scn.txt"
        path.write_text("warp_drive = 1\n")
        with pytest.raises(InvalidInputError):
            load_scenario(path)

    def test_bad_line_rejected(self):
        with pytest.raises(InvalidInputError):
            parse_scenario_text("just words\n")

    def test_zero_based_edge_token_rejected(self, tmp_path):
        path = tmp_path / "scn.txt"
        path.write_text("edges = 0-1\n")
        with pytest.raises(InvalidInputError):
            load_scenario(path)


class TestCli:
    def scenario_file(self, tmp_path):
        path = tmp_path / "scn.txt"
        path.write_text("horizon_steps = 70\ndos_step = 60\n")
        return str(path)

    def test_simulate_nominal(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["simulate", "--scenario", self.scenario_file(tmp_path),
                   "--mode", "nominal", "--out", str(out)])
        assert rc == 0
        assert (out / "trajectories.csv").exists()
        assert "pair,max_error,final_error" in capsys.readouterr().out

    def test_simulate_bad_mode_argparse_exit(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["simulate", "--mode", "bogus", "--out", str(tmp_path)])

    def test_error_is_named_and_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "scn.txt"
        bad.write_text("edges = 0-1\n")
        rc = main(["simulate", "--scenario", str(bad), "--mode", "nominal",
                   "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "InvalidInputError" in capsys.readouterr().err

    def test_dmd_export(self, tmp_path, capsys):
        out = tmp_path / "dmd"
        rc = main(["dmd-export", "--scenario", self.scenario_file(tmp_path),
                   "--at", "60", "--out", str(out)])
        assert rc == 0
        X = np.loadtxt(out / "X.csv", delimiter=",")
        Xp = np.loadtxt(out / "X_plus.csv", delimiter=",")
        K = np.loadtxt(out / "K.csv", delimiter=",")
        assert X.shape == (20, 50) and Xp.shape == (20, 50) and K.shape == (20, 20)
        assert np.allclose(X[:, 1:], Xp[:, :-1])

    def test_reachset_dump(self, tmp_path):
        out = tmp_path / "reach"
        rc = main(["reachset-dump", "--scenario", self.scenario_file(tmp_path),
                   "--at", "60", "--horizon", "2", "--out", str(out)])
        assert rc == 0
        rows = (out / "polygons.csv").read_text().strip().splitlines()
        assert rows[0] == "step,agent,vertex,x,y"
        assert len(rows) > 5
        assert (out / "polygons.svg").exists()

    def test_recover_laplacian_round_trip(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        from ncsred.graph import Graph, laplacian
        L0 = laplacian(Graph(3, frozenset({(0, 1), (1, 2)})))
        T0 = rng.normal(size=(4, 4))
        K = np.kron(L0, T0)
        kpath = tmp_path / "K.csv"
        np.savetxt(kpath, K, delimiter=",")
        out = tmp_path / "rec"
        rc = main(["recover-laplacian", "--input", str(kpath), "--out", str(out)])
        assert rc == 0
        L_hat = np.loadtxt(out / "L_hat.csv", delimiter=",")
        off = L_hat - np.diag(np.diag(L_hat))
        mx = np.abs(off).max()
        edges = {(i, j) for i in range(3) for j in range(i + 1, 3)
                 if off[i, j] < -0.5 * mx}
        assert edges == {(0, 1), (1, 2)}
        trace = (out / "trace.csv").read_text().strip().splitlines()
        assert trace[0] == "iteration,frobenius_residual,gamma"
        assert len(trace) >= 2
