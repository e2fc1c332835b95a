"""The description language, file formats and command behavior."""

import json

import pytest
from numpy.testing import assert_allclose

import ddae.cli as cli
from ddae import Posedness, classify
from fleet import ADE, FIGURE_SG, MIXED_DENSITY, RETARDED
from helpers import bisect_lambert_root


def test_parse_figure_sg_and_build():
    desc = cli.parse(FIGURE_SG)
    assert (desc.n, desc.m, desc.r) == (1, 1, 1.0)
    system = cli.build_system(desc)
    assert classify(system).kind is Posedness.EXPLICIT  # only a delayed y-term
    from ddae import canonical_diagram

    diagram = canonical_diagram(system)
    assert diagram.labels[2][0].atoms[0].weight[0, 0] == 2.0  # named matrix resolved


def test_parse_empty_kernel_blocks_mean_zero_kernels():
    desc = cli.parse("system n=2 m=1 r=0.5\n")
    system = cli.build_system(desc)
    assert not system.A.atoms and not system.A.pieces
    assert not system.D.atoms and not system.D.pieces


def test_parse_complex_literals():
    desc = cli.parse(
        "system n=2 m=0 r=1\n"
        "kernel A:\n"
        "  atom 0.5 [[1+2i,-0.5i],[3,-1-1e-2i]]\n"
    )
    weight = desc.kernels["A"][0].weight
    assert weight[0, 0] == 1 + 2j
    assert weight[0, 1] == -0.5j
    assert weight[1, 0] == 3
    assert weight[1, 1] == -1 - 0.01j


def test_parse_errors_carry_positions():
    with pytest.raises(cli.DslSyntaxError) as info:
        cli.parse("system n=1 m=0\n")
    assert info.value.line == 1

    with pytest.raises(cli.UndefinedMatrix) as info:
        cli.parse("system n=1 m=0 r=1\nkernel A:\n  atom 0 missing\n")
    assert (info.value.line, info.value.col) == (3, 10)

    with pytest.raises(cli.SupportOutOfRange):
        cli.parse("system n=1 m=0 r=1\nkernel A:\n  atom -0.5 [[1]]\n")

    with pytest.raises(cli.SupportOutOfRange):
        cli.parse("system n=1 m=0 r=1\nkernel A:\n  atom 2.0 [[1]]\n")

    with pytest.raises(cli.DimensionMismatch):
        cli.parse("system n=1 m=0 r=1\nkernel A:\n  atom 0 [[1,0],[0,1]]\n")

    with pytest.raises(cli.DslSyntaxError):
        cli.parse("system n=1 m=0 r=1\nnonsense here\n")


def test_dimension_error_when_m_is_zero():
    with pytest.raises(cli.DimensionMismatch):
        cli.parse("system n=1 m=0 r=1\nkernel D:\n  atom 0 [[1]]\n")


def test_roundtrip_through_emit():
    for text in (ADE, FIGURE_SG, RETARDED, MIXED_DENSITY):
        desc = cli.parse(text)
        emitted = cli.emit(desc)
        assert cli.parse(emitted) == desc
        assert cli.emit(cli.parse(emitted)) == emitted


def test_roundtrip_fuzz_random_descriptions():
    import numpy as np

    rng = np.random.default_rng(113)

    def scalar():
        kind = rng.integers(0, 4)
        if kind == 0:
            return complex(rng.integers(-3, 4), 0)
        if kind == 1:
            return complex(rng.standard_normal() * 10.0 ** rng.integers(-12, 13), 0)
        if kind == 2:
            return complex(0, rng.standard_normal())
        return complex(rng.standard_normal(), rng.standard_normal())

    def matrix(rows, cols):
        return np.array([[scalar() for _ in range(cols)] for _ in range(rows)])

    for _ in range(25):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(0, 4))
        r = float(rng.integers(1, 5)) / 4.0
        kernels = {}
        for name, (rows, cols) in {"A": (n, n), "B": (n, m), "C": (m, n), "D": (m, m)}.items():
            terms = []
            if rows and cols:
                for _ in range(int(rng.integers(0, 3))):
                    terms.append(cli.AtomTerm(float(rng.integers(0, 5)) * r / 4.0, matrix(rows, cols)))
                if rng.random() < 0.3:
                    terms.append(cli.PolyTerm(0.0, r, (matrix(rows, cols), matrix(rows, cols))))
                if rng.random() < 0.3:
                    d = int(rng.integers(1, 3))
                    terms.append(cli.ExpTerm(r / 4.0, r, matrix(rows, d), matrix(d, d), matrix(d, cols)))
            kernels[name] = tuple(terms)
        init = None
        if rng.random() < 0.5:
            init = cli.InitSpec(
                matrix(1, n)[0], ("const", matrix(1, n)[0]), ("const", matrix(1, m)[0]),
                r / 8.0,
            )
        desc = cli.SystemDescription(n, m, r, kernels, init)
        emitted = cli.emit(desc)
        assert cli.parse(emitted) == desc, emitted


def test_roundtrip_preserves_complex_and_exp_terms():
    text = (
        "system n=2 m=2 r=0.5\n"
        "kernel A:\n"
        "  atom 0.25 [[0.1+0.25i,0],[0,-3]]\n"
        "kernel D:\n"
        "  exp [0,0.5] [[-1,0],[0,-1]] [[0,1],[0,0]] [[2,0],[0,2]]\n"
        "  poly [0.1,0.4] [[1,0],[0,1]] [[0.5,0],[0,0.5]]\n"
    )
    desc = cli.parse(text)
    assert cli.parse(cli.emit(desc)) == desc


def test_initial_state_from_samples_file(tmp_path):
    text = "system n=1 m=0 r=0.5\nkernel A:\n  atom 0 [[-1]]\ninit phi=[1] chi=samples.csv psi=[] h=0.25\n"
    (tmp_path / "samples.csv").write_text("0.5\n0.75\n1\n")
    desc = cli.parse(text)
    init = cli.build_initial_state(desc, base_dir=tmp_path)
    assert_allclose(init.chi[:, 0], [0.5, 0.75, 1.0])


def test_cmd_check_singular_exit_code(tmp_path, capsys):
    path = tmp_path / "ade.ddae"
    path.write_text(ADE)
    code = cli.main(["check", str(path)])
    out = capsys.readouterr().out
    assert code == 1
    assert "SingularJ" in out
    assert "causality: loop" in out
    assert "consistency residual" in out


def test_cmd_check_reports_explicit(tmp_path, capsys):
    path = tmp_path / "retarded.ddae"
    path.write_text(RETARDED)
    code = cli.main(["check", str(path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "classification: Explicit" in out
    assert "acyclic" in out


def test_cmd_graph_dot(tmp_path, capsys):
    path = tmp_path / "sg.ddae"
    path.write_text(FIGURE_SG)
    code = cli.main(["graph", str(path)])
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("digraph")
    assert '"x1" -> "y1" [style=solid, label="2*delta(0)"]' in out


def test_cmd_simulate_csv(tmp_path):
    path = tmp_path / "retarded.ddae"
    path.write_text(RETARDED)
    out_path = tmp_path / "out.csv"
    code = cli.main(["simulate", str(path), "--horizon", "1.0", "--out", str(out_path)])
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == "t,x1"
    assert lines[1].startswith("-1,")
    # memory rows -1..-h, then 0..1 computed: (8 memory + 9 computed)
    assert len(lines) == 1 + 8 + 9
    # x' = x(t-1) from chi=1: x(t) = 1 + t on [0, 1]
    last = lines[-1].split(",")
    assert float(last[0]) == pytest.approx(1.0)
    assert float(last[1]) == pytest.approx(2.0, abs=1e-12)


def test_cmd_simulate_step_override_resamples_constant_memory(tmp_path):
    path = tmp_path / "retarded.ddae"
    path.write_text(RETARDED)
    out_path = tmp_path / "out.csv"
    code = cli.main([
        "simulate", str(path), "--step", "0.25", "--horizon", "1.0", "--out", str(out_path)
    ])
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert len(lines) == 1 + 4 + 5  # header, memory at h=0.25, computed

    # a step that does not divide the memory is rejected cleanly
    code = cli.main(["simulate", str(path), "--step", "0.3", "--horizon", "0.9"])
    assert code == 2


def test_cmd_simulate_requires_init(tmp_path, capsys):
    path = tmp_path / "bare.ddae"
    path.write_text("system n=1 m=0 r=1\nkernel A:\n  atom 1 [[1]]\n")
    code = cli.main(["simulate", str(path), "--horizon", "1.0"])
    assert code == 2
    assert "init" in capsys.readouterr().err


def test_cmd_simulate_suggests_a_step_for_off_grid_atoms(tmp_path, capsys):
    path = tmp_path / "delays.ddae"
    path.write_text(
        "system n=1 m=0 r=1\n"
        "kernel A:\n"
        "  atom 0.75 [[-1]]\n"
        "  atom 1 [[-0.5]]\n"
        "init phi=[1] chi=[1] psi=[] h=0.2\n"
    )
    code = cli.main(["simulate", str(path), "--horizon", "1.0"])
    err = capsys.readouterr().err
    assert code == 2
    assert "try --step 0.25" in err


def test_cmd_spectrum_json(tmp_path):
    path = tmp_path / "retarded.ddae"
    path.write_text(RETARDED)
    out_path = tmp_path / "report.json"
    code = cli.main([
        "spectrum", str(path), "--window", "-1", "1", "20", "--out", str(out_path)
    ])
    assert code == 0
    payload = json.loads(out_path.read_text())
    assert list(payload.keys()) == ["window", "roots", "growth_bound", "delta0_roots", "warnings"]
    assert list(payload["window"].keys()) == ["re_min", "re_max", "im_max"]
    assert len(payload["roots"]) == 1
    root = payload["roots"][0]
    assert list(root.keys()) == ["re", "im", "mult", "residual"]
    assert root["re"] == pytest.approx(bisect_lambert_root(), abs=1e-6)
    assert payload["growth_bound"] == pytest.approx(root["re"])


def test_cmd_spectrum_empty_window_reports_null_growth(tmp_path):
    path = tmp_path / "retarded.ddae"
    path.write_text(RETARDED)
    out_path = tmp_path / "empty.json"
    code = cli.main(["spectrum", str(path), "--window", "1", "2", "5", "--out", str(out_path)])
    assert code == 0
    payload = json.loads(out_path.read_text())
    assert payload["roots"] == []
    assert payload["growth_bound"] is None


def test_cmd_spectrum_rejects_singular(tmp_path, capsys):
    path = tmp_path / "ade.ddae"
    path.write_text(ADE)
    code = cli.main(["spectrum", str(path), "--window", "-1", "1", "5"])
    assert code == 1
    assert "SingularJ" in capsys.readouterr().err


def test_cmd_fsa_emits_a_loadable_system(tmp_path):
    out_path = tmp_path / "loop.ddae"
    code = cli.main([
        "fsa", "--E", "[[0,1],[0,0]]", "--F", "[[0],[1]]", "--T", "1",
        "--poles", "-1", "-2", "--out", str(out_path),
    ])
    assert code == 0
    desc = cli.parse(out_path.read_text())
    system = cli.build_system(desc)
    assert classify(system).kind is Posedness.EXPLICIT
    from ddae import find_roots

    report = find_roots(system, (-3.0, 1.0, 30.0), max_roots=32)
    locations = sorted(root.location.real for root in report.roots)
    assert_allclose(locations, [-2.0, -1.0], atol=1e-6)


def test_cmd_fsa_with_explicit_gain(tmp_path, capsys):
    code = cli.main(["fsa", "--E", "[[0]]", "--F", "[[1]]", "--T", "0.5", "--G", "[[1]]"])
    assert code == 0
    out = capsys.readouterr().out
    assert "exp [0.0,0.5]" in out


def test_cli_parse_error_reporting(tmp_path, capsys):
    path = tmp_path / "broken.ddae"
    path.write_text("system n=1 m=0 r=1\nkernel A:\n  atom 0 missing\n")
    code = cli.main(["check", str(path)])
    err = capsys.readouterr().err
    assert code == 2
    assert f"{path}:3:10:" in err
