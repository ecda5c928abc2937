import json
import math

import numpy as np
import pytest

from mcrisk import (
    INF,
    CenterModel,
    Dataset,
    KernelSpec,
    LpConstraint,
    alpha,
    empirical_risk,
    lp_norm,
    thm1_bound,
    thm2_bound,
    thm5_bound,
)
from mcrisk.cli import main
from mcrisk.core import DomainError
from mcrisk.harness import (
    DataError,
    GeneratorSpec,
    alpha_table,
    canonical_json,
    dataset_to_csv,
    emit_report,
    generate_synthetic,
    ground_truth,
    load_model,
    make_config,
    parse_config,
    parse_dataset_csv,
    run_verification,
    save_model,
)

# -- generator ---------------------------------------------------------------


@pytest.mark.parametrize("problem", ["switching", "clustering", "subspace"])
def test_generated_points_in_ball(problem):
    for lx in (0.5, 1.0, 3.0):
        data = generate_synthetic(GeneratorSpec(problem, n=300, d=4, C=3, lambda_x=lx, noise=0.2), 5)
        assert np.all(np.linalg.norm(data.points, axis=1) <= lx * (1 + 1e-12))
        assert data.lambda_x == lx
        if problem == "switching":
            assert np.all(np.abs(data.outputs) <= 0.5)


def test_subspace_generator_zero_noise_exact_truth():
    spec = GeneratorSpec("subspace", n=200, d=5, C=3, noise=0.0, dims=(2, 1, 3))
    data = generate_synthetic(spec, 11)
    assert empirical_risk(ground_truth(spec, 11), data) < 1e-12


def test_generator_deterministic_and_validated():
    spec = GeneratorSpec("clustering", n=50, d=2, C=2)
    assert np.array_equal(generate_synthetic(spec, 1).points, generate_synthetic(spec, 1).points)
    assert not np.array_equal(generate_synthetic(spec, 1).points, generate_synthetic(spec, 2).points)
    with pytest.raises(DomainError):
        GeneratorSpec("subspace", d=3, C=2, dims=(4, 1))
    with pytest.raises(DomainError):
        GeneratorSpec("regression")


# -- CSV and model files -----------------------------------------------------


def test_csv_round_trip_bit_exact():
    data = generate_synthetic(GeneratorSpec("switching", n=40, d=3), 3)
    back = parse_dataset_csv(dataset_to_csv(data), lambda_x=data.lambda_x)
    assert np.array_equal(back.points, data.points)
    assert np.array_equal(back.outputs, data.outputs)


def test_csv_header_optional():
    with_header = parse_dataset_csv("x_1,x_2\n0.1,0.2\n0.3,0.4\n")
    without = parse_dataset_csv("0.1,0.2\n0.3,0.4\n")
    assert np.array_equal(with_header.points, without.points)
    assert not with_header.has_outputs
    labelled = parse_dataset_csv("a,b,y\n0.1,0.2,0.5\n")
    assert labelled.outputs.tolist() == [0.5]
    assert parse_dataset_csv("0.1,0.2\n", has_outputs=True).outputs.tolist() == [0.2]
    assert parse_dataset_csv("3,4\n").lambda_x == 5.0


@pytest.mark.parametrize("text, row", [
    ("x_1,y\n0.1,0.2\n0.2,0.7\n", "row 3"),
    ("0.1,0.2\n0.3\n", "row 2"),
    ("x,y\n0.1,abc\n", "row 2"),
    ("x\nnan\n", "row 2"),
])
def test_csv_errors_name_row(text, row):
    with pytest.raises(DataError, match=row):
        parse_dataset_csv(text)


def test_csv_other_errors():
    for text in ["", "x_1,y\n"]:
        with pytest.raises(DataError):
            parse_dataset_csv(text)
    with pytest.raises(DataError):
        parse_dataset_csv("3,4\n", lambda_x=1.0)


def test_model_file_round_trip(tmp_path, rng):
    X = rng.standard_normal((6, 2))
    from mcrisk import KernelComponent, KernelModel, SubspaceModel
    from mcrisk.learners import random_basis
    models = [
        CenterModel(rng.standard_normal((3, 2))),
        SubspaceModel((random_basis(4, 2, rng), random_basis(4, 1, rng))),
        KernelModel(KernelSpec("gaussian", gamma=0.5),
                    (KernelComponent(X[:3], rng.standard_normal(3)), KernelComponent(X[3:], [1.0, 0, 2]))),
    ]
    for i, m in enumerate(models):
        path = tmp_path / f"m{i}.json"
        save_model(m, path)
        back = load_model(path)
        Z = rng.standard_normal((5, X.shape[1] if i != 1 else 4))
        if i == 2:
            np.testing.assert_array_equal(back.predict(Z), m.predict(Z))
        else:
            assert empirical_risk(back, Dataset(Z)) == empirical_risk(m, Dataset(Z))
    (tmp_path / "bad.json").write_text('{"type": "nope"}')
    with pytest.raises(DataError):
        load_model(tmp_path / "bad.json")


# -- alpha table -------------------------------------------------------------


def test_alpha_table_rows():
    rows = alpha_table([2, 100], [1, "inf", 0.5])
    by = {(r["C"], r["p"]): r for r in rows}
    assert by[(100, 1.0)]["alpha"] == pytest.approx(5.60517018598809136804, rel=1e-15)
    assert by[(100, "inf")]["alpha"] == 100.0
    assert all(r["sum_le_alpha"] for r in rows)
    with pytest.raises(DomainError):
        alpha_table([1], [1])


# -- configuration -----------------------------------------------------------

CONFIG = """
[experiment]
problem = subspace
n_train = 30
n_eval = 300
trials = 3
seed = 9
probe_models = 4
rademacher_draws = 100

[generator]
d = 4
C = 2
dims = 2, 1

[constraint]
p = inf
"""


def test_parse_config_defaults_and_auto_lambda():
    cfg = parse_config(CONFIG)
    assert cfg.constraint.p == INF and cfg.constraint.lam == pytest.approx(math.sqrt(2))
    assert cfg.fit.dims == [2, 1] and cfg.n_eval == 300
    d = cfg.to_dict()
    assert d["constraint"]["p"] == "inf"


@pytest.mark.parametrize("text", [
    "[experiment]\nproblem = clustering\nn_train = 100\nn_eval = 500\n",
    "[experiment]\nproblem = clustering\nbogus = 1\n",
    "[mystery]\n",
    "[experiment]\nproblem = clustering\n[fit]\nC = 1\n",
    "[generator]\nd = 2\n",
])
def test_parse_config_rejects(text):
    with pytest.raises(DomainError):
        parse_config(text)


# -- verification ------------------------------------------------------------


def test_verification_small_run_deterministic(tmp_path):
    cfg = parse_config(CONFIG)
    a, b = run_verification(cfg), run_verification(cfg)
    assert canonical_json(a.to_dict()) == canonical_json(b.to_dict())
    assert a.trials == 3 and a.probe_evaluations == 12
    for r in a.records:
        for cert in r["certificates"].values():
            assert cert["total"] >= r["empirical_risk"]
    assert set(a.records[0]["certificates"]) == {"thm4", "thm5", "lemma1"}
    assert not a.any_violation
    emit_report(a, tmp_path / "r.json")
    emit_report(a, tmp_path / "r.csv", "csv")
    assert json.loads((tmp_path / "r.json").read_text())["summary"]["trials"] == 3
    assert (tmp_path / "r.csv").read_text().startswith("trial,")


def test_verification_independent_of_workers():
    cfg = make_config("clustering", p=2, C=2, d=2, n_train=20, n_eval=200, trials=2,
                      rademacher_draws=50)
    serial = run_verification(cfg)
    parallel = run_verification(cfg.with_overrides(workers=2))
    assert canonical_json(serial.records) == canonical_json(parallel.records)


def test_tightening_p_sparse_complexity_vector():
    # one active component: the tightest lambda is the same for every p, so the
    # complexity terms follow alpha, which decreases from inf to 2 to 1 once C >= 4
    omega = np.array([0.8, 0.0, 0.0, 0.0, 0.0])
    C = len(omega)
    prev = None
    for p in [INF, 2, 1]:
        c = LpConstraint(p, lp_norm(omega, p))
        terms = (thm1_bound(0, 50.0, c, C, 0.05, 50).complexity_term,
                 thm2_bound(0, 50.0, c, C, 1.0, 0.05, 50).complexity_term,
                 thm5_bound(0, 7.0, c, C, 1.0, 0.05, 50).complexity_term)
        if prev is not None:
            assert all(t <= q for t, q in zip(terms, prev))
        prev = terms


def test_tightening_p_balanced_counterexample():
    # all-equal complexities: lam grows from 1 to C as p goes from inf to 1
    C = 4
    inf_term = alpha(C, INF) * lp_norm(np.ones(C), INF)
    one_term = alpha(C, 1) * lp_norm(np.ones(C), 1)
    assert one_term > inf_term


# -- CLI ---------------------------------------------------------------------


def write_config(tmp_path, text=CONFIG):
    path = tmp_path / "exp.ini"
    path.write_text(text)
    return str(path)


def test_cli_pipeline(tmp_path, capsys):
    cfg = write_config(tmp_path)
    data = str(tmp_path / "train.csv")
    model = str(tmp_path / "model.json")
    assert main(["generate", "--config", cfg, "--n", "40", "--seed", "4", "--out", data]) == 0
    assert main(["fit", data, "--config", cfg, "--out", model]) == 0
    assert main(["certify", model, data, "--config", cfg, "--draws", "100"]) == 0
    certs = json.loads(capsys.readouterr().out)
    assert {"thm4", "thm5", "lemma1"} <= set(certs)
    assert main(["certify", model, data, "--config", cfg, "--format", "text"]) == 0
    assert "theorem = thm5" in capsys.readouterr().out
    assert main(["rademacher", data, "--class", "subspace", "--dim", "2", "--draws", "200"]) == 0
    assert json.loads(capsys.readouterr().out)["within_bound"]
    assert main(["rademacher", data, "--class", "cluster", "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("class,")
    out = str(tmp_path / "report.json")
    assert main(["verify", "--config", cfg, "--trials", "2", "--out", out]) == 0
    assert json.loads(open(out).read())["summary"]["trials"] == 2
    assert main(["alpha-table", "--C", "2,8", "--p", "1,inf"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("C,p,alpha") and len(lines) == 5


def test_cli_generate_without_config(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["generate", "--problem", "switching", "--n", "10", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "x_1,x_2,x_3,y"


def test_cli_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 1
    assert main(["fit", "missing.csv"]) == 1
    cfg = write_config(tmp_path)
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0.1,0.9\n")
    assert main(["fit", str(bad), "--config", cfg]) == 2
    assert main(["fit", str(tmp_path / "absent.csv"), "--config", cfg]) == 2
    assert main(["rademacher", str(bad), "--class", "subspace"]) == 2
    good = tmp_path / "good.csv"
    good.write_text("x_1,x_2\n0.1,0.2\n")
    assert main(["rademacher", str(good), "--class", "subspace"]) == 1
    capsys.readouterr()


def test_cli_verify_violation_exit_code(tmp_path, monkeypatch):
    import mcrisk.cli as cli

    class Fake:
        any_violation = True
        violation_counts = {"thm5": 1}
        probe_violation_counts = {"thm5": 0}
        trials = 1
        probe_evaluations = 0

        def to_dict(self):
            return {}

        def flat_rows(self):
            return []

    monkeypatch.setattr(cli, "run_verification", lambda config: Fake())
    assert main(["verify", "--config", write_config(tmp_path), "--out", str(tmp_path / "r.json")]) == 3
