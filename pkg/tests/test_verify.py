import numpy as np
import pytest
import scipy.optimize
from conftest import build_spec

from rosseland.assemble import (DiscreteField, constant_field, eval_field,
                                residual)
from rosseland.baselines import pinned
from rosseland.presets import (blowup_problem, mms_template,
                               oscillatory_1d_problem, reference_problem,
                               rosseland_1d_problem, sinusoid)
from rosseland.problem import checkerboard, constant, replace
from rosseland.verify import (brute_force_1d, convergence_study, epsilon_sweep,
                              holder_diagnostic, interior_gradient_experiment,
                              linf_bound_check, mesh_for, mms_problem,
                              solve_from_floor, uniqueness_probe, with_zero_order,
                              write_report)


def test_mms_constant_exact_gives_zero_source():
    tmpl = mms_template(linear=True, with_robin=False)
    man = mms_problem(lambda x: np.full(len(np.atleast_2d(x)), 1.5), tmpl, 1024)
    pts = np.random.default_rng(0).uniform(0.1, 0.9, (50, 2))
    assert np.max(np.abs(man.f(None, pts, None))) <= 1e-8


def test_mms_laplacian_closed_form():
    tmpl = replace(mms_template(linear=True, with_robin=False), k=constant(1.0))
    exact = sinusoid(1.5, 0.25)
    man = mms_problem(exact, tmpl, 1024)
    pts = np.random.default_rng(1).uniform(0.05, 0.95, (100, 2))
    ref = 0.5 * np.pi ** 2 * np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])
    assert np.max(np.abs(man.f(None, pts, None) - ref)) <= 1e-6


def test_mms_rejects_exact_outside_interval():
    tmpl = mms_template(linear=True, with_robin=False)
    with pytest.raises(ValueError):
        mms_problem(sinusoid(1.5, 2.0), tmpl, 256)


def test_convergence_constant_exact_branch():
    tmpl = mms_template(linear=True, with_robin=False)
    exact = lambda x: np.full(len(np.atleast_2d(x)), 1.5)
    man = mms_problem(exact, tmpl, 512)
    report = convergence_study(man, exact, (4, 8))
    assert report.verdict == "Pass"
    assert all(r["l2_error"] <= 1e-10 for r in report.tables["errors"])


def test_convergence_rosseland_mms():
    exact = sinusoid(1.5, 0.25)
    man = mms_problem(exact, mms_template(linear=False), 2048)
    report = convergence_study(man, exact, (8, 16, 32))
    assert report.verdict == "Pass"
    order = report.tables["fit"][0]["order"]
    assert abs(order - 2.0) <= 0.2


def test_linf_bound_negative_case():
    spec = blowup_problem()
    run = solve_from_floor(mesh_for(spec, (16, 16)), spec)
    out = linf_bound_check(run, spec)
    assert out.verdict == "Fail"
    assert out.tables["bound"][0]["status"] == "ClampSaturated"


def test_uniqueness_probe_linear_problem():
    spec = build_spec(k=checkerboard(0.5, 2.0), epsilon=0.25, s=1.0,
                      alpha=1.0, robin="left right top")
    mesh = mesh_for(spec, (8, 8))
    report = uniqueness_probe(mesh, spec, 3, seed=1, lambda_ladder=(0.0, 10.0),
                              cg_tol=1e-13)
    assert report.verdict == "Pass"
    for row in report.tables["spread_vs_lambda"]:
        assert row["spread"] <= 1e-10


def test_uniqueness_probe_reference_ladder():
    spec = reference_problem()
    mesh = mesh_for(spec, (16, 16))
    report = uniqueness_probe(mesh, spec, 4, seed=0)
    assert report.verdict == "Pass"
    rows = {row["lambda"]: row["spread"] for row in report.tables["spread_vs_lambda"]}
    assert set(rows) == {0.0, 1.0, 10.0, 100.0}
    assert rows[100.0] <= 10 * 1e-8


@pytest.mark.filterwarnings("ignore::rosseland.assemble.QuadratureResolutionWarning")
def test_with_zero_order_keeps_solution_physical():
    spec = with_zero_order(reference_problem(), 100.0)
    run = solve_from_floor(mesh_for(spec, (8, 8)), spec)
    assert run.converged
    assert run.final_clamp_fraction == 0.0


def test_epsilon_sweep_trivial_when_period_absent():
    spec = build_spec(k=constant(1.0), b=constant(1.0), s=0.0,
                      u_b=1.2, u_gas=1.2, alpha=1.0, robin="left right top")
    report = epsilon_sweep(spec, (0.25, 0.125), 4, cg_tol=1e-12)
    assert report.verdict == "Pass"
    for row in report.tables["differences"]:
        assert row["diff_max"] <= 1e-10


def test_epsilon_sweep_reference_pinned():
    spec = reference_problem()
    report = epsilon_sweep(spec, (0.25, 0.125, 0.0625), 4)
    assert report.verdict == "Pass"
    for row in report.tables["sweep"]:
        value, tol = pinned("sweep", f"max_norm_eps{row['eps']!r}")
        assert abs(row["max_norm"] - value) <= tol


def test_interior_gradient_eps_free_coefficient():
    spec = build_spec(k=constant(1.0), s=1.0, u_b=1.0, u_gas=1.0)
    report = interior_gradient_experiment(spec, (0.25, 0.125), 0.25)
    assert report.verdict == "Pass"
    ratio = report.tables["summary"][0]["interior_ratio"]
    assert abs(ratio - 1.0) <= 0.02


def test_interior_gradient_requires_b_zero():
    with pytest.raises(ValueError):
        interior_gradient_experiment(reference_problem(), (0.25,), 0.25)


def test_holder_diagnostic_closed_forms(rng):
    spec = build_spec()
    mesh = mesh_for(spec, (12, 12))
    const = constant_field(mesh, 1.0)
    assert holder_diagnostic(const, 0.5) == 0.0

    linear = DiscreteField(mesh, mesh.vertices[:, 0])
    semi = holder_diagnostic(linear, 0.5)
    assert semi <= np.sqrt(2.0) + 1e-12
    assert semi >= 0.99


def test_holder_sampling_reproducible():
    spec = reference_problem()
    mesh = mesh_for(spec, (48, 48))   # above the all-pairs cutoff
    run = solve_from_floor(mesh, spec)
    a = holder_diagnostic(run.final_field, 0.3, seed=7)
    b = holder_diagnostic(run.final_field, 0.3, seed=7)
    assert a == b


def test_holder_trend_pinned():
    spec = reference_problem()
    values = []
    for d in (16, 32, 64):
        run = solve_from_floor(mesh_for(spec, (d, d)), spec)
        semi = holder_diagnostic(run.final_field, 0.3, seed=0)
        value, tol = pinned("holder", f"beta0.3_div{d}")
        assert abs(semi - value) <= tol
        values.append(semi)
    assert max(values) <= 1.5 * min(values)


def test_brute_force_matches_kirchhoff_closed_form():
    # k = b = 1, m = 3, f = 0: the flux a(u) u' is constant, so the
    # transformed variable u + u^4 is affine; the Robin end temperature
    # solves t^4 + 2 t - 3.5 = 0
    spec = rosseland_1d_problem()
    oracle = brute_force_1d(spec, 2000)
    t_end = scipy.optimize.brentq(lambda t: t ** 4 + 2 * t - 3.5, 1.0, 1.5,
                                  xtol=1e-14)
    assert oracle.values[-1] == pytest.approx(t_end, abs=5e-7)
    x = oracle.mesh.vertices[:, 0]
    phi = oracle.values + oracle.values ** 4
    fitted = np.polyfit(x, phi, 1)
    assert np.max(np.abs(np.polyval(fitted, x) - phi)) <= 1e-5


def test_fem_vs_oracle_1d_pinned():
    spec = rosseland_1d_problem()
    run = solve_from_floor(mesh_for(spec, (256,)), spec, cg_tol=1e-12)
    assert run.converged
    oracle = brute_force_1d(spec, 8192)
    diff = np.max(np.abs(run.final_field.values
                         - eval_field(oracle, run.final_field.mesh.vertices)))
    assert diff <= 5e-4
    value, tol = pinned("oracle1d", "rosseland_max_diff")
    assert abs(diff - value) <= tol


def test_fem_vs_oracle_oscillatory_1d():
    spec = oscillatory_1d_problem(0.125)
    run = solve_from_floor(mesh_for(spec, (512,)), spec, cg_tol=1e-12)
    assert run.converged
    oracle = brute_force_1d(spec, 8192)
    diff = np.max(np.abs(run.final_field.values
                         - eval_field(oracle, run.final_field.mesh.vertices)))
    assert diff <= 1e-3


def test_discrete_maximum_principle():
    ramp = lambda x: 1.0 + 0.4 * np.atleast_2d(x)[:, 0]
    spec = build_spec(k=checkerboard(0.5, 2.0), b=checkerboard(0.1, 0.4),
                      epsilon=0.25, u_b=ramp)
    mesh = mesh_for(spec, (12, 12))
    run = solve_from_floor(mesh, spec)
    assert run.converged
    boundary = np.unique(mesh.facets)
    interior = np.setdiff1d(np.arange(mesh.num_vertices), boundary)
    u = run.final_field.values
    assert u[interior].max() <= u[boundary].max() + 1e-10
    assert u[interior].min() >= u[boundary].min() - 1e-10


def test_monotone_data_response_linear():
    mesh = None
    fields = []
    for s in (0.5, 1.0):
        spec = build_spec(k=checkerboard(0.5, 2.0), epsilon=0.25, s=s,
                          u_b=1.0, u_gas=1.0, alpha=1.0, robin="top")
        mesh = mesh_for(spec, (10, 10))
        run = solve_from_floor(mesh, spec, cg_tol=1e-13)
        assert run.converged
        fields.append(run.final_field.values)
    assert np.all(fields[1] >= fields[0] - 1e-10)


@pytest.mark.filterwarnings("ignore::rosseland.assemble.QuadratureResolutionWarning")
def test_experiment_report_files(tmp_path):
    spec = reference_problem()
    run = solve_from_floor(mesh_for(spec, (8, 8)), spec)
    report = linf_bound_check(run, spec)
    csv_path, verdict_path = write_report(report, tmp_path, metadata=("seed=0",))
    lines = open(csv_path).read().splitlines()
    assert lines[0] == "# seed=0"
    assert lines[1] == "table,row,key,value"
    assert any(line.startswith("bound,0,field_max,") for line in lines)
    assert open(verdict_path).read().splitlines()[0] == "Pass"


def test_mms_residual_after_convergence():
    exact = sinusoid(1.5, 0.25)
    man = mms_problem(exact, mms_template(linear=False), 2048)
    mesh = mesh_for(man, (32, 32))
    run = solve_from_floor(mesh, man)
    assert run.converged
    assert residual(mesh, man, run.final_field) <= 1e-8
