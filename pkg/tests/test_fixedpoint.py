import numpy as np
import pytest
from conftest import build_spec

from rosseland.assemble import DiscreteField, constant_field
from rosseland.baselines import pinned
from rosseland.fixedpoint import (IterationStatus, UnboundedGrowthError, clamp,
                                  discover_T_star, picard_step, solve_nonlinear,
                                  write_iteration_csv)
from rosseland.linsolve import cg_solve
from rosseland.assemble import assemble_system
from rosseland.presets import (blowup_problem, pure_robin_ladder_problem,
                               reference_problem)
from rosseland.problem import checkerboard, make_source, replace
from rosseland.verify import mesh_for, solve_from_floor


@pytest.fixture(scope="module")
def ref():
    spec = reference_problem()
    return spec, mesh_for(spec, (16, 16))


def test_clamp(rng):
    spec = build_spec()
    mesh = mesh_for(spec, (4, 4))
    inside = DiscreteField(mesh, rng.uniform(1.0, 1.4, mesh.num_vertices))
    assert np.array_equal(clamp(inside, 1.0, 2.0).values, inside.values)

    wild = DiscreteField(mesh, np.linspace(-3.0, 7.0, mesh.num_vertices))
    c = clamp(wild, 1.0, 2.0)
    assert c.values.min() == 1.0 and c.values.max() == 2.0

    v = DiscreteField(mesh, rng.normal(size=mesh.num_vertices))
    once = clamp(v, 0.2, 0.8)
    assert np.array_equal(clamp(once, 0.2, 0.8).values, once.values)


def test_picard_step_fixed_point_consistency(ref):
    spec, mesh = ref
    run = solve_from_floor(mesh, spec)
    assert run.converged
    again, _ = picard_step(mesh, spec, run.final_field)
    assert np.max(np.abs(again.values - run.final_field.values)) <= 2e-8


def test_picard_step_constant_for_linear_map(ref):
    _, mesh = ref
    spec = build_spec(k=checkerboard(0.5, 2.0), epsilon=0.25, s=1.0,
                      alpha=1.0, robin="left right top")
    v1 = constant_field(mesh, spec.T_min)
    v2 = constant_field(mesh, spec.T_star)
    u1, _ = picard_step(mesh, spec, v1, cg_tol=1e-13)
    u2, _ = picard_step(mesh, spec, v2, cg_tol=1e-13)
    assert np.max(np.abs(u1.values - u2.values)) <= 1e-10


def test_contraction_factor_pinned(ref):
    spec, mesh = ref
    v0 = constant_field(mesh, spec.T_min)
    u1, _ = picard_step(mesh, spec, v0)
    u2, _ = picard_step(mesh, spec, u1)
    rho = np.max(np.abs(u2.values - u1.values)) / np.max(np.abs(u1.values - v0.values))
    value, tol = pinned("picard", "contraction_factor_div16")
    assert rho < 1.0
    assert abs(rho - value) <= tol


def test_linear_case_single_solve_exactness(ref):
    _, mesh = ref
    spec = build_spec(k=checkerboard(0.5, 2.0), epsilon=0.25, s=1.0,
                      alpha=1.0, robin="left right top")
    system = assemble_system(mesh, spec, constant_field(mesh, spec.T_min))
    single, _ = cg_solve(system, tol=1e-13)
    run = solve_from_floor(mesh, spec, cg_tol=1e-13)
    assert run.converged
    # the map is constant: one real solve plus a zero-cost confirmation step
    assert len(run.steps) <= 2
    assert run.steps[-1].solve_stats.iterations == 0
    assert np.max(np.abs(run.final_field.values - single.values)) <= 1e-12


def test_constant_data_gives_constant_field(rng):
    spec = build_spec(u_b=1.2, u_gas=1.2, alpha=1.5, robin="left top")
    mesh = mesh_for(spec, (8, 8))
    v0 = DiscreteField(mesh, rng.uniform(spec.T_min, spec.T_star,
                                         mesh.num_vertices))
    run = solve_nonlinear(mesh, spec, v0)
    assert run.converged
    assert np.max(np.abs(run.final_field.values - 1.2)) < 1e-8


def test_reference_configuration_pinned(ref):
    spec, mesh = ref
    run = solve_from_floor(mesh, spec)
    assert run.converged
    assert len(run.steps) <= 30
    steps_value, steps_tol = pinned("picard", "reference_steps_div16")
    assert abs(len(run.steps) - steps_value) <= steps_tol
    max_value, max_tol = pinned("picard", "reference_max_div16")
    assert abs(run.final_field.values.max() - max_value) <= max_tol
    assert run.final_residual <= 1e-8
    assert run.final_clamp_fraction == 0.0

    # brute-force cross-check: heavy damping reaches the same fixed point
    slow = solve_from_floor(mesh, spec, damping=0.25, max_steps=200,
                            update_tol=1e-10)
    assert slow.converged
    assert np.max(np.abs(slow.final_field.values
                         - run.final_field.values)) <= 1e-6


def test_interval_invariance_of_iterates(ref):
    spec, mesh = ref
    run = solve_from_floor(mesh, spec)
    assert run.final_field.values.min() >= spec.T_min
    assert run.final_field.values.max() <= spec.T_star


def test_damping_consistency(ref):
    spec, mesh = ref
    full = solve_from_floor(mesh, spec, damping=1.0)
    half = solve_from_floor(mesh, spec, damping=0.5)
    assert full.converged and half.converged
    assert np.max(np.abs(full.final_field.values
                         - half.final_field.values)) <= 10 * 1e-8


def test_clamp_saturation_detected():
    spec = blowup_problem()
    mesh = mesh_for(spec, (16, 16))
    run = solve_from_floor(mesh, spec)
    assert run.status is IterationStatus.CLAMP_SATURATED
    assert all(s.clamp_fraction >= 0.5 for s in run.steps[-5:])


def test_max_steps_exceeded(ref):
    spec, mesh = ref
    run = solve_from_floor(mesh, spec, max_steps=2)
    assert run.status is IterationStatus.MAX_STEPS
    assert len(run.steps) == 2


def test_discover_t_star_reference(ref):
    spec, mesh = ref
    T = discover_T_star(mesh, spec)
    assert T == pinned("tstar", "reference_accepted_T")[0]
    # huge T_max: ceiling never active, accepted at the first rung
    roomy = replace(spec, T_max=50.0, T_star=50.0)
    assert discover_T_star(mesh, roomy) == 50.0
    run = solve_from_floor(mesh, roomy)
    assert all(s.clamp_fraction == 0.0 for s in run.steps)


def test_discover_t_star_climbs():
    spec = pure_robin_ladder_problem()
    mesh = mesh_for(spec, (16, 16))
    T = discover_T_star(mesh, spec, max_steps=80)
    value, _ = pinned("tstar", "pure_robin_accepted_T")
    assert T == value
    assert T / spec.T_max >= 2.0  # climbed at least once


def test_discover_t_star_exhaustion():
    spec = pure_robin_ladder_problem()
    f, fb = make_source(2000.0, 0.0, spec.interval())
    hot = replace(spec, f=f, f_bounds=fb)
    mesh = mesh_for(hot, (8, 8))
    with pytest.raises(UnboundedGrowthError) as err:
        discover_T_star(mesh, hot, max_steps=40)
    assert len(err.value.maxima) == 8


def test_iteration_csv(tmp_path, ref):
    spec, mesh = ref
    run = solve_from_floor(mesh, spec)
    path = tmp_path / "iters.csv"
    write_iteration_csv(run, path, metadata=("seed=0",))
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=0"
    assert lines[1] == "step,update_norm,residual,clamp_fraction,cg_iters"
    assert len(lines) == 2 + len(run.steps)
    first = lines[2].split(",")
    assert int(first[0]) == 1
    float(first[1]), float(first[2]), float(first[3]), int(first[4])


def test_divergence_guard():
    # a nearly empty interval makes the divergence limit small enough for a
    # single large linear-solve jump to trip it
    spec = build_spec(u_b=0.5, u_gas=0.5, s=5.0, T_min=0.5,
                      T_max=0.5 + 1e-7, T_star=0.5 + 1e-7)
    mesh = mesh_for(spec, (8, 8))
    run = solve_from_floor(mesh, spec)
    assert run.status is IterationStatus.DIVERGED
