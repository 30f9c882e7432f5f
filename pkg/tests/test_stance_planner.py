"""Stance-space tree search: transitions, memoization, seeded determinism."""

import numpy as np
import pytest

from locoplan.balance import Contact, Stance, stance_feasible
from locoplan.errors import InvalidArgument, NotFound
from locoplan.stance_planner import (
    REJECT_COLLISION,
    REJECT_DUPLICATE,
    REJECT_IK,
    PlanStats,
    StancePlannerParams,
    StanceTree,
    StanceVertex,
    expand_step,
    extract_solution,
    generate_transition,
    plan_stances,
)
from locoplan.wholebody import contact_residual
from locoplan.world import Disc, Obstacle, WorldState

from conftest import GRAVITY, Q0_BIPED

L = Contact("foot_l", (-0.1, 0.0), (0.0, 1.0), 0.6)
R = Contact("foot_r", (0.1, 0.0), (0.0, 1.0), 0.6)
R_FWD = Contact("foot_r", (0.35, 0.0), (0.0, 1.0), 0.6)
BOTH = Stance([L, R])
LEFT = Stance([L])
GOAL = Stance([L, R_FWD])


def test_trivial_plan_when_start_is_goal(biped, ground_world):
    res = plan_stances(biped, ground_world, BOTH, Q0_BIPED, BOTH, seed=0)
    assert res.success
    assert len(res.S_sigma) == 1 and res.S_sigma[0] == BOTH
    assert res.stats.iterations == 0
    assert res.stats.solution_stances == 1
    assert np.allclose(res.S_q[0], Q0_BIPED)


def test_biped_step_plan_shape(biped, ground_world):
    res = plan_stances(biped, ground_world, BOTH, Q0_BIPED, GOAL, seed=0)
    assert res.success
    assert len(res.S_sigma) == 3
    assert res.S_sigma[0] == BOTH
    assert res.S_sigma[1].end_effectors() == ("foot_l",)
    assert res.S_sigma[2] == GOAL
    for a, b in zip(res.S_sigma, res.S_sigma[1:]):
        assert a.sym_diff_count(b) == 1
    for st, q in zip(res.S_sigma, res.S_q):
        r = contact_residual(biped, q, st)
        assert np.linalg.norm(r, ord=np.inf) <= 1e-6
        assert stance_feasible(biped, q, st, GRAVITY)
        assert biped.within_limits(q)
    for st, w in zip(res.S_sigma, res.S_W):
        assert set(w.forces) == set(st.end_effectors())


def test_plan_determinism(biped, ground_world):
    a = plan_stances(biped, ground_world, BOTH, Q0_BIPED, GOAL, seed=3)
    b = plan_stances(biped, ground_world, BOTH, Q0_BIPED, GOAL, seed=3)
    assert a.success and b.success
    assert len(a.S_q) == len(b.S_q)
    for qa, qb in zip(a.S_q, b.S_q):
        assert qa.tobytes() == qb.tobytes()
    assert a.stats.iterations == b.stats.iterations
    assert a.stats.tree_vertices == b.stats.tree_vertices


def test_plan_stats_consistency(biped, ground_world):
    res = plan_stances(biped, ground_world, BOTH, Q0_BIPED, GOAL, seed=1)
    s = res.stats
    assert s.planning_time >= s.transition_time >= 0.0
    assert s.tree_vertices >= len(res.S_sigma)
    assert 0 < s.iterations <= StancePlannerParams().max_iters
    d = s.to_dict()
    assert set(d) == {
        "planning_time_s",
        "transition_time_s",
        "iterations",
        "tree_vertices",
        "solution_stances",
    }


def test_transition_fixed_point(biped, ground_world):
    res, reason = generate_transition(biped, ground_world, BOTH, BOTH, Q0_BIPED)
    assert reason is None
    q, w = res
    assert np.allclose(q, Q0_BIPED, atol=1e-9)
    assert set(w.forces) == {"foot_l", "foot_r"}


def test_transition_shifts_com_over_support(biped, ground_world):
    res, reason = generate_transition(biped, ground_world, BOTH, LEFT, Q0_BIPED)
    assert reason is None
    q, _ = res
    fk = biped.fk(q)
    # single-point support forces the com over the remaining foot
    assert abs(fk.com()[0] - (-0.1)) <= 1e-6
    assert np.linalg.norm(fk.point("foot_l") - [-0.1, 0.0]) <= 1e-6
    assert np.linalg.norm(fk.point("foot_r") - [0.1, 0.0]) <= 1e-6


def test_transition_rejections(biped, ground_world, ground):
    far = Stance([L, Contact("foot_r", (10.0, 0.0), (0.0, 1.0), 0.6)])
    res, reason = generate_transition(biped, ground_world, LEFT, far, Q0_BIPED)
    assert res is None and reason == REJECT_IK

    blocked = WorldState(
        surfaces=[ground],
        obstacles=[Obstacle("blk", Disc((-0.1, 0.62), 0.25))],
    )
    res, reason = generate_transition(biped, blocked, BOTH, LEFT, Q0_BIPED)
    assert res is None and reason == REJECT_COLLISION


def test_transition_rejects_wide_stance_change(biped, ground_world):
    with pytest.raises(InvalidArgument):
        generate_transition(biped, ground_world, Stance(), BOTH, Q0_BIPED)


def test_expand_step_goal_bias_and_memo(biped, ground_world):
    params = StancePlannerParams(p_goal=1.0)
    root = StanceVertex(BOTH, Q0_BIPED.copy(), None, None)

    tree = StanceTree()
    tree.add(root)
    rng = np.random.default_rng(0)
    vid, reason, dt = expand_step(tree, biped, ground_world, GOAL, rng, params, GRAVITY)
    assert reason is None and vid == 1
    assert tree.vertices[1].stance.end_effectors() == ("foot_l",)
    assert dt >= 0.0

    # same nearest vertex, same candidate: memo rejects without ik work
    tree2 = StanceTree()
    tree2.add(root)
    tree2.attempted.add((0, LEFT.signature()))
    vid, reason, dt = expand_step(
        tree2, biped, ground_world, GOAL, np.random.default_rng(0), params, GRAVITY
    )
    assert vid is None and reason == REJECT_DUPLICATE and dt == 0.0
    assert tree2.rejections[REJECT_DUPLICATE] == 1


def test_no_duplicate_tree_vertices(biped, ground_world):
    res = plan_stances(biped, ground_world, BOTH, Q0_BIPED, GOAL, seed=5)
    assert res.success
    # reconstruct the tree by replanning has no API; instead verify the
    # solution itself never repeats a stance
    sigs = [s.signature() for s in res.S_sigma]
    assert len(sigs) == len(set(sigs))


def test_root_validation(biped, ground_world, ground):
    q_bad = Q0_BIPED.copy()
    q_bad[0] += 0.5  # feet no longer at the stance contacts
    with pytest.raises(InvalidArgument):
        plan_stances(biped, ground_world, BOTH, q_bad, GOAL, seed=0)

    with pytest.raises(InvalidArgument):
        # empty stance cannot hold the robot up under gravity
        plan_stances(biped, ground_world, Stance(), Q0_BIPED, GOAL, seed=0)

    blocked = WorldState(
        surfaces=[ground],
        obstacles=[Obstacle("blk", Disc((0.0, 0.6), 0.3))],
    )
    with pytest.raises(InvalidArgument):
        plan_stances(biped, blocked, BOTH, Q0_BIPED, GOAL, seed=0)


def test_free_float_empty_stances(wheeler):
    q = np.array([0.0, 0.0, 0.0, 2.0, -2.5, 1.0])
    res = plan_stances(wheeler, WorldState(), Stance(), q, Stance(), seed=0, gravity=(0, 0))
    assert res.success and len(res.S_sigma) == 1
    assert len(res.S_W[0]) == 0


def test_extract_solution_paths(biped):
    tree = StanceTree()
    tree.add(StanceVertex(BOTH, Q0_BIPED.copy(), None, None))
    S_sigma, S_q, S_W = extract_solution(tree, 0)
    assert len(S_sigma) == 1 and S_sigma[0] == BOTH
    # returned arrays are copies
    S_q[0][0] = 99.0
    assert tree.vertices[0].q[0] != 99.0
    with pytest.raises(NotFound):
        extract_solution(tree, 5)


def test_budget_exhaustion_failure(biped, ground_world):
    res = plan_stances(
        biped,
        ground_world,
        BOTH,
        Q0_BIPED,
        GOAL,
        StancePlannerParams(max_iters=1, p_goal=0.0),
        seed=0,
    )
    if not res.success:
        assert res.failure == "iteration budget exhausted"
        assert res.S_sigma is None
        assert res.stats.iterations == 1


def test_plan_stats_default():
    s = PlanStats()
    assert s.planning_time == 0.0 and s.solution_stances == 0
