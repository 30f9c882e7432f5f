"""End-to-end acceptance checks.

Each test exercises one external contract of the toolkit and prints a
single [PASS]/[FAIL] line with the measured numbers. Oracles here are
independent re-derivations (finite differences, dense linear algebra,
force grids, lateral-offset dynamic programming), never the code under
test evaluated twice.
"""

import io
import statistics
import threading
import time

import numpy as np
import pytest

from conftest import GRAVITY, Q0_BIPED, record_criterion, record_lines
from test_balance import flat_stance, grid_feasible, rig
from test_graph import fd_edge_jacobian, fd_gradient, hinge_margins, point_graph
from test_sim import line_setup
from test_solver import tracking_graph

from locoplan.balance import (
    Contact,
    Stance,
    is_balanced,
    solve_contact_wrenches,
    stance_feasible,
)
from locoplan.cli import _stats_row, print_stats_table
from locoplan.fixtures import load_fixture
from locoplan.graph import BlockMatrix, build_graph
from locoplan.pipeline import plan_scenario
from locoplan.scenario import load_scenario
from locoplan.sim import SimService, strip_wall_times
from locoplan.solver import lm_step
from locoplan.validate import validate_solution
from locoplan.wholebody import contact_residual, time_parameterize
from locoplan.world import ContactSurface, Disc, Obstacle, WorldState, signed_distance


def test_assembled_derivatives_match_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    checked = 0
    max_rel = 0.0
    max_jac = 0.0
    seed = 0
    while checked < 50:
        seed += 1
        g = point_graph(n=12, fixed=[True] + [False] * 10 + [True], seed=seed)
        if np.min(hinge_margins(g)) < 1e-3:
            continue
        active = {e.kind for e in g.edges if np.linalg.norm(g.edge_residual(e)) > 0}
        if not {"tracking", "collision", "velocity"} <= active:
            continue
        _, b, _ = g.assemble()
        fd = fd_gradient(g)
        max_rel = max(max_rel, np.linalg.norm(b - fd) / max(1.0, np.linalg.norm(fd)))
        for edge in g.edges:
            # finite differences need to move every member vertex
            if any(g.vertices[t].fixed for t in edge.vertices):
                continue
            for Ja, Jf in zip(g.edge_jacobian(edge), fd_edge_jacobian(g, edge)):
                if Ja.size:
                    max_jac = max(max_jac, float(np.max(np.abs(Ja - Jf))))
        checked += 1

    # a point robot has no joints and no contacts, so joint-limit and
    # balance derivatives need the biped for active coverage
    biped = load_fixture("planar-biped-7dof")
    world = WorldState(
        surfaces=[ContactSurface("ground", (-1, 0), (2, 0), (0, 1), 0.6)],
        obstacles=[Obstacle("d", Disc((0.3, 0.55), 0.2))],
    )
    stance = Stance([
        Contact("foot_l", (-0.1, 0.0), (0.0, 1.0), 0.6),
        Contact("foot_r", (0.1, 0.0), (0.0, 1.0), 0.6),
    ])
    lean = np.array([0.0, 0.0, 0.0, 0.6, 0.0, 0.6, 0.0])
    jl_push = np.zeros(7)
    jl_push[3] = 2.65  # hip_l from its rest -0.35 to 2.3, past the 2.2 limit
    jac_active = {k: 0 for k in ("tracking", "joint_limit", "velocity", "collision", "balance")}
    trials = 0
    while min(jac_active.values()) < 3 and trials < 200:
        trials += 1
        configs = [Q0_BIPED + rng.uniform(-0.1, 0.1, 7) for _ in range(3)]
        if trials % 3 == 1:
            configs[1] = Q0_BIPED + lean + rng.uniform(-0.05, 0.05, 7)
        if trials % 3 == 2:
            configs[2] = Q0_BIPED + jl_push + rng.uniform(-0.05, 0.05, 7)
        g = build_graph(configs, biped, world, stance, GRAVITY, [Q0_BIPED] * 3, 0.05)
        if np.min(hinge_margins(g)) < 1e-3:
            continue
        bal = [g._vdata(t)["bal"][0] for t in range(3)]
        if not any(0 < v < 1e-3 for v in bal):
            _, b, _ = g.assemble()
            fd = fd_gradient(g)
            max_rel = max(max_rel, np.linalg.norm(b - fd) / max(1.0, np.linalg.norm(fd)))
        for edge in g.edges:
            if edge.kind == "balance" and 0 < bal[edge.vertices[0]] < 1e-3:
                continue
            for Ja, Jf in zip(g.edge_jacobian(edge), fd_edge_jacobian(g, edge)):
                if Ja.size:
                    max_jac = max(max_jac, float(np.max(np.abs(Ja - Jf))))
            r = g.edge_residual(edge)
            if r.size and np.linalg.norm(r) > 0:
                jac_active[edge.kind] += 1
    elapsed = time.perf_counter() - t0
    ok = (
        checked == 50
        and max_rel <= 1e-5
        and max_jac <= 1e-5
        and all(v >= 3 for v in jac_active.values())
        and elapsed < 10.0
    )
    record_criterion(
        "gradient and edge jacobians match finite differences",
        ok,
        f"{checked} point graphs, active biped edges {jac_active}, "
        f"max rel grad err {max_rel:.2e}, max jac err {max_jac:.2e}, {elapsed:.1f}s",
    )


def test_damped_step_solves_normal_equations_exactly():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(60):
        nb = int(rng.integers(1, 7))
        blk = int(rng.integers(1, 5))
        H = BlockMatrix(nb, blk)
        for i in range(nb):
            A = rng.normal(size=(blk, 2 * blk))
            H.ensure(i, i)[...] += A @ A.T + 0.1 * np.eye(blk)
            if i + 1 < nb:
                C = 0.1 * rng.normal(size=(blk, blk))
                H.ensure(i, i + 1)[...] += C
                H.ensure(i + 1, i)[...] += C.T
        b = rng.normal(size=H.size)
        lam = float(rng.uniform(0.0, 1.0))
        d = lm_step(H, b, lam)
        r = np.linalg.norm(H.matvec(d) + lam * d + b)
        worst = max(worst, r / (1 + np.linalg.norm(b)))

    g = tracking_graph(np.array([0.7, -0.4]))
    _, b, H = g.assemble()
    g.set_free_flat(g.free_flat() + lm_step(H, b, 0.0))
    dev = max(
        float(np.max(np.abs(g.config(t) - g.q_ref[t]))) for t in range(g.n_vertices)
    )
    ok = worst <= 1e-10 and dev <= 1e-12
    record_criterion(
        "damped normal equations solved to tolerance; quadratic case one-shot",
        ok,
        f"worst residual ratio {worst:.2e} over 60 systems, quadratic deviation {dev:.2e}",
    )


def test_hessian_sparsity_matches_edge_structure():
    rng = np.random.default_rng(7)
    graphs_checked = 0
    for trial in range(20):
        n = int(rng.integers(3, 9))
        fixed = [bool(rng.uniform() < 0.3) for _ in range(n)]
        g = point_graph(n=n, fixed=fixed, seed=trial + 50)
        _, _, H = g.assemble()
        free_ids = [t for t in range(n) if not fixed[t]]
        col = {t: k for k, t in enumerate(free_ids)}
        expected = set()
        for e in g.edges:
            members = [col[t] for t in e.vertices if t in col]
            for i in members:
                for j in members:
                    expected.add((i, j))
        assert H.pattern() == expected, trial
        graphs_checked += 1

    # a 20-vertex window assembles into a block-tridiagonal band whose
    # banded factorization agrees with the dense solve
    g = point_graph(n=20, fixed=[False] * 20, seed=11)
    _, b, H = g.assemble()
    nblk = g.model.n
    band_ok = H.bandwidth() == 2 * nblk - 1
    off_diag_ok = all(abs(i - j) <= 1 for i, j in H.pattern())
    lam = 0.3
    dense = np.zeros((H.size, H.size))
    for (i, j), blk in H.blocks.items():
        dense[i * nblk:(i + 1) * nblk, j * nblk:(j + 1) * nblk] = blk
    d_banded = lm_step(H, b, lam)
    d_dense = np.linalg.solve(dense + lam * np.eye(H.size), -b)
    agree = float(np.max(np.abs(d_banded - d_dense)))
    ok = graphs_checked == 20 and band_ok and off_diag_ok and agree <= 1e-9
    record_criterion(
        "hessian block pattern equals edge co-membership; window solve is banded",
        ok,
        f"20 randomized patterns exact, bandwidth {H.bandwidth()} == {2 * nblk - 1}, "
        f"banded vs dense step gap {agree:.2e}",
    )


def test_refiner_is_a_fixed_point_on_clear_straight_plans():
    scenario = load_scenario("wheeler_straight")
    result = plan_scenario(scenario, seed=0)
    assert result.success
    sim = SimService(scenario, result.motions).run()
    ticks = [r for r in sim.records if r["record"] == "tick"]
    all_noop = all(r["noop"] for r in ticks)
    endpoint = np.asarray(sim.records[-1]["endpoint"])
    disp = endpoint[:2] - scenario.task.q_init[:2]
    gap = float(np.max(np.abs(disp - np.array([4.0, 0.0]))))
    ok = sim.terminal and all_noop and gap <= 1e-9
    record_criterion(
        "straight clear plan: every tick a no-op, endpoint displacement (4,0)",
        ok,
        f"{len(ticks)} ticks all noop={all_noop}, displacement error {gap:.1e}",
    )


def lateral_grid_oracle(model, world, ref, dt, weights, offsets):
    """Exact minimum of F over per-vertex lateral offsets of the reference.

    Unary terms (tracking, collision, joint margins) depend on one vertex,
    the velocity hinge couples neighbours, so dynamic programming over the
    offset grid is exact for this family. Endpoints stay at zero offset.
    """
    vmax = model.velocity_limits()
    lo_j, up_j = model.joint_lower(), model.joint_upper()
    bd = model.base_dof
    n = len(ref)

    def shifted(t, o):
        c = ref[t].copy()
        c[1] += o
        return c

    def unary(t, o):
        c = shifted(t, o)
        f = weights.tracking * float(o * o)
        fk = model.fk(c)
        for sph, center in fk.sphere_centers():
            d, _ = signed_distance(world, center)
            e = max(0.0, weights.clearance - (d - sph.radius))
            f += weights.collision * e * e
        qj = c[bd:]
        e_up = np.maximum(0.0, qj - (up_j - weights.margin_joint))
        e_lo = np.maximum(0.0, (lo_j + weights.margin_joint) - qj)
        f += weights.joint_limit * float(e_up @ e_up + e_lo @ e_lo)
        return f

    def pair(t, o, o2):
        rate = np.abs(shifted(t + 1, o2) - shifted(t, o)) / dt
        e = np.maximum(0.0, rate - vmax)
        return weights.velocity * float(e @ e)

    allowed = [np.array([0.0]) if t in (0, n - 1) else offsets for t in range(n)]
    best = np.array([unary(0, o) for o in allowed[0]])
    for t in range(1, n):
        P = np.array([[pair(t - 1, a, b) for b in allowed[t]] for a in allowed[t - 1]])
        U = np.array([unary(t, o) for o in allowed[t]])
        best = U + np.min(best[:, None] + P, axis=0)
    return float(best.min())


def test_midrun_obstacle_is_cleared_within_window_bounds():
    t0 = time.perf_counter()
    scenario = load_scenario("wheeler_obstacle")
    result = plan_scenario(scenario, seed=0)
    assert result.success
    sim = SimService(scenario, result.motions)

    eps = sim.params.refiner.weights.clearance
    outside_ok = True
    min_clear = float("inf")
    while not sim.terminal:
        before = [q.tobytes() for q in sim.refiner.published]
        sim.step()
        rec = sim.last_tick_record
        min_clear = min(min_clear, rec["clearance"])
        lo, hi = rec["window"]
        after = sim.refiner.published
        for k in range(len(after)):
            if k < lo or k >= hi:
                if after[k].tobytes() != before[k]:
                    outside_ok = False

    clear_ok = min_clear >= eps - 1e-6

    world = sim.world
    w = sim.params.refiner.effective_weights()
    ref = [q.copy() for q in sim.refiner.state.q_ref]
    pub = [q.copy() for q in sim.refiner.published]
    n = len(pub)
    g = build_graph(
        pub, scenario.robot, world, Stance(), scenario.gravity, ref,
        sim.configs_dt, w, [t in (0, n - 1) for t in range(n)],
    )
    f_final = g.cost()
    f_oracle = lateral_grid_oracle(
        scenario.robot, world, ref, sim.configs_dt, w, np.linspace(-0.7, 0.7, 21)
    )
    elapsed = time.perf_counter() - t0
    ok = (
        sim.terminal
        and clear_ok
        and outside_ok
        and f_final <= f_oracle + 1e-6
        and elapsed < 60.0
    )
    record_criterion(
        "scripted obstacle: clearance held, edits stay inside the window, "
        "final cost beats the offset-grid oracle",
        ok,
        f"min clearance {min_clear:.4f} >= {eps - 1e-6:.4f}, outside window "
        f"byte-identical={outside_ok}, F {f_final:.4f} <= oracle {f_oracle:.4f}, {elapsed:.1f}s",
    )


def test_refine_tick_latency_under_load():
    scenario = load_scenario("wheeler_straight")
    result = plan_scenario(scenario, seed=0)
    sim = SimService(scenario, result.motions)
    # a disc hovering in the clearance band keeps the window cost above the
    # no-op threshold, so the refiner solves on every tick it is nearby;
    # repositioning it along the route keeps the solver engaged end to end
    edits = {
        10: {"action": "add", "id": "drift", "shape": Disc((1.0, 0.43), 0.25)},
        120: {"action": "move", "id": "drift", "shape": Disc((1.9, 0.43), 0.25)},
        240: {"action": "move", "id": "drift", "shape": Disc((2.8, 0.43), 0.25)},
        330: {"action": "move", "id": "drift", "shape": Disc((3.6, 0.43), 0.25)},
    }
    samples = []
    while not sim.terminal:
        if sim.tick + 1 in edits:
            sim.enqueue(edits[sim.tick + 1])
        sim.step()
        rec = sim.last_tick_record
        if not rec["noop"]:
            samples.append(rec["refine_ms"])
    med = statistics.median(samples)
    p95 = float(np.percentile(samples, 95))
    ok = len(samples) >= 200 and med <= 70.0 and p95 <= 70.0
    record_criterion(
        "window refine tick stays under 70 ms",
        ok,
        f"{len(samples)} solve ticks of {sim.tick}, "
        f"median {med:.1f} ms, p95 {p95:.1f} ms",
    )


def test_offline_planner_success_rate_and_validity():
    rows = []
    all_ok = True
    details = []
    for name in ("biped_step", "standup"):
        scenario = load_scenario(name)
        stats = []
        validated = 0
        for seed in range(100):
            result = plan_scenario(scenario, seed=seed)
            if not result.success:
                continue
            report = validate_solution(scenario, result.motions, result.stance_solution)
            if report["ok"]:
                validated += 1
            stats.append(result.stats.to_dict())
        successes = len(stats)
        mean = {k: statistics.fmean(s[k] for s in stats) for k in stats[0]} if stats else {}
        rows.append(_stats_row(name, mean))
        scenario_ok = successes >= 95 and validated == successes
        all_ok = all_ok and scenario_ok
        details.append(f"{name}: {successes}/100 success, {validated} validated")
    buf = io.StringIO()
    print_stats_table(rows, out=buf)
    record_criterion(
        "offline planner: 100 seeded runs per task, >=95 valid solutions",
        all_ok,
        "; ".join(details),
    )
    record_lines(buf.getvalue().splitlines())


def test_balance_solver_against_force_grid_oracle():
    mg = 9.81
    # symmetric two-contact stance splits the weight evenly
    model = rig([(-0.2, 0.0), (0.2, 0.0)], com=(0.0, 0.5))
    st = flat_stance([-0.2, 0.2], [0.6, 0.6])
    W = solve_contact_wrenches(model, np.zeros(2), st, GRAVITY)
    split = abs(W.normal("c0") - W.normal("c1"))
    tang = max(abs(W.tangential("c0")), abs(W.tangential("c1")))
    sym_ok = W is not None and split <= 1e-9 * mg and tang <= 1e-9

    # frictionless contacts cannot hold a com outside the support
    model2 = rig([(-0.2, 0.0), (0.2, 0.0)], com=(0.5, 0.5))
    st2 = flat_stance([-0.2, 0.2], [0.0, 0.0])
    outside_ok = not is_balanced(model2, np.zeros(2), st2, GRAVITY)

    rng = np.random.default_rng(424242)
    margin = 0.05
    agree = 0
    flips = 0
    for _ in range(1000):
        k = int(rng.integers(1, 3))
        while True:
            xs = np.sort(rng.uniform(-1.0, 1.0, k))
            if k == 1 or np.min(np.diff(xs)) > 0.02:
                break
        if rng.uniform() < 0.5 and k > 1 and xs[-1] - xs[0] > 2 * margin:
            cx = rng.uniform(xs[0] + margin, xs[-1] - margin)
        elif k == 1 and rng.uniform() < 0.5:
            cx = xs[0]
        else:
            side = 1.0 if rng.uniform() < 0.5 else -1.0
            edge = xs[-1] if side > 0 else xs[0]
            cx = edge + side * rng.uniform(margin, 0.6)
        x_new = rng.uniform(-1.5, 1.5)
        while min(abs(x_new - x) for x in xs) < 0.02 or abs(x_new - cx) < margin:
            x_new = rng.uniform(-1.5, 1.5)
        mus = rng.uniform(0.0, 1.0, k + 1)
        pts = [(x, 0.0) for x in xs] + [(x_new, 0.0)]
        m = rig(pts, com=(cx, rng.uniform(0.2, 1.0)))
        st_small = flat_stance(xs, mus[:k])
        st_big = st_small.with_contact(
            Contact(f"c{k}", (x_new, 0.0), (0.0, 1.0), float(mus[k]))
        )
        got = is_balanced(m, np.zeros(2), st_small, GRAVITY)
        got_big = is_balanced(m, np.zeros(2), st_big, GRAVITY)
        if got == grid_feasible(xs, cx, 1.0) and got_big == grid_feasible(
            list(xs) + [x_new], cx, 1.0
        ):
            agree += 1
        if got and not got_big:
            flips += 1
    ok = sym_ok and outside_ok and agree == 1000 and flips == 0
    record_criterion(
        "balance: even split, infeasible outside support, grid-oracle agreement",
        ok,
        f"split gap {split:.1e}, tangential {tang:.1e}, "
        f"{agree}/1000 oracle matches, {flips} monotonicity flips",
    )


def test_planned_motions_keep_all_knot_contracts():
    knots_checked = 0
    worst_res = 0.0
    worst_rate = 0.0
    balanced_ok = True
    plans = []
    for name, seeds in (("biped_step", range(3)), ("standup", range(3)),
                        ("wheeler_obstacle", range(1))):
        scenario = load_scenario(name)
        for seed in seeds:
            result = plan_scenario(scenario, seed=seed)
            assert result.success, (name, seed)
            plans.append((scenario, result))
    for scenario, result in plans:
        model = scenario.robot
        vmax = model.velocity_limits()
        for motion in result.motions:
            for q in motion.knots:
                res = contact_residual(model, q, motion.stance)
                if res.size:
                    worst_res = max(worst_res, float(np.abs(res).max()))
                if not stance_feasible(model, q, motion.stance, scenario.gravity):
                    balanced_ok = False
                knots_checked += 1
            for k in range(len(motion.knots) - 1):
                span = motion.timestamps[k + 1] - motion.timestamps[k]
                if span <= 0:
                    continue
                rate = np.abs(motion.knots[k + 1] - motion.knots[k]) / span
                worst_rate = max(worst_rate, float(np.max(rate - vmax)))

    # the slowest scaled dof must exactly saturate every segment
    rng = np.random.default_rng(5)
    biped = load_fixture("planar-biped-7dof")
    binding_gap = 0.0
    for _ in range(20):
        path = [Q0_BIPED + rng.uniform(-0.2, 0.2, 7) for _ in range(5)]
        times, _ = time_parameterize(path, biped, 0.8)
        limits = 0.8 * biped.velocity_limits()
        for k in range(4):
            seg = times[k + 1] - times[k]
            peak = float(np.max(np.abs(path[k + 1] - path[k]) / limits))
            binding_gap = max(binding_gap, abs(peak - seg) / max(1.0, seg))
    ok = (
        worst_res <= 1e-6
        and balanced_ok
        and worst_rate <= 1e-9
        and binding_gap <= 1e-12
    )
    record_criterion(
        "whole-body motions: contacts held, balance kept, rates within limits",
        ok,
        f"{knots_checked} knots, max contact residual {worst_res:.1e}, "
        f"max rate excess {worst_rate:.1e}, binding gap {binding_gap:.1e}",
    )


def test_headless_runs_are_reproducible():
    scenario = load_scenario("wheeler_obstacle")
    result = plan_scenario(scenario, seed=0)
    a = SimService(scenario, result.motions, seed=1).run()
    b = SimService(scenario, result.motions, seed=1).run()
    same = strip_wall_times(a.records) == strip_wall_times(b.records)
    record_criterion(
        "identical scenario+seed reproduce the run log modulo wall times",
        same,
        f"{len(a.records)} records compared",
    )


def test_live_api_session_matches_headless_script():
    fastapi = pytest.importorskip("fastapi")
    from fastapi.testclient import TestClient

    from locoplan.service import build_app

    scenario, motions = line_setup(duration=2.0, n_disc=5, span=1.0)
    live = SimService(scenario, motions)
    client = TestClient(build_app(live))
    stop = threading.Event()
    loop = threading.Thread(
        target=live.run, kwargs={"realtime": True, "stop": stop}, daemon=True
    )
    loop.start()
    try:
        while live.tick < 20:
            time.sleep(0.005)
        # in the clearance band of the reference line but not colliding
        body = {"action": "add", "id": "placed",
                "shape": {"type": "disc", "center": [0.5, 0.18], "radius": 0.05}}
        t0 = time.perf_counter()
        assert client.post("/obstacle", json=body).status_code == 200
        latency = None
        while time.perf_counter() - t0 < 2.0:
            ids = [o["id"] for o in client.get("/state").json()["obstacles"]]
            if "placed" in ids:
                latency = time.perf_counter() - t0
                break
            time.sleep(0.002)
        while not live.terminal:
            time.sleep(0.01)
    finally:
        stop.set()
        loop.join(timeout=5.0)

    event = next(r for r in live.records if r["record"] == "event")
    twin = SimService(scenario, motions)
    while twin.tick < event["tick"] - 1:
        twin.step()
    twin.enqueue({"action": "add", "id": "placed", "shape": Disc((0.5, 0.18), 0.05)})
    twin.run()

    same = strip_wall_times(live.records) == strip_wall_times(twin.records)
    ok = same and latency is not None and latency < 0.2
    record_criterion(
        "secondary: live http edit matches scripted run, visible within 200 ms",
        ok,
        f"runlogs identical={same}, state latency "
        f"{(latency if latency is not None else float('nan')) * 1e3:.0f} ms "
        f"(edit at tick {event['tick']})",
    )
