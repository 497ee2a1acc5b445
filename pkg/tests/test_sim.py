import math

import numpy as np
import pytest

from prif.sim import (GroupSpec, Scenario, apply_axis, build_trace, desk_preset,
                      paper_preset, run, run_sweep, scenario_from_ini)
from prif.sim import kernels, mobility
from prif.sim.trace import assign_interests, build_plan

MB = 1024 * 1024


def mini_scenario(**kw):
    groups = (
        GroupSpec("walkers", 8, (1.0, 2.0), (10.0, 30.0), 80.0, 2e6),
        GroupSpec("cars", 8, (3.0, 8.0), (10.0, 30.0), 80.0, 2e6),
        GroupSpec("buses", 2, (7.0, 10.0), (10.0, 30.0), 150.0, 10e6,
                  generates_messages=False),
    )
    base = Scenario(area=(800.0, 600.0), groups=groups, interests=2,
                    duration=4000.0, warmup=300.0, buffer_bytes=3 * MB,
                    message_interval=(20.0, 40.0), seed=5)
    return base.with_overrides(**kw)


def stationary_legs(points):
    """Leg arrays for nodes parked at fixed positions."""
    n = len(points)
    off = np.arange(n + 1, dtype=np.int64)
    zeros = np.zeros(n)
    xs = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    return mobility.LegArrays(leg_off=off, t0=zeros.copy(), x0=xs, y0=ys,
                              x1=xs, y1=ys, vx=zeros.copy(), vy=zeros.copy(),
                              tarr=zeros.copy())


# ---------------------------------------------------------------------------
# kernels: numba and numpy paths must agree exactly
# ---------------------------------------------------------------------------

class TestKernels:
    def _random_legs(self, seed=0, n_nodes=12):
        lo = np.full(n_nodes, 1.0)
        hi = np.full(n_nodes, 9.0)
        return mobility.build_itineraries((500.0, 400.0), lo, hi,
                                          np.full(n_nodes, 5.0),
                                          np.full(n_nodes, 20.0),
                                          2000.0, seed)

    def test_env_flag_parsing(self, monkeypatch):
        monkeypatch.setenv("PRIF_NO_NUMBA", "1")
        assert kernels.numba_disabled_by_env()
        monkeypatch.setenv("PRIF_NO_NUMBA", "")
        assert not kernels.numba_disabled_by_env()

    @pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable")
    def test_positions_parity(self):
        legs = self._random_legs(seed=3)
        ticks = np.arange(0.0, 2000.0, 1.0)
        args = (legs.leg_off, legs.t0, legs.x0, legs.y0, legs.x1, legs.y1,
                legs.vx, legs.vy, legs.tarr, ticks)
        a = kernels.positions_numpy(*args)
        b = kernels.positions_numba(*args)
        assert np.array_equal(a, b)

    @pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable")
    def test_transitions_parity(self):
        legs = self._random_legs(seed=4)
        ticks = np.arange(0.0, 2000.0, 1.0)
        pos = kernels.positions_numpy(legs.leg_off, legs.t0, legs.x0, legs.y0,
                                      legs.x1, legs.y1, legs.vx, legs.vy,
                                      legs.tarr, ticks)
        minr2 = mobility.min_range_matrix(np.full(12, 60.0))
        adj = np.zeros((12, 12), dtype=bool)
        out_np = kernels.transitions_numpy(pos, minr2, adj.copy())
        out_nb = kernels.transitions_numba(pos, minr2, adj.copy())
        for a, b in zip(out_np, out_nb):
            assert np.array_equal(a, b)
        assert out_np[0].size > 0, "want a non-trivial transition stream"

    @pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable")
    def test_full_trace_identical_across_paths(self, monkeypatch):
        sc = mini_scenario(duration=1500.0)
        monkeypatch.setattr(kernels, "USE_NUMBA", True)
        t1 = build_trace(sc)
        monkeypatch.setattr(kernels, "USE_NUMBA", False)
        t2 = build_trace(sc)
        assert t1.contacts == t2.contacts
        assert t1.plan == t2.plan


# ---------------------------------------------------------------------------
# mobility semantics
# ---------------------------------------------------------------------------

class TestMobility:
    def test_unit_speed_displacement(self):
        # one node moving at exactly 1 m/s: 30 s -> 30 m toward waypoint
        legs = mobility.LegArrays(
            leg_off=np.array([0, 1], dtype=np.int64),
            t0=np.array([0.0]), x0=np.array([0.0]), y0=np.array([0.0]),
            x1=np.array([100.0]), y1=np.array([0.0]),
            vx=np.array([1.0]), vy=np.array([0.0]), tarr=np.array([100.0]))
        p0 = mobility.positions_at(legs, 10.0)
        p1 = mobility.positions_at(legs, 40.0)
        assert math.hypot(*(p1 - p0)[0]) == pytest.approx(30.0)

    def test_arrival_clamps_to_waypoint(self):
        legs = mobility.LegArrays(
            leg_off=np.array([0, 1], dtype=np.int64),
            t0=np.array([0.0]), x0=np.array([0.0]), y0=np.array([0.0]),
            x1=np.array([10.0]), y1=np.array([0.0]),
            vx=np.array([1.0]), vy=np.array([0.0]), tarr=np.array([10.0]))
        assert mobility.positions_at(legs, 10.0)[0].tolist() == [10.0, 0.0]
        assert mobility.positions_at(legs, 500.0)[0].tolist() == [10.0, 0.0]

    def test_positions_stay_in_bounds(self):
        n = 15
        legs = mobility.build_itineraries(
            (300.0, 200.0), np.full(n, 1.0), np.full(n, 10.0),
            np.full(n, 5.0), np.full(n, 50.0), 5000.0, seed=8)
        pos = mobility.positions_at(legs, np.arange(0.0, 5000.0, 7.0))
        assert pos[..., 0].min() >= 0.0 and pos[..., 0].max() <= 300.0
        assert pos[..., 1].min() >= 0.0 and pos[..., 1].max() <= 200.0

    def test_itineraries_deterministic_per_node(self):
        n = 6
        args = ((300.0, 200.0), np.full(n, 1.0), np.full(n, 10.0),
                np.full(n, 5.0), np.full(n, 50.0), 1000.0)
        a = mobility.build_itineraries(*args, seed=4)
        b = mobility.build_itineraries(*args, seed=4)
        assert np.array_equal(a.t0, b.t0) and np.array_equal(a.x1, b.x1)


# ---------------------------------------------------------------------------
# contact detection thresholds
# ---------------------------------------------------------------------------

class TestContactThresholds:
    def _active_pairs(self, points, ranges):
        legs = stationary_legs(points)
        minr2 = mobility.min_range_matrix(np.asarray(ranges, dtype=np.float64))
        pos = mobility.positions_at(legs, np.array([0.0]))
        tt, ii, jj, started, adj = kernels.transitions_numpy(
            pos, minr2, np.zeros((len(points), len(points)), dtype=bool))
        return {(int(i), int(j)) for i, j, s in zip(ii, jj, started) if s}

    def test_pedestrians_at_9m_in_contact(self):
        assert self._active_pairs([(0, 0), (9, 0)], [10.0, 10.0]) == {(0, 1)}

    def test_pedestrian_bus_at_50m_uses_min_rule(self):
        assert self._active_pairs([(0, 0), (50, 0)], [10.0, 100.0]) == set()

    def test_buses_at_99m_in_contact(self):
        assert self._active_pairs([(0, 0), (99, 0)], [100.0, 100.0]) == {(0, 1)}

    def test_threshold_inclusive(self):
        assert self._active_pairs([(0, 0), (10, 0)], [10.0, 10.0]) == {(0, 1)}


# ---------------------------------------------------------------------------
# scenario population and validation
# ---------------------------------------------------------------------------

class TestScenario:
    def test_paper_population(self):
        assert paper_preset().n_nodes == 166

    def test_desk_population(self):
        assert desk_preset().n_nodes == 63

    def test_zero_groups_rejected(self):
        with pytest.raises(ValueError, match="at least one node group"):
            Scenario(groups=()).validate()

    def test_bad_router_rejected(self):
        with pytest.raises(ValueError, match="unknown router"):
            mini_scenario(router="hotpotato").validate()

    def test_warmup_must_precede_end(self):
        with pytest.raises(ValueError, match="warmup"):
            mini_scenario(warmup=5000.0, duration=4000.0).validate()

    def test_interest_assignment_uniform_mode(self):
        sc = mini_scenario()
        interests = assign_interests(sc)
        assert interests.shape == (18,)
        assert set(interests.tolist()) <= {0, 1}

    def test_bus_own_community_mode(self):
        sc = mini_scenario(bus_community_mode="own")
        interests = assign_interests(sc)
        assert all(interests[i] == 2 for i in range(16, 18))
        assert all(interests[i] < 2 for i in range(16))

    def test_ini_matches_preset(self):
        assert scenario_from_ini("configs/desk.ini") == desk_preset()
        assert scenario_from_ini("configs/paper.ini") == paper_preset()

    def test_ini_unknown_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[scenario]\nbogus_key = 1\n")
        with pytest.raises(ValueError, match="unknown scenario keys"):
            scenario_from_ini(bad)


# ---------------------------------------------------------------------------
# trace construction
# ---------------------------------------------------------------------------

class TestTrace:
    def test_contacts_well_formed(self):
        trace = build_trace(mini_scenario())
        for c in trace.contacts:
            assert 0.0 <= c.start < c.end <= 4000.0
            assert c.a < c.b

    def test_no_overlapping_contacts_per_pair(self):
        trace = build_trace(mini_scenario())
        by_pair = {}
        for c in trace.contacts:
            by_pair.setdefault((c.a, c.b), []).append((c.start, c.end))
        for intervals in by_pair.values():
            intervals.sort()
            for (s1, e1), (s2, e2) in zip(intervals, intervals[1:]):
                assert e1 <= s2

    def test_plan_respects_generation_rules(self):
        sc = mini_scenario()
        trace = build_trace(sc)
        assert trace.plan, "mini scenario should generate traffic"
        bus_ids = {16, 17}
        lo, hi = sc.message_size
        for p in trace.plan:
            assert p.source not in bus_ids
            assert p.source != p.destination
            assert lo <= p.size_bytes <= hi
            assert sc.warmup < p.t <= sc.duration

    def test_plan_interarrival_range(self):
        sc = mini_scenario()
        plan = build_plan(sc, assign_interests(sc))
        times = [sc.warmup] + [p.t for p in plan]
        for t1, t2 in zip(times, times[1:]):
            assert 20.0 <= t2 - t1 <= 40.0

    def test_per_node_arrival_mode(self):
        sc = mini_scenario(arrival_mode="per-node")
        plan = build_plan(sc, assign_interests(sc))
        by_src = {}
        for p in plan:
            by_src.setdefault(p.source, []).append(p.t)
        # every generating node runs its own arrival process
        assert len(by_src) == 16
        for times in by_src.values():
            seq = [sc.warmup] + times
            for t1, t2 in zip(seq, seq[1:]):
                assert 20.0 <= t2 - t1 <= 40.0
        assert [p.msg_id for p in plan] == sorted(p.msg_id for p in plan)
        rep = run(sc)
        assert rep.created == len(plan)


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------

class TestRun:
    def test_two_node_forced_meeting(self):
        groups = (GroupSpec("a", 1, (1.0, 1.5), (5.0, 10.0), 500.0, 2e6),
                  GroupSpec("b", 1, (1.0, 1.5), (5.0, 10.0), 500.0, 2e6))
        sc = Scenario(area=(50.0, 50.0), groups=groups, interests=1,
                      duration=500.0, warmup=10.0, buffer_bytes=10 * MB,
                      message_interval=(30.0, 60.0), seed=2)
        rep = run(sc)
        assert rep.created > 0
        assert rep.delivery_ratio == 1.0
        assert rep.avg_hop_count == 1.0

    def test_zero_delivery_sentinel(self):
        groups = (GroupSpec("a", 2, (1.0, 1.5), (5.0, 10.0), 0.001, 2e6),
                  GroupSpec("b", 2, (1.0, 1.5), (5.0, 10.0), 0.001, 2e6))
        sc = Scenario(area=(5000.0, 5000.0), groups=groups, interests=1,
                      duration=400.0, warmup=10.0, buffer_bytes=10 * MB,
                      message_interval=(30.0, 60.0), seed=2)
        rep = run(sc)
        assert rep.created > 0 and rep.delivered == 0
        assert rep.overhead_defined is False
        assert rep.overhead_ratio == float(rep.relayed)

    @pytest.mark.parametrize("router", ["prif", "prif-noprivacy",
                                        "epidemic", "prophet"])
    def test_conservation(self, router):
        rep = run(mini_scenario(router=router))
        parts = (rep.delivered + rep.expired + rep.dropped
                 + rep.buffered_at_end + rep.rejected)
        assert parts == rep.created

    def test_determinism_same_seed(self):
        sc = mini_scenario(seed=77)
        assert run(sc).to_dict() == run(sc).to_dict()

    def test_different_seeds_differ(self):
        a = run(mini_scenario(seed=1))
        b = run(mini_scenario(seed=2))
        assert a.to_dict() != b.to_dict()

    def test_oversize_message_rejected_and_counted(self):
        sc = mini_scenario(buffer_bytes=500_000,
                           message_size=(600_000, 700_000))
        rep = run(sc)
        assert rep.created > 0
        assert rep.rejected == rep.created
        assert rep.delivered == 0

    def test_instant_antipacket_mode(self):
        rep_g = run(mini_scenario(antipacket_mode="gossip"))
        rep_i = run(mini_scenario(antipacket_mode="instant"))
        parts = (rep_i.delivered + rep_i.expired + rep_i.dropped
                 + rep_i.buffered_at_end + rep_i.rejected)
        assert parts == rep_i.created
        # instant discard can only reduce duplicate transfers
        assert rep_i.duplicates <= rep_g.duplicates

    def test_forward_and_delete_mode(self):
        rep = run(mini_scenario(forward_and_delete=True))
        parts = (rep.delivered + rep.expired + rep.dropped
                 + rep.buffered_at_end + rep.rejected)
        assert parts == rep.created

    def test_charge_handshake_bytes_runs(self):
        rep = run(mini_scenario(charge_handshake_bytes=True))
        assert rep.created > 0

    def test_trace_lines_schema(self):
        lines = []
        run(mini_scenario(), trace_lines=lines)
        assert lines
        kinds = set()
        for line in lines:
            parts = line.split()
            assert len(parts) == 5
            float(parts[0])
            kinds.add(parts[1])
        assert "create" in kinds and "contact_start" in kinds
        assert "deliver" in kinds


class TestSweep:
    def test_single_value_single_report(self):
        reports = run_sweep(mini_scenario(), "buffer", [3.0], [5])
        assert len(reports) == 1
        assert reports[0].axis == "buffer" and reports[0].axis_value == 3.0

    def test_row_counts_and_order(self):
        reports = run_sweep(mini_scenario(), "buffer", [1.0, 3.0], [5, 6, 7])
        assert len(reports) == 6
        keys = [(r.axis_value, r.seed) for r in reports]
        assert keys == sorted(keys)

    def test_ttl_axis_reuses_trace_consistently(self):
        r1 = run_sweep(mini_scenario(), "ttl", [600.0], [5])[0]
        r2 = run(apply_axis(mini_scenario(), "ttl", 600.0).with_overrides(seed=5))
        assert r1.delivery_ratio == r2.delivery_ratio

    def test_time_axis_changes_duration(self):
        reports = run_sweep(mini_scenario(), "time", [1000.0, 4000.0], [5])
        assert reports[0].created < reports[1].created

    def test_unknown_axis_rejected(self):
        with pytest.raises(ValueError, match="unknown sweep axis"):
            run_sweep(mini_scenario(), "voltage", [1.0], [5])

    def test_parallel_workers_match_sequential(self):
        args = (mini_scenario(), "buffer", [1.0, 3.0], [5, 6])
        seq = [r.to_dict() for r in run_sweep(*args, jobs=1)]
        par = [r.to_dict() for r in run_sweep(*args, jobs=2)]
        assert seq == par


class TestPaperScale:
    def test_paper_preset_runs_at_short_horizon(self):
        # full-population geometry (166 nodes, 10 m radios) on a short clock
        sc = paper_preset(seed=4).with_overrides(duration=3000.0, warmup=200.0)
        rep = run(sc)
        assert rep.created > 0
        parts = (rep.delivered + rep.expired + rep.dropped
                 + rep.buffered_at_end + rep.rejected)
        assert parts == rep.created
