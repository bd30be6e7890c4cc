import math
import random
import time

import pytest
from hypothesis import given, strategies as st

from streetsim.errors import LostTarget, ProviderError
from streetsim.geo import Pose, angular_offset, haversine_distance, initial_bearing
from streetsim.perception.active import active_detect
from streetsim.perception.camera import BBox, project, render_view, surround_poses
from streetsim.perception.dedup import deduplicate
from streetsim.perception.matching import match_proposal, match_proposal_to_place
from streetsim.perception.providers import (NoisyDetector, ObjectProposal, OracleDetector, OracleMatcher,
                                            PerceptionProviderConfig, SimulatedMatcher, detect)
from streetsim.providers.http import HttpProvider
from streetsim.providers.server import MockProviderServer

from helpers import brute_match, make_world, place, random_scene

# -- camera


def test_halving_fov_doubles_box_width():
    wide = project(0.0, 20.0, 4.0, 8.0, 120.0)
    narrow = project(0.0, 20.0, 4.0, 8.0, 60.0)
    assert narrow.w == pytest.approx(2 * wide.w)
    assert narrow.h == pytest.approx(2 * wide.h)


def test_box_shrinks_with_distance():
    assert project(0, 10, 4, 8, 90).area > project(0, 20, 4, 8, 90).area


def _single_place_world(x, y):
    return make_world({"o": (0, 0), "e": (20, 0)}, [("o", "e")], places=[place("p1", "cafe", (x, y))])


def test_offset_visible_only_inside_fov():
    # place 50 deg right of north, 20 m out
    w = _single_place_world(20 * math.sin(math.radians(50)), 20 * math.cos(math.radians(50)))
    wide = render_view(w, "o", Pose(heading=0, fov=120))
    narrow = render_view(w, "o", Pose(heading=0, fov=90))
    assert [e.entity_id for e in wide.entities] == ["p1"]
    assert narrow.entities == ()
    assert wide.entities[0].bbox.cx == pytest.approx(0.5 + 50 / 120, abs=1e-3)


def test_out_of_range_not_rendered():
    w = _single_place_world(0, 80)
    assert render_view(w, "o", Pose(0, fov=90), visibility_range=50).entities == ()


def test_surround_poses_cover_circle():
    poses = surround_poses(10.0, count=3, fov=120)
    assert [p.heading for p in poses] == [10.0, 130.0, 250.0]


def _brute_visible(w, node_id, pose, rng_m):
    origin = w.nodes[node_id].coord
    cand = [(pid, p.coord) for pid, p in w.places.items()] + \
        [(oid, o.coord) for oid, o in w.instances.items()]
    buckets = {}
    for eid, c in cand:
        d = haversine_distance(origin, c)
        if 0.5 <= d <= rng_m:
            b = initial_bearing(origin, c)
            k = int(b // 1) % 360
            if k not in buckets or (d, eid) < buckets[k][:2]:
                buckets[k] = (d, eid, b)
    return {eid for d, eid, b in buckets.values() if abs(angular_offset(pose.heading, b)) <= pose.fov / 2}


def test_render_matches_brute_force_on_100_views(big_world):
    rng = random.Random(4)
    ids = sorted(big_world.nodes)
    for _ in range(100):
        n = rng.choice(ids)
        pose = Pose(heading=rng.uniform(0, 360), fov=rng.uniform(20, 120))
        got = {e.entity_id for e in render_view(big_world, n, pose).entities}
        assert got == _brute_visible(big_world, n, pose, 50.0)


# -- providers


def test_oracle_detector_returns_requested_categories(big_world):
    n = sorted(big_world.nodes)[17]
    view = render_view(big_world, n, Pose(0, fov=120))
    cats = sorted({e.category for e in view.entities})
    if cats:
        out = detect(view, cats[:1], OracleDetector())
        assert {p.entity_id for p in out} == {e.entity_id for e in view.entities if e.category == cats[0]}
        assert all(p.score == 1.0 for p in out)


def test_noisy_detector_is_deterministic_and_size_dependent():
    det = NoisyDetector(PerceptionProviderConfig(kind="noisy", seed=3))
    assert det.recall(0.0001) < det.recall(0.01) < det.recall(0.5)
    w = _single_place_world(0, 15)
    view = render_view(w, "o", Pose(0, fov=60))
    assert det.detect(view, ["cafe"]) == det.detect(view, ["cafe"])


def test_detector_contract_violation():
    class Bad:
        def detect(self, view, categories):
            return [{"bbox": [0.5, 0.5, 0.1, 0.1]}]
    w = _single_place_world(0, 15)
    with pytest.raises(ProviderError):
        detect(render_view(w, "o", Pose(0)), ["cafe"], Bad())


def test_proposal_rejects_box_outside_image():
    with pytest.raises(ValueError):
        ObjectProposal(BBox(0.95, 0.5, 0.2, 0.1), "cafe", 0.5, "o", Pose())


# -- frustum matching


def test_matcher_equals_brute_force_small_sample():
    rng = random.Random(10)
    hits = 0
    for _ in range(200):
        w, p = random_scene(rng)
        got = match_proposal_to_place(w, p)
        want = brute_match(w, p, 30.0)
        assert ({got.place_id} if got.matched else set()) == want
        hits += got.matched
    assert hits > 20  # the scenes exercise both outcomes


def test_matcher_ignores_targets_behind_camera():
    w = _single_place_world(0, -15)
    p = ObjectProposal(BBox(0.5, 0.5, 1.0, 0.2), "cafe", 0.9, "o", Pose(0, fov=120))
    assert not match_proposal(w, p).matched


def test_matcher_prefers_nearest_in_frustum():
    w = make_world({"o": (0, 0), "e": (20, 0)}, [("o", "e")],
                   places=[place("far", "cafe", (0.5, 25)), place("near", "bank", (-0.5, 12))])
    p = ObjectProposal(BBox(0.5, 0.5, 0.2, 0.2), "cafe", 0.9, "o", Pose(0, fov=60))
    r = match_proposal(w, p)
    assert r.place_id == "near"
    assert r.distance == pytest.approx(12, abs=0.05)


def test_matcher_instances():
    w = make_world({"o": (0, 0), "e": (20, 0)}, [("o", "e")],
                   instances=[("i1", "mailbox", (0, 10), 1.2, 0.5)])
    p = ObjectProposal(BBox(0.5, 0.5, 0.1, 0.1), "mailbox", 0.9, "o", Pose(0, fov=60))
    assert match_proposal(w, p, targets="instances").place_id == "i1"
    assert not match_proposal(w, p, targets="places").matched
    with pytest.raises(ValueError):
        match_proposal(w, p, targets="cars")


# -- active detection


def test_active_detection_narrows_and_recenters():
    w = _single_place_world(12, 30)  # far-ish, off-center
    view = render_view(w, "o", Pose(0, fov=120))
    cand = detect(view, ["cafe"], OracleDetector())[0]
    refined = active_detect(w, "o", cand, OracleDetector())
    assert refined.source_pose.fov < cand.source_pose.fov
    assert refined.bbox.area > cand.bbox.area
    assert abs(refined.bbox.cx - 0.5) < abs(cand.bbox.cx - 0.5)
    assert refined.entity_id == cand.entity_id


@given(st.floats(0, 359), st.sampled_from([20.0, 30.0, 45.0, 60.0, 90.0, 120.0]))
def test_active_detection_never_widens(h, fov):
    w = _single_place_world(3, 14)
    view = render_view(w, "o", Pose(h, fov=fov))
    props = detect(view, ["cafe"], OracleDetector())
    for cand in props:
        refined = active_detect(w, "o", cand, OracleDetector())
        assert refined.source_pose.fov <= cand.source_pose.fov


def test_active_detection_lost_target():
    w = _single_place_world(0, 15)
    ghost = ObjectProposal(BBox(0.1, 0.5, 0.05, 0.05), "cafe", 0.3, "o", Pose(90, fov=120))
    with pytest.raises(LostTarget):
        active_detect(w, "o", ghost, OracleDetector())


# -- dedup


def _sweep_detections(w, node_ids, cats):
    out = []
    for n in node_ids:
        for pose in surround_poses(0, count=4, fov=90):
            for p in detect(render_view(w, n, pose, 30), cats, OracleDetector()):
                out.append((p, n))
    return out


@given(st.randoms(use_true_random=False))
def test_dedup_count_is_order_invariant(rnd):
    w = make_world({"a": (0, 0), "b": (20, 0), "c": (40, 0)}, [("a", "b"), ("b", "c")],
                   instances=[("i1", "mailbox", (10, 5), 1.2, 0.5), ("i2", "mailbox", (30, -5), 1.2, 0.5),
                              ("i3", "trash bin", (20, 6), 1.0, 0.6)])
    dets = _sweep_detections(w, ["a", "b", "c"], ["mailbox", "trash bin"])
    shuffled = dets[:]
    rnd.shuffle(shuffled)
    groups = deduplicate(shuffled, OracleMatcher())
    assert len(groups) == 3
    assert sorted(sorted({d[0].entity_id for d in g}) for g in groups) == [["i1"], ["i2"], ["i3"]]


def test_dedup_rejects_bad_matcher_reply():
    class Bad:
        def match(self, a, b):
            return "yes"
    w = make_world({"a": (0, 0), "b": (20, 0)}, [("a", "b")],
                   instances=[("i1", "mailbox", (10, 5), 1.2, 0.5)])
    dets = _sweep_detections(w, ["a", "b"], ["mailbox"])
    with pytest.raises(ProviderError):
        deduplicate(dets, Bad())


def test_simulated_matcher_is_symmetric_and_seeded():
    w = make_world({"a": (0, 0), "b": (20, 0)}, [("a", "b")],
                   instances=[("i1", "mailbox", (10, 5), 1.2, 0.5), ("i2", "mailbox", (5, -6), 1.2, 0.5)])
    dets = [d[0] for d in _sweep_detections(w, ["a", "b"], ["mailbox"])]
    m = SimulatedMatcher(0.3, 0.3, seed=1)
    for x in dets:
        for y in dets:
            assert m.match(x, y) == m.match(y, x)


# -- HTTP provider against the reference server


@pytest.fixture()
def server():
    w = make_world({"o": (0, 0), "e": (20, 0)}, [("o", "e")], places=[place("p1", "cafe", (0, 15))])
    with MockProviderServer(w) as srv:
        srv.world_ = w
        yield srv


def test_http_detect_matches_oracle(server):
    w = server.world_
    view = render_view(w, "o", Pose(0, fov=90))
    with HttpProvider(server.url, world=w) as client:
        remote = client.detect(view, ["cafe"])
    local = OracleDetector().detect(view, ["cafe"])
    assert [(p.bbox, p.label, p.score) for p in remote] == [(p.bbox, p.label, p.score) for p in local]
    assert server.requests[0][1]["view"]["node_id"] == "o"


def test_http_choose_score_match(server):
    with HttpProvider(server.url) as client:
        assert client.choose(["x", "y"], {"q": 1}) == (0, "first option")
        assert client.score("p1/storefront/0") == pytest.approx(0.9)
        view = render_view(server.world_, "o", Pose(0, fov=90))
        p = OracleDetector().detect(view, ["cafe"])[0]
        assert client.match(p, p) == (True, 1.0)


def test_http_retries_server_errors(server):
    calls = []

    def flaky(payload):
        calls.append(1)
        return (503, {"error": "busy"}) if len(calls) < 3 else None

    server.overrides["score"] = flaky
    with HttpProvider(server.url, retries=2, backoff=0.0) as client:
        assert client.score("p1/storefront/0") == pytest.approx(0.9)
    assert len(calls) == 3


def test_http_gives_up_after_retries(server):
    server.overrides["score"] = lambda payload: (500, {"error": "down"})
    with HttpProvider(server.url, retries=1, backoff=0.0) as client:
        with pytest.raises(ProviderError, match="server error 500"):
            client.score("x/storefront/0")
    assert len(server.requests) == 2


def test_http_client_error_is_not_retried(server):
    server.overrides["score"] = lambda payload: (422, {"error": "bad"})
    with HttpProvider(server.url, retries=3, backoff=0.0) as client:
        with pytest.raises(ProviderError, match="422"):
            client.score("x/storefront/0")
    assert len(server.requests) == 1


def test_http_timeout(server):
    def slow(payload):
        time.sleep(0.5)
        return None

    server.overrides["score"] = slow
    with HttpProvider(server.url, timeout=0.1, retries=0) as client:
        with pytest.raises(ProviderError, match="timed out"):
            client.score("x/storefront/0")


def test_http_malformed_reply(server):
    server.overrides["score"] = lambda payload: (200, {"score": "high"})
    with HttpProvider(server.url, retries=0) as client:
        with pytest.raises(ProviderError, match="malformed"):
            client.score("x/storefront/0")
    server.overrides["score"] = lambda payload: (200, b"not json")
    with HttpProvider(server.url, retries=0) as client:
        with pytest.raises(ProviderError, match="not JSON"):
            client.score("x/storefront/0")


def test_http_token():
    w = make_world({"o": (0, 0), "e": (20, 0)}, [("o", "e")])
    with MockProviderServer(w, required_token="s3cret") as srv:
        with HttpProvider(srv.url, token="wrong", retries=0) as client:
            with pytest.raises(ProviderError, match="401"):
                client.score("a/storefront/0")
        with HttpProvider(srv.url, token="s3cret") as client:
            assert client.score("a/storefront/0") == pytest.approx(0.9)


def test_http_token_from_environment(monkeypatch):
    w = make_world({"o": (0, 0), "e": (20, 0)}, [("o", "e")])
    monkeypatch.setenv("STREETSIM_PROVIDER_TOKEN", "envtok")
    with MockProviderServer(w, required_token="envtok") as srv:
        with HttpProvider(srv.url) as client:
            assert client.score("a/menu/0") == pytest.approx(0.1)
