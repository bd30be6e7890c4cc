"""Run configuration and the task runners behind ``streetsim run``.

Each runner returns (records, aggregate, extra artifacts); the CLI only
writes them. Everything is a function of the config and its seeds.
"""
from __future__ import annotations

import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

from .canonical import stable_seed
from .geo import GeoCoordinate, GeoPolygon, point_in_polygon
from .world import World, WorldParams, generate_world, read_world, save_world

TASKS = ("route-optimize", "region-sweep", "vln", "detect-bench", "vqa-bench", "clean")
PROVIDERS = ("oracle", "noisy", "external")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    task: str
    out: Path
    seed: int = 0
    world: Optional[Path] = None
    world_params: dict = field(default_factory=dict)
    provider: str = "oracle"
    endpoint: Optional[str] = None
    provider_options: dict = field(default_factory=dict)
    workers: Optional[int] = None
    threshold_m: float = 25.0
    options: dict = field(default_factory=dict)  # task-specific section

    def check(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        if self.provider not in PROVIDERS:
            raise ConfigError(f"unknown provider {self.provider!r}; expected one of {', '.join(PROVIDERS)}")
        if self.provider == "external" and not self.endpoint:
            raise ConfigError("the external provider needs --endpoint")
        if self.world is not None and not Path(self.world).is_file():
            raise ConfigError(f"world file {self.world} does not exist")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if self.threshold_m < 0:
            raise ConfigError("--threshold-m must be >= 0")


def merge_config(file_cfg: Mapping[str, Any], flags: Mapping[str, Any]) -> RunConfig:
    """Config file values, overridden by any flag that was given."""
    merged = dict(file_cfg)
    for k, v in flags.items():
        if v is not None:
            merged[k] = v
    task = merged.get("task")
    if not task:
        raise ConfigError("no task given (use --task or a task key in the config)")
    if not merged.get("out"):
        raise ConfigError("no output directory given (use --out)")
    section = merged.get(task, {})
    if not isinstance(section, Mapping):
        raise ConfigError(f"config section {task!r} must be a mapping")
    try:
        cfg = RunConfig(task=task, out=Path(merged["out"]), seed=int(merged.get("seed", 0)),
                        world=Path(merged["world"]) if merged.get("world") else None,
                        world_params=dict(merged.get("world_params", {})),
                        provider=merged.get("provider", "oracle"), endpoint=merged.get("endpoint"),
                        provider_options=dict(merged.get("provider_options", {})),
                        workers=int(merged["workers"]) if merged.get("workers") is not None else None,
                        threshold_m=float(merged.get("threshold_m", 25.0)), options=dict(section))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None
    cfg.check()
    return cfg


def world_params_from_config(d: Mapping[str, Any]) -> WorldParams:
    d = dict(d)
    try:
        if "center" in d:
            d["center"] = GeoCoordinate(*d["center"])
        if d.get("area") is not None:
            d["area"] = GeoPolygon.from_pairs(d["area"])
        for k in ("region_grid", "instance_categories", "place_types"):
            if d.get(k) is not None:
                d[k] = tuple(d[k])
        params = WorldParams(**d)
    except TypeError as exc:
        raise ConfigError(f"bad world_params: {exc}") from None
    params.check()
    return params


def load_run_world(cfg: RunConfig) -> World:
    if cfg.world is not None:
        return read_world(cfg.world)
    return generate_world(cfg.seed, world_params_from_config(cfg.world_params))


def _pmap(cfg: RunConfig, fn: Callable, items: Sequence) -> list:
    """Parallel map; results come back in input order, so output never depends on scheduling."""
    workers = cfg.workers or os.cpu_count() or 1
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- providers

def _http(cfg: RunConfig, w: World):
    from .providers.http import HttpProvider

    opts = cfg.provider_options
    return HttpProvider(cfg.endpoint, timeout=float(opts.get("timeout", 10.0)),
                        retries=int(opts.get("retries", 2)), world=w)


def make_detector(cfg: RunConfig, w: World):
    from .perception.providers import NoisyDetector, OracleDetector, PerceptionProviderConfig

    if cfg.provider == "oracle":
        return OracleDetector()
    if cfg.provider == "external":
        return _http(cfg, w)
    opts = dict(cfg.provider_options)
    opts.pop("timeout", None), opts.pop("retries", None)
    try:
        pc = PerceptionProviderConfig(kind="noisy", seed=stable_seed(cfg.seed, "perception"), **opts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad provider_options: {exc}") from None
    return NoisyDetector(pc)


def _regions(w: World, wanted: Optional[Sequence[str]] = None) -> list[tuple[str, GeoPolygon]]:
    regions = w.regions
    if not regions:
        lats = [n.coord.lat for n in w.nodes.values()]
        lngs = [n.coord.lng for n in w.nodes.values()]
        regions = [("all", GeoPolygon.rectangle(min(lats) - 1e-5, min(lngs) - 1e-5,
                                                max(lats) + 1e-5, max(lngs) + 1e-5))]
    if wanted:
        names = {n for n, _ in regions}
        missing = set(wanted) - names
        if missing:
            raise ConfigError(f"unknown regions {sorted(missing)}")
        regions = [(n, p) for n, p in regions if n in wanted]
    return regions


def region_of(regions: Sequence[tuple[str, GeoPolygon]], coord) -> str:
    for name, poly in regions:
        if point_in_polygon(coord, poly):
            return name
    return ""


# -- tasks

def run_route_optimize(cfg: RunConfig, w: World):
    from .mobility.routing import estimate_travel_time, optimize_waypoint_order, route_through

    o = cfg.options
    mode = o.get("transport_mode", "walk")
    nodes = sorted(w.nodes)
    rng = random.Random(stable_seed(cfg.seed, "route-optimize"))
    start = o.get("start") or rng.choice(nodes)
    waypoints = o.get("waypoints") or rng.sample([n for n in nodes if n != start],
                                                 int(o.get("n_waypoints", 5)))
    ordering, best = optimize_waypoint_order(w, start, waypoints, mode)
    given = route_through(w, [start] + list(waypoints), mode)
    t_best, t_given = estimate_travel_time(best), estimate_travel_time(given)
    rec = {"start": start, "waypoints": list(waypoints), "ordering": ordering,
           "transport_mode": mode, "optimized_length_m": best.total_length,
           "in_order_length_m": given.total_length, "optimized_time_s": t_best,
           "in_order_time_s": t_given, "saved_s": t_given - t_best, "route": best.to_document()}
    agg = {"task": cfg.task, "optimized_length_m": best.total_length,
           "in_order_length_m": given.total_length, "saved_s": t_given - t_best}
    summary = (f"visit order {' -> '.join(ordering)}: {best.total_length:.0f} m vs "
               f"{given.total_length:.0f} m in given order, saves {(t_given - t_best) / 60:.1f} min "
               f"by {mode}")
    return [rec], agg, {}, summary


def run_region_sweep(cfg: RunConfig, w: World):
    from .benchmark.detection import count_instances, visible_ground_truth
    from .mobility.navigators import nodes_in_region, plan_cost, region_navigate_plan
    from .mobility.routing import nearest_neighbor_order, path_distance, sequence_cost
    from .perception.providers import OracleMatcher, SimulatedMatcher

    o = cfg.options
    cats = list(o.get("categories") or sorted({i.category for i in w.instances.values()}))
    detector = make_detector(cfg, w)
    if cfg.provider == "external":
        matcher = detector
    elif cfg.provider == "noisy":
        matcher = SimulatedMatcher(float(o.get("false_match_rate", 0.0)), float(o.get("miss_rate", 0.0)),
                                   stable_seed(cfg.seed, "matcher"))
    else:
        matcher = OracleMatcher()

    def one(region):
        name, poly = region
        inside = nodes_in_region(w, poly)
        if not inside:
            return {"region": name, "n_nodes": 0, "plan": [], "plan_cost_m": 0.0,
                    "nn_cost_m": 0.0, "counts": {c: 0 for c in cats},
                    "ground_truth": {c: 0 for c in cats}}
        plan = region_navigate_plan(w, poly)
        dist = lambda a, b: path_distance(w, a, b)  # noqa: E731
        nn = nearest_neighbor_order(inside[0], inside[1:], dist)
        counts = count_instances(w, poly, cats, detector, matcher)
        gt = visible_ground_truth(w, inside, cats, "instances")
        return {"region": name, "n_nodes": len(inside), "plan": plan, "plan_cost_m": plan_cost(w, plan),
                "nn_cost_m": sequence_cost(nn, dist), "counts": counts,
                "ground_truth": {c: len(s) for c, s in gt.items()}}

    records = _pmap(cfg, one, _regions(w, o.get("regions")))
    agg = {"task": cfg.task, "n_regions": len(records),
           "counts": {c: sum(r["counts"][c] for r in records) for c in cats},
           "ground_truth": {c: sum(r["ground_truth"][c] for r in records) for c in cats},
           "plan_cost_m": sum(r["plan_cost_m"] for r in records)}
    summary = "counted " + ", ".join(f"{c}: {agg['counts'][c]} (truth {agg['ground_truth'][c]})" for c in cats)
    return records, agg, {}, summary


def _suite(cfg: RunConfig, w: World, n_routes: int, n_vqa=None):
    from .benchmark.suite import SuiteParams, generate_benchmark_suite

    o = cfg.options
    lo, hi = o.get("route_length_range", (80.0, 400.0))
    params = SuiteParams(n_routes=n_routes, route_length_range=(float(lo), float(hi)), n_vqa=n_vqa)
    return generate_benchmark_suite(w, cfg.seed, params)


def run_vln(cfg: RunConfig, w: World):
    from .benchmark.vln import aggregate_vln, run_vln_episode
    from .mobility.vln import ChooserPolicy, ScriptedPolicy

    o = cfg.options
    suite = _suite(cfg, w, int(o.get("n_routes", 18)), n_vqa=0)
    detector = make_detector(cfg, w)
    external_policy = o.get("policy", "scripted") == "external"
    if external_policy and not cfg.endpoint:
        raise ConfigError("an external policy needs --endpoint")

    chooser = _http(cfg, w) if external_policy else None

    def one(pair):
        route, instr = pair
        policy = ChooserPolicy(chooser) if external_policy else ScriptedPolicy()
        return run_vln_episode(w, route, instr, detector, policy, threshold_m=cfg.threshold_m)

    recs = _pmap(cfg, one, suite.pairs())
    report = aggregate_vln(recs).to_document()
    report.pop("per_route")
    agg = {"task": cfg.task, "suite_hash": suite.hash, **report}
    summary = (f"{len(recs)} routes: success {report['success']:.3f}, "
               + ", ".join(f"{k} arr {report['arr'][k]} reac {report['reac'][k]}" for k in report["arr"]))
    return [r.to_document() for r in recs], agg, {"suite.json": suite}, summary


def run_detect_bench(cfg: RunConfig, w: World):
    from .benchmark.detection import region_detection, subsample_categories
    from .benchmark.reports import pooled_detection

    o = cfg.options
    targets = o.get("targets", "places")
    if targets == "places":
        default = sorted({p.primary_type for p in w.places.values()})
    else:
        default = sorted({i.category for i in w.instances.values()})
    cats = list(o.get("categories") or default)
    detector = make_detector(cfg, w)
    active = bool(o.get("active", False))

    def one(region):
        name, poly = region
        rep = region_detection(w, poly, cats, detector, active=active, targets=targets, region_name=name)
        return rep.to_document()

    records = _pmap(cfg, one, _regions(w, o.get("regions")))
    pooled = pooled_detection(records)
    agg = {"task": cfg.task, "targets": targets, "active": active, **pooled}
    for k in (10, 20):
        if len(cats) >= k:
            subset = subsample_categories(cats, k, stable_seed(cfg.seed, "AR", k))
            vals = [pooled["per_category"][c]["recall"] for c in subset
                    if pooled["per_category"][c]["recall"] is not None]
            agg[f"AR_{k}"] = sum(vals) / len(vals) if vals else None
    summary = f"AR over {len(cats)} categories: {agg['AR']}"
    return records, agg, {}, summary


def _vqa_model(cfg: RunConfig, w: World):
    from .benchmark.recognition import (AlwaysFirstModel, NoisyVQAModel, OracleVQAModel,
                                        PositionBiasedModel, answers_from_world)

    o = cfg.options
    kind = o.get("model") or {"oracle": "oracle", "noisy": "noisy", "external": "external"}[cfg.provider]
    answers = answers_from_world(w)
    seed = stable_seed(cfg.seed, "vqa-model")
    if kind == "oracle":
        return OracleVQAModel(answers)
    if kind == "noisy":
        return NoisyVQAModel(answers, float(o.get("accuracy", 0.7)), seed)
    if kind == "position_biased":
        return PositionBiasedModel(answers, float(o.get("bias", 0.2)), seed)
    if kind == "always_first":
        return AlwaysFirstModel()
    if kind == "external":
        if not cfg.endpoint:
            raise ConfigError("an external VQA model needs --endpoint")
        return _http(cfg, w)
    raise ConfigError(f"unknown VQA model {kind!r}")


def run_vqa_bench(cfg: RunConfig, w: World):
    from .benchmark.recognition import eval_recognition, macro_mean, recognize, vqa_outcomes

    o = cfg.options
    suite = _suite(cfg, w, 0, n_vqa=o.get("n_items"))
    model = _vqa_model(cfg, w)
    regions = _regions(w)
    place_region = {pid: region_of(regions, p.coord) for pid, p in w.places.items()}
    items = list(suite.vqa_items)
    outs = _pmap(cfg, lambda it: vqa_outcomes(model, [it])[0], items)
    records = []
    for it, out in zip(items, outs):
        records.append({"kind": "vqa", "item_id": it.item_id, "image_ref": it.image_ref,
                        "category": it.category, "region": place_region[it.image_ref.split("/")[0]],
                        "answer_index": it.answer_index, "answers": list(out.answers),
                        "plain_correct": out.plain_correct, "circular_correct": out.circular_correct})
    preds = recognize(w, model)
    for pid in sorted(preds):
        truth = w.places[pid].primary_type
        records.append({"kind": "recognition", "place_id": pid, "region": place_region[pid],
                        "category": truth, "predicted": preds[pid], "correct": preds[pid] == truth})
    circ = macro_mean([(o_.category, o_.circular_correct) for o_ in outs])
    plain = macro_mean([(o_.category, o_.plain_correct) for o_ in outs])
    agg = {"task": cfg.task, "n_items": len(items), "macc_circular": circ, "macc_plain": plain,
           "recognition_macc": eval_recognition(preds, w), "n_places": len(preds)}
    summary = f"VQA mAcc circular {circ} plain {plain}; recognition mAcc {agg['recognition_macc']}"
    return records, agg, {}, summary


def run_clean(cfg: RunConfig, w: World):
    from .benchmark.cleaning import CleaningConfig, clean_places, cleaned_world, removed_ids
    from .perception.providers import StorefrontScorer

    o = cfg.options
    scorer = _http(cfg, w) if cfg.provider == "external" else StorefrontScorer()
    try:
        cc = CleaningConfig(float(o.get("distance_threshold_m", 100.0)), int(o.get("min_reviews", 1)),
                            float(o.get("image_score_threshold", 0.5)), scorer)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    kept, log = clean_places(w, cc)
    records = [{"place_id": e.place_id, "rule": e.rule, "detail": e.detail, "photo_ref": e.photo_ref}
               for e in log]
    by_rule = {r: sum(e.rule == r for e in log) for r in ("distance", "reviews", "image")}
    agg = {"task": cfg.task, "n_input": len(w.places), "n_kept": len(kept),
           "n_removed": len(removed_ids(log)), "by_rule": by_rule}
    summary = (f"kept {len(kept)} of {len(w.places)} places; removed by distance {by_rule['distance']}, "
               f"by reviews {by_rule['reviews']}; dropped {by_rule['image']} photos")
    return records, agg, {"cleaned_world.json": save_world(cleaned_world(w, kept))}, summary


RUNNERS = {
    "route-optimize": run_route_optimize, "region-sweep": run_region_sweep, "vln": run_vln,
    "detect-bench": run_detect_bench, "vqa-bench": run_vqa_bench, "clean": run_clean,
}


def run_task(cfg: RunConfig, w: Optional[World] = None):
    """Returns (records, aggregate, artifacts, one-line summary)."""
    w = w if w is not None else load_run_world(cfg)
    return RUNNERS[cfg.task](cfg, w)
