"""Loading, validating and canonically serializing worlds."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union


from .. import canonical
from ..errors import (AsymmetricEdge, DanglingReference, InconsistentGeometry, InvalidGeometry,
                      SchemaError)
from ..geo import GeoCoordinate, GeoPolygon, angular_offset, haversine_distance, initial_bearing
from .model import Edge, ObjectInstance, Place, Review, StreetNode, World, thaw

HEADING_TOLERANCE_DEG = 1.0
SCHEMA_NAME = "world.schema.json"


def _path(parts) -> str:
    return "/".join(str(p) for p in parts)


def _check_schema(doc: Any) -> None:
    canonical.check_document(doc, SCHEMA_NAME)


def world_from_document(doc: dict) -> World:
    _check_schema(doc)
    seen: set[str] = set()
    for section in ("nodes", "places", "instances"):
        for i, item in enumerate(doc[section]):
            if item["id"] in seen:
                raise SchemaError(f"{section}/{i}/id", f"duplicate id {item['id']!r}")
            seen.add(item["id"])

    nodes = {}
    for n in doc["nodes"]:
        edges = tuple(Edge(e["id"], float(e["heading"]), float(e["length"])) for e in n["neighbors"])
        nodes[n["id"]] = StreetNode(n["id"], GeoCoordinate(n["lat"], n["lng"]),
                                    tuple(sorted(edges, key=lambda e: e.node_id)),
                                    frozenset(n["web_visible"]))
    places = {}
    for p in doc["places"]:
        places[p["id"]] = Place(
            p["id"], p["name"], tuple(p["types"]), GeoCoordinate(p["lat"], p["lng"]),
            None if p["rating"] is None else float(p["rating"]),
            tuple(Review(r["text"], float(r["rating"])) for r in p["reviews"]),
            tuple(p["photo_refs"]))
    instances = {
        o["id"]: ObjectInstance(o["id"], o["category"], GeoCoordinate(o["lat"], o["lng"]),
                                float(o["height_m"]), float(o["width_m"]))
        for o in doc["instances"]
    }
    meta = doc["meta"]
    for i, region in enumerate(meta.get("regions", [])):
        try:
            GeoPolygon.from_pairs(region["vertices"])
        except InvalidGeometry as exc:
            raise SchemaError(f"meta/regions/{i}/vertices", str(exc)) from None
    w = World(nodes, places, instances, tuple(doc["vocabulary"]), meta)
    validate_world(w)
    return w


def validate_world(w: World) -> None:
    """Check cross-references and graph invariants; raise on the first violation."""
    vocab = set(w.vocabulary)
    for nid, node in w.nodes.items():
        ids = [e.node_id for e in node.neighbors]
        if len(set(ids)) != len(ids):
            raise InconsistentGeometry(f"node {nid} lists a neighbor twice")
        for e in node.neighbors:
            if e.node_id == nid:
                raise InconsistentGeometry(f"node {nid} has a self-loop")
            if e.node_id not in w.nodes:
                raise DanglingReference(f"node {nid} references unknown neighbor {e.node_id!r}")
        extra = node.web_visible_neighbors - set(ids)
        if extra:
            raise DanglingReference(f"node {nid} web_visible lists non-neighbors {sorted(extra)}")
    for nid, node in w.nodes.items():
        for e in node.neighbors:
            other = w.nodes[e.node_id]
            back = other.edge_to(nid)
            if back is None:
                raise AsymmetricEdge(f"edge {nid}->{e.node_id} has no reverse edge")
            if abs(angular_offset(e.heading + 180.0, back.heading)) > HEADING_TOLERANCE_DEG:
                raise AsymmetricEdge(f"edge {nid}<->{e.node_id} headings are not reciprocal")
            if node.coord == other.coord:
                raise InconsistentGeometry(f"edge {nid}->{e.node_id} joins coincident nodes")
            if abs(angular_offset(initial_bearing(node.coord, other.coord), e.heading)) > HEADING_TOLERANCE_DEG:
                raise InconsistentGeometry(f"edge {nid}->{e.node_id} heading disagrees with bearing")
            true_len = haversine_distance(node.coord, other.coord)
            if abs(true_len - e.length) > 0.5 + 0.01 * true_len:
                raise InconsistentGeometry(f"edge {nid}->{e.node_id} length disagrees with geometry")
    for pid, place in w.places.items():
        if not place.types:
            raise SchemaError(f"places/{pid}/types", "must be non-empty")
        unknown = [t for t in place.types if t not in vocab]
        if unknown:
            raise DanglingReference(f"place {pid} uses types outside the vocabulary: {unknown}")
    for oid, inst in w.instances.items():
        if inst.height_m <= 0 or inst.width_m <= 0:
            raise SchemaError(f"instances/{oid}", "extents must be positive")


def world_to_document(w: World) -> dict:
    nodes = []
    for nid in sorted(w.nodes):
        n = w.nodes[nid]
        nodes.append({
            "id": nid, "lat": n.coord.lat, "lng": n.coord.lng,
            "neighbors": [{"id": e.node_id, "heading": e.heading, "length": e.length}
                          for e in sorted(n.neighbors, key=lambda e: e.node_id)],
            "web_visible": sorted(n.web_visible_neighbors),
        })
    places = []
    for pid in sorted(w.places):
        p = w.places[pid]
        places.append({
            "id": pid, "name": p.name, "types": list(p.types), "lat": p.coord.lat,
            "lng": p.coord.lng, "rating": p.rating,
            "reviews": [{"text": r.text, "rating": r.rating} for r in p.reviews],
            "photo_refs": list(p.photo_refs),
        })
    instances = []
    for oid in sorted(w.instances):
        o = w.instances[oid]
        instances.append({"id": oid, "category": o.category, "lat": o.coord.lat,
                          "lng": o.coord.lng, "height_m": o.height_m, "width_m": o.width_m})
    return {"meta": thaw(w.meta), "nodes": nodes, "places": places, "instances": instances,
            "vocabulary": list(w.vocabulary)}


def save_world(w: World) -> bytes:
    return canonical.dumps(world_to_document(w))


def load_world(document: Union[bytes, str]) -> World:
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError("", f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"not valid JSON: {exc}") from None
    return world_from_document(doc)


def read_world(path: Union[str, Path]) -> World:
    return load_world(Path(path).read_bytes())


def write_world(w: World, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(save_world(w))
