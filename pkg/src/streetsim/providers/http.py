"""Client for external providers speaking the JSON-over-HTTP contract.

Endpoints (all POST, relative to the base URL):

    detect   {view, categories}      -> {proposals: [{bbox, label, score}]}
    match    {a, b}                  -> {match, score}
    choose   {options, context}      -> {index, rationale}
    score    {image_ref}             -> {score}

Payload shapes live in ``schemas/provider.schema.json``.
"""
from __future__ import annotations

import os
import time
from typing import Any, Mapping, Optional, Sequence

import httpx
import jsonschema

from ..canonical import canonicalize, load_schema
from ..errors import ProviderError
from ..perception.camera import BBox, SymbolicView
from ..perception.providers import ObjectProposal

TOKEN_ENV = "STREETSIM_PROVIDER_TOKEN"


def _validator(name: str) -> jsonschema.Draft202012Validator:
    schema = dict(load_schema("provider.schema.json"))
    schema["$ref"] = f"#/$defs/{name}"
    return jsonschema.Draft202012Validator(schema)


def view_document(view: SymbolicView, coord=None) -> dict:
    doc = {"node_id": view.node_id,
           "pose": {"heading": view.pose.heading, "pitch": view.pose.pitch, "fov": view.pose.fov},
           "tags": list(view.tags)}
    if coord is not None:
        doc["lat"], doc["lng"] = coord.lat, coord.lng
    return doc


class HttpProvider:
    """Detector, matcher, chooser and image scorer backed by one endpoint.

    A single instance may be shared across threads; httpx clients are
    thread-safe.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 2,
                 token: Optional[str] = None, world=None, backoff: float = 0.05):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        # world is only used to attach coordinates to view descriptors
        self.world = world
        token = token if token is not None else os.environ.get(TOKEN_ENV)
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = httpx.Client(timeout=timeout, headers=headers)
        self._validators: dict[str, jsonschema.Draft202012Validator] = {}

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _check(self, name: str, doc: Any) -> None:
        v = self._validators.get(name)
        if v is None:
            v = self._validators[name] = _validator(name)
        err = jsonschema.exceptions.best_match(v.iter_errors(doc))
        if err is not None:
            where = "/".join(map(str, err.absolute_path)) or "<root>"
            raise ProviderError(f"malformed {name} at {where}: {err.message}")

    def _post(self, route: str, payload: dict) -> dict:
        self._check(f"{route}_request", payload)
        url = f"{self.endpoint}/{route}"
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.post(url, json=canonicalize(payload))
            except httpx.TimeoutException:
                last = ProviderError(f"{route}: timed out after {self.timeout}s")
            except httpx.HTTPError as exc:
                last = ProviderError(f"{route}: transport error {exc}")
            else:
                if resp.status_code >= 500:
                    last = ProviderError(f"{route}: server error {resp.status_code}")
                elif resp.status_code >= 400:
                    raise ProviderError(f"{route}: rejected with {resp.status_code}: {resp.text[:200]}")
                else:
                    try:
                        doc = resp.json()
                    except ValueError:
                        raise ProviderError(f"{route}: reply is not JSON") from None
                    self._check(f"{route}_response", doc)
                    return doc
            if attempt < self.retries:
                time.sleep(self.backoff * (2 ** attempt))
        raise last

    def detect(self, view: SymbolicView, categories: Sequence[str]) -> list[ObjectProposal]:
        coord = self.world.node(view.node_id).coord if self.world is not None else None
        doc = self._post("detect", {"view": view_document(view, coord),
                                    "categories": list(categories)})
        out = []
        for p in doc["proposals"]:
            try:
                out.append(ObjectProposal(BBox(*map(float, p["bbox"])), p["label"], float(p["score"]),
                                          view.node_id, view.pose, None))
            except ValueError as exc:
                raise ProviderError(f"detect: invalid proposal {p}: {exc}") from None
        return out

    def match(self, a: ObjectProposal, b: ObjectProposal) -> tuple[bool, float]:
        doc = self._post("match", {"a": a.to_document(), "b": b.to_document()})
        return bool(doc["match"]), float(doc["score"])

    def choose(self, options: Sequence[str], context: Mapping[str, Any]) -> tuple[Any, str]:
        doc = self._post("choose", {"options": list(options), "context": dict(context)})
        return doc["index"], str(doc.get("rationale", ""))

    def score(self, image_ref: str) -> float:
        return float(self._post("score", {"image_ref": image_ref})["score"])
