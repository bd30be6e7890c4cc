from __future__ import annotations

from typing import Sequence

from ..errors import ProviderError
from .providers import Matcher, ObjectProposal


def deduplicate(detections: Sequence[tuple[ObjectProposal, str]],
                matcher: Matcher) -> list[list[tuple[ObjectProposal, str]]]:
    """Greedy grouping of detections that show the same physical object.

    Each detection is compared with the first member (representative) of each
    existing group in creation order and joins the first group the matcher
    accepts; otherwise it starts a new group.
    """
    groups: list[list[tuple[ObjectProposal, str]]] = []
    for det in detections:
        proposal = det[0]
        for group in groups:
            verdict = matcher.match(group[0][0], proposal)
            try:
                same, _score = verdict
            except (TypeError, ValueError):
                raise ProviderError(f"matcher returned {verdict!r}, expected (bool, score)") from None
            if same:
                group.append(det)
                break
        else:
            groups.append([det])
    return groups
