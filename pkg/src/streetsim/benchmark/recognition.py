"""Place-type recognition and four-option VQA with circular evaluation."""
from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

from ..canonical import stable_seed
from ..errors import ProviderError, UnknownPlace, UnparseableAnswer
from ..mobility.navigators import parse_index
from ..world import World

N_OPTIONS = 4


def macro_mean(outcomes: Sequence[tuple[str, bool]]) -> Optional[float]:
    """Mean over classes of per-class accuracy."""
    by_cls: dict[str, list[bool]] = defaultdict(list)
    for cls, ok in outcomes:
        by_cls[cls].append(ok)
    if not by_cls:
        return None
    return sum(sum(v) / len(v) for v in by_cls.values()) / len(by_cls)


def eval_recognition(predictions: Mapping[str, str], w: World) -> Optional[float]:
    """mAcc of predicted place types against each place's primary type."""
    outcomes = []
    for pid, pred in predictions.items():
        if pid not in w.places:
            raise UnknownPlace(f"prediction for unknown place {pid!r}")
        truth = w.places[pid].primary_type
        outcomes.append((truth, pred == truth))
    return macro_mean(outcomes)


def per_type_accuracy(predictions: Mapping[str, str], w: World) -> dict[str, float]:
    by: dict[str, list[bool]] = defaultdict(list)
    for pid, pred in predictions.items():
        truth = w.places[pid].primary_type
        by[truth].append(pred == truth)
    return {t: sum(v) / len(v) for t, v in sorted(by.items())}


@dataclass(frozen=True)
class VQAItem:
    item_id: str
    image_ref: str
    question: str
    options: tuple[str, ...]
    answer_index: int
    category: str = ""

    def __post_init__(self):
        if len(self.options) != N_OPTIONS:
            raise ValueError(f"a VQA item needs exactly {N_OPTIONS} options")
        if len(set(self.options)) != N_OPTIONS:
            raise ValueError("VQA options must be distinct")
        if not 0 <= self.answer_index < N_OPTIONS:
            raise ValueError("answer_index out of range")

    @property
    def answer(self) -> str:
        return self.options[self.answer_index]

    def rotated(self, r: int) -> "VQAItem":
        """Options shifted left by ``r``; the answer follows its option."""
        opts = tuple(self.options[(i + r) % N_OPTIONS] for i in range(N_OPTIONS))
        return VQAItem(self.item_id, self.image_ref, self.question, opts,
                       (self.answer_index - r) % N_OPTIONS, self.category)

    def to_document(self) -> dict:
        return {"item_id": self.item_id, "image_ref": self.image_ref, "question": self.question,
                "options": list(self.options), "answer_index": self.answer_index,
                "category": self.category}

    @classmethod
    def from_document(cls, doc: Mapping) -> "VQAItem":
        return cls(doc["item_id"], doc["image_ref"], doc["question"], tuple(doc["options"]),
                   int(doc["answer_index"]), doc.get("category", ""))


def ask(model, item: VQAItem) -> int:
    """Query the model once; its answer must be an option index."""
    reply = model.choose(list(item.options), {"question": item.question, "image_ref": item.image_ref})
    try:
        answer, _ = reply
    except (TypeError, ValueError):
        raise UnparseableAnswer(f"model returned {reply!r}, expected (index, rationale)") from None
    return parse_index(answer, N_OPTIONS)


@dataclass(frozen=True)
class VQAOutcome:
    item_id: str
    category: str
    plain_correct: bool
    circular_correct: bool
    answers: tuple[int, ...]  # answer per rotation, rotation 0 first


def vqa_outcomes(model, items: Sequence[VQAItem]) -> list[VQAOutcome]:
    out = []
    for item in items:
        answers = []
        ok = []
        for r in range(N_OPTIONS):
            rot = item.rotated(r)
            a = ask(model, rot)
            answers.append(a)
            ok.append(a == rot.answer_index)
        # rotation 0 is the unrotated item, so the plain query is that same call
        out.append(VQAOutcome(item.item_id, item.category, ok[0], all(ok), tuple(answers)))
    return out


def eval_vqa_circular(model, items: Sequence[VQAItem]) -> tuple[Optional[float], Optional[float]]:
    """(mAcc_circular, mAcc_plain), both macro means over item categories."""
    outs = vqa_outcomes(model, items)
    return (macro_mean([(o.category, o.circular_correct) for o in outs]),
            macro_mean([(o.category, o.plain_correct) for o in outs]))


# -- mock VQA models; all are deterministic functions of their input.
# They look answers up by image ref, so one model serves both the
# four-option items and open recognition over the whole vocabulary.

def answers_from_items(items: Sequence[VQAItem]) -> dict[str, str]:
    return {it.image_ref: it.answer for it in items}


def answers_from_world(w: World) -> dict[str, str]:
    """Every photo ref (and the default storefront ref) -> the place's primary type."""
    out = {}
    for pid, place in w.places.items():
        out[f"{pid}/storefront/0"] = place.primary_type
        for ref in place.photo_refs:
            out[ref] = place.primary_type
    return out


class _KeyedModel:
    def __init__(self, answers: Mapping[str, str]):
        self.answers = dict(answers)

    def _truth(self, options: Sequence[str], context: Mapping[str, Any]) -> str:
        truth = self.answers.get(context["image_ref"])
        if truth is None or truth not in options:
            raise ProviderError(f"no known answer among the options for {context['image_ref']}")
        return truth


class OracleVQAModel(_KeyedModel):
    """Always picks the true option, wherever it sits."""

    def choose(self, options: Sequence[str], context: Mapping[str, Any]) -> tuple[int, str]:
        return list(options).index(self._truth(options, context)), "oracle"


class AlwaysFirstModel:
    def choose(self, options: Sequence[str], context: Mapping[str, Any]) -> tuple[int, str]:
        return 0, "always A"


class NoisyVQAModel(_KeyedModel):
    """Right with probability ``accuracy`` per image; a wrong answer is a fixed
    option, so the choice never depends on option order."""

    def __init__(self, answers: Mapping[str, str], accuracy: float, seed: int = 0):
        super().__init__(answers)
        if not 0 <= accuracy <= 1:
            raise ValueError("accuracy must be in [0, 1]")
        self.accuracy = accuracy
        self.seed = seed

    def choose(self, options: Sequence[str], context: Mapping[str, Any]) -> tuple[int, str]:
        truth = self._truth(options, context)
        rng = random.Random(stable_seed(self.seed, context["image_ref"], context.get("question", "")))
        if rng.random() < self.accuracy:
            return list(options).index(truth), "confident"
        wrong = sorted(o for o in options if o != truth)
        return list(options).index(rng.choice(wrong)), "guess"


class PositionBiasedModel(_KeyedModel):
    """Knows the answer but, with probability ``bias``, picks position A instead.

    The coin is drawn per query, option order included, so the model is
    inconsistent under rotation the way real multimodal models are.
    """

    def __init__(self, answers: Mapping[str, str], bias: float, seed: int = 0):
        super().__init__(answers)
        self.bias = bias
        self.seed = seed

    def choose(self, options: Sequence[str], context: Mapping[str, Any]) -> tuple[int, str]:
        truth = self._truth(options, context)
        rng = random.Random(stable_seed(self.seed, context["image_ref"], *options))
        if rng.random() < self.bias:
            return 0, "first"
        return list(options).index(truth), "known"


def recognize(w: World, model, place_ids: Optional[Sequence[str]] = None,
              question: str = "Which type of place is this?") -> dict[str, str]:
    """Ask ``model`` for each place's type with the whole vocabulary as options."""
    vocab = sorted(w.vocabulary)
    out = {}
    for pid in (sorted(w.places) if place_ids is None else place_ids):
        place = w.places[pid]
        refs = [r for r in place.photo_refs if r.split("/")[1:2] == ["storefront"]]
        ref = refs[0] if refs else f"{pid}/storefront/0"
        reply = model.choose(vocab, {"question": question, "image_ref": ref})
        try:
            answer, _ = reply
        except (TypeError, ValueError):
            raise UnparseableAnswer(f"model returned {reply!r}") from None
        out[pid] = vocab[parse_index(answer, len(vocab))]
    return out


class TypePredictor:
    """Seeded recognition mock: right with a per-type probability, else another type."""

    def __init__(self, vocabulary: Sequence[str], accuracy_by_type: Mapping[str, float],
                 default_accuracy: float = 1.0, seed: int = 0):
        self.vocabulary = sorted(vocabulary)
        self.accuracy_by_type = dict(accuracy_by_type)
        self.default_accuracy = default_accuracy
        self.seed = seed

    def predict(self, place_id: str, truth: str) -> str:
        rng = random.Random(stable_seed(self.seed, place_id))
        if rng.random() < self.accuracy_by_type.get(truth, self.default_accuracy):
            return truth
        return rng.choice([t for t in self.vocabulary if t != truth])


def predict_types(w: World, predictor, place_ids: Optional[Sequence[str]] = None) -> dict[str, str]:
    ids = sorted(w.places) if place_ids is None else list(place_ids)
    out = {}
    for pid in ids:
        pred = predictor.predict(pid, w.places[pid].primary_type)
        if not isinstance(pred, str):
            raise ProviderError(f"predictor returned {pred!r} for {pid}")
        out[pid] = pred
    return out
