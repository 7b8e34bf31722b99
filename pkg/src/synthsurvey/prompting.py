"""Rendering of system and user prompts for one synthetic respondent."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dataio import DemographicMap, load_demographic_map
from .domain import PREAMBLE, DemographicProfile, Persona, Scenario, SurveyQuestion, TreatmentVector

SYSTEM_PROMPT = (
    "You are pretending to be the person described given your best guess as to "
    "their personal, social and economic situation."
)
CLOSING = "Please choose one option, no explanation."


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    presented_options: tuple[str, ...]
    permutation_seed: int | None


@lru_cache(maxsize=1)
def _default_map() -> DemographicMap:
    return load_demographic_map()


def format_rate(rate: float) -> str:
    """Render a rate: whole percent above ten in absolute value, one decimal otherwise."""
    if abs(rate) > 10:
        text = f"{rate:.0f}"
    else:
        text = f"{rate:.1f}"
    if text.startswith("-") and float(text) == 0:
        text = text[1:]
    return text + "%"


def render_persona_sentence(profile: DemographicProfile, demo_map: DemographicMap | None = None) -> str:
    m = demo_map or _default_map()
    social = m.wording("social_class", profile.social_class)
    if not social.startswith("are "):
        social = "are " + social
    return (
        f"You are {m.wording('sex', profile.sex)}, aged {m.wording('age_band', profile.age_band)}, "
        f"live in {m.wording('region', profile.region)}, {social} and "
        f"{m.wording('work', profile.work)} with an {m.wording('income_band', profile.income_band)}. "
        f"You {m.wording('education', profile.education)} and live in a {m.wording('housing', profile.housing)}."
    )


def render_conditioning(t: TreatmentVector | None) -> str:
    """Economic conditioning paragraph; empty when no component is active."""
    if t is None:
        return ""
    clauses = []
    if t.is_active("food"):
        clause = f"food inflation has been {format_rate(t.food)}"
        if t.is_active("restaurants"):
            clause += f" ({format_rate(t.restaurants)} in restaurants and cafes)"
        clauses.append(clause)
    elif t.is_active("restaurants"):
        clauses.append(f"inflation in restaurants and cafes has been {format_rate(t.restaurants)}")
    if t.is_active("energy"):
        clauses.append(f"energy price inflation was about {format_rate(t.energy)}")
    sentences = []
    if clauses:
        sentences.append("In the last few months, " + ", ".join(clauses) + ".")
    if t.is_active("other"):
        sentences.append(f"On average the rate of inflation on other goods was about {format_rate(t.other)}.")
    return " ".join(sentences)


def scramble_options(labels, seed: int) -> list:
    """Deterministic seed-driven permutation of ``labels``."""
    labels = list(labels)
    if not labels:
        raise ValueError("cannot scramble an empty option list")
    order = np.random.default_rng(seed).permutation(len(labels))
    return [labels[i] for i in order]


def respondent_seed(master_seed: int, persona_id: str, horizon: int, draw: int = 0) -> int:
    """Stable 64-bit seed for one respondent, horizon and (optional) repeat draw."""
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<q", int(master_seed)))
    h.update(persona_id.encode("utf-8"))
    h.update(struct.pack("<qq", int(horizon), int(draw)))
    return int.from_bytes(h.digest(), "little")


def build_prompt(
    persona: Persona,
    scenario: Scenario | TreatmentVector | None,
    question: SurveyQuestion,
    seed: int | None,
    demo_map: DemographicMap | None = None,
) -> PromptBundle:
    """User prompt for one respondent; ``seed=None`` keeps the scale order."""
    treatment = scenario.treatment if isinstance(scenario, Scenario) else scenario
    labels = question.scale.labels
    options = list(labels) if seed is None else scramble_options(labels, seed)
    paragraphs = [render_persona_sentence(persona.profile, demo_map)]
    conditioning = render_conditioning(treatment)
    if conditioning:
        paragraphs.append(conditioning)
    paragraphs.append(PREAMBLE + "\n" + question.wording)
    paragraphs.append("\n".join(f"{i}. {label}" for i, label in enumerate(options, start=1)))
    paragraphs.append(CLOSING)
    return PromptBundle(SYSTEM_PROMPT, "\n\n".join(paragraphs), tuple(options), seed)
