"""Persona instructions for collecting simulated transcripts.

The text is meant to be pasted into any chat interface; answers come back in
the answer-line grammar read by ``ingest.parse_transcript``. No model is
called from here.
"""

from __future__ import annotations

from typing import Dict, Sequence

from .models import ASSOCIATIONS_PER_CUE, DEFAULT_CUES, RATING_MAX, RATING_MIN, Group


# ---------------------------
# Personas
# ---------------------------

PERSONAS: Dict[Group, str] = {
    Group.TRAINEE: (
        "Take the role of someone still in training in a STEM field, such as a "
        "postgraduate or doctoral student."
    ),
    Group.EXPERT: (
        "Take the role of someone holding a doctorate in a STEM field who has spent "
        "several years working in industry, outside of universities and research institutes."
    ),
    Group.ACADEMIC: (
        "Take the role of a STEM academic with a doctorate who works at a university, "
        "runs a research group and has a record of publications and teaching."
    ),
}

ANSWER_LINE = '"cue word"="rating"="association 1"="rating"="association 2"="rating"="association 3"="rating"'


# ---------------------------
# Prompt builders
# ---------------------------

def build_persona_prompt(group: Group, cues: Sequence[str] = DEFAULT_CUES) -> str:
    if not cues:
        raise ValueError("at least one cue word is required")
    cue_list = ", ".join(f"'{c}'" for c in cues)
    scale = f"from {RATING_MIN} (= very negative) to {RATING_MAX} (= very positive)"

    return f"""{PERSONAS[group]} For each of the {len(cues)} cue words {cue_list}, do the following.

1. Rate the cue word {scale}.
2. Write the first {ASSOCIATIONS_PER_CUE} words that come to mind when you think of the cue word.
3. Rate each of those words {scale}, according to how you perceive it.

Answer with exactly one line per cue word and nothing else, in this format:
{ANSWER_LINE}
"""


def build_all_prompts(cues: Sequence[str] = DEFAULT_CUES) -> Dict[str, str]:
    """group name -> prompt, in group order."""
    return {group.value: build_persona_prompt(group, cues) for group in Group}
