"""Stress-free phone inventory and the letter-to-phone rules.

The inventory mirrors a standard ARPAbet-style set with stress digits
removed.  Index 0 is always the silence symbol so posterior rows line up
across every component that emits them.
"""

from __future__ import annotations

# One phone per letter, injective so that a phone sequence can be mapped
# back to its spelling without a lexicon.
LETTER_PHONES: dict[str, str] = {
    "a": "ae", "b": "b", "c": "ch", "d": "d", "e": "eh", "f": "f",
    "g": "g", "h": "hh", "i": "ih", "j": "jh", "k": "k", "l": "l",
    "m": "m", "n": "n", "o": "ow", "p": "p", "q": "oy", "r": "r",
    "s": "s", "t": "t", "u": "ah", "v": "v", "w": "w", "x": "sh",
    "y": "y", "z": "z", "'": "uw",
}

_EXTRA_PHONES = ("aa", "ao", "aw", "ay", "dh", "er", "ey", "iy", "ng", "th", "uh", "zh")

SILENCE = "sil"
INVENTORY: tuple[str, ...] = (SILENCE,) + tuple(sorted(set(LETTER_PHONES.values()))) + _EXTRA_PHONES
INVENTORY_SIZE = len(INVENTORY)

PHONE_INDEX: dict[str, int] = {p: i for i, p in enumerate(INVENTORY)}
PHONE_TO_LETTER: dict[str, str] = {v: k for k, v in LETTER_PHONES.items()}


def word_to_phones(word: str) -> list[str]:
    """Spell out a normalized word as its phone sequence.

    Characters without a mapping (digits, stray punctuation) are skipped.
    """
    return [LETTER_PHONES[c] for c in word if c in LETTER_PHONES]


def phones_to_word(phones: list[str]) -> str:
    """Invert :func:`word_to_phones`; unknown phones are dropped."""
    return "".join(PHONE_TO_LETTER.get(p, "") for p in phones)
