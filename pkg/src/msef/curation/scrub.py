"""Rule-based redaction of phone numbers, e-mail addresses and names."""

from __future__ import annotations

import re
from typing import Mapping, Sequence

PHONE = "⟨PHONE⟩"
EMAIL = "⟨EMAIL⟩"
NAME = "⟨NAME⟩"

# 7+ digits, optionally split by single spaces/dashes, optional leading +
_PHONE_RE = re.compile(r"(?<![\w])\+?\d(?:[ -]?\d){6,}(?![\w])")
_EMAIL_RE = re.compile(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+")

DEFAULT_ALIASES = {
    "the power plant compound": "Dongli Square Residential Area",
}


def _table_re(words: Sequence[str]) -> re.Pattern | None:
    if not words:
        return None
    alts = sorted((re.escape(w) for w in words), key=len, reverse=True)
    return re.compile(r"\b(?:" + "|".join(alts) + r")\b", re.IGNORECASE)


def scrub_pii(text: str, names: Sequence[str] = (),
              aliases: Mapping[str, str] | None = None) -> tuple[str, int]:
    """Return ``(clean text, number of replacements)``.

    Order: e-mail, phone, personal names, then alias harmonisation. Alias
    rewrites count towards the total; the count is what the audit log shows.
    """
    aliases = DEFAULT_ALIASES if aliases is None else aliases
    count = 0

    text, n = _EMAIL_RE.subn(EMAIL, text)
    count += n
    text, n = _PHONE_RE.subn(PHONE, text)
    count += n
    rx = _table_re(names)
    if rx is not None:
        text, n = rx.subn(NAME, text)
        count += n
    if aliases:
        lookup = {k.lower(): v for k, v in aliases.items()}
        rx = _table_re(list(aliases))
        text, n = rx.subn(lambda m: lookup[m.group(0).lower()], text)
        count += n
    return text, count
