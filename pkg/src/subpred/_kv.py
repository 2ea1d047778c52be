"""Parser for the plain-text ``key = value`` grammar used by model, config and
context files.  Lines are either blank, ``# comment``, or ``key = value``;
values keep their raw string form for the caller to interpret."""

from __future__ import annotations


def read_pairs(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse key/value lines, rejecting duplicates and malformed lines."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        if key in pairs:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs
