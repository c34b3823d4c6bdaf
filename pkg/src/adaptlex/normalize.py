"""Tokenization and obfuscation-tolerant lexicon matching.

Aggressors hide toxic terms behind punctuation insertion ("nas.ty"),
character repetition ("CRYINGG"), leet substitutions ("sh1t"), and outright
misspellings ("niggaz", "fck"). Matching runs a fixed cascade per token:
exact, then deobfuscated variants, then bounded Damerau-Levenshtein fuzz.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

# Leet substitutions applied as the last variant stage.
DEFAULT_SUBSTITUTIONS: dict[str, str] = {
    "0": "o", "1": "i", "3": "e", "4": "a", "5": "s", "7": "t", "@": "a", "$": "s",
}

# Interior separators stripped when generating variants.
_SEPARATORS = ".-_'*"

_URL_RE = r"(?:https?://|www\.)\S+"
_MENTION_RE = r"@\w+"
_HASHTAG_RE = r"#(\w+)"
# Tokens start and end on a word character; interior may carry separators and
# leet punctuation so "nas.ty", "x_x", and "sh1t" each stay one token.
_WORD_RE = r"\w(?:[\w.'\-*@$]*\w)?"

_SCAN = re.compile(
    rf"(?P<url>{_URL_RE})|(?P<mention>{_MENTION_RE})|#(?P<hashtag>\w+)|(?P<word>{_WORD_RE})",
    re.UNICODE,
)
_RT_PREFIX = re.compile(r"\s*RT\b")


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    span: tuple[int, int]


@dataclass(frozen=True)
class MatchResult:
    token: Token
    lexicon_term: str
    kind: str  # exact | deobfuscated | fuzzy
    edit_distance: int = 0


@dataclass(frozen=True)
class FuzzyPolicy:
    """Allowed edit distance by lexicon-term length.

    ``rules`` is a list of (min_term_length, max_distance) thresholds; the
    rule with the largest min_term_length <= len(term) applies, else 0.
    The default (length >= 5 allows distance 1) keeps short benign words
    like "bell" from colliding with short lexicon terms like "hell".
    """

    rules: tuple[tuple[int, int], ...] = ((5, 1),)

    def max_distance(self, term: str) -> int:
        allowed = 0
        for min_len, dist in self.rules:
            if len(term) >= min_len:
                allowed = max(allowed, dist)
        return allowed


@dataclass(frozen=True)
class NormalizerConfig:
    substitutions: tuple[tuple[str, str], ...] = tuple(sorted(DEFAULT_SUBSTITUTIONS.items()))
    fuzzy_policy: FuzzyPolicy = field(default_factory=FuzzyPolicy)

    @classmethod
    def create(cls, substitutions: dict[str, str] | None = None,
               fuzzy_rules: list[tuple[int, int]] | None = None) -> "NormalizerConfig":
        subs = DEFAULT_SUBSTITUTIONS if substitutions is None else substitutions
        policy = FuzzyPolicy() if fuzzy_rules is None else FuzzyPolicy(
            tuple((int(a), int(b)) for a, b in fuzzy_rules))
        return cls(tuple(sorted(subs.items())), policy)

    @property
    def substitution_map(self) -> dict[str, str]:
        return dict(self.substitutions)


def tokenize(text: str) -> list[Token]:
    """Split a post into tokens with character spans on the original text.

    Mentions (@handle), URLs, and a leading retweet marker are dropped;
    hashtags yield their bare word; everything else becomes lowercase
    tokens that keep interior punctuation for the variant stage.
    """
    tokens: list[Token] = []
    start_at = 0
    m = _RT_PREFIX.match(text)
    if m:
        start_at = m.end()
    for match in _SCAN.finditer(text, start_at):
        if match.group("url") or match.group("mention"):
            continue
        if match.group("hashtag") is not None:
            surface = match.group("hashtag")
            span = match.span("hashtag")
        else:
            surface = match.group("word")
            span = match.span("word")
        tokens.append(Token(surface=surface, normalized=surface.lower(), span=span))
    return tokens


def _collapse(s: str, limit: int) -> str:
    """Collapse runs of the same character down to at most ``limit``."""
    out: list[str] = []
    prev = ""
    count = 0
    for ch in s:
        if ch == prev:
            count += 1
        else:
            prev, count = ch, 1
        if count <= limit:
            out.append(ch)
    return "".join(out)


def variants(token: Token | str, config: NormalizerConfig | None = None) -> list[str]:
    """Deterministic, duplicate-free candidate forms for a token.

    Order: normalized form; separator-stripped form; repeated-run collapses
    (runs > 2 to 2, any run to 1) of each base; then the leet-substituted
    image of everything before. The identity form is always first and the
    empty string is never emitted.
    """
    normalized = token.normalized if isinstance(token, Token) else token.lower()
    config = config or NormalizerConfig()

    forms: list[str] = []

    def add(form: str) -> None:
        if form and form not in forms:
            forms.append(form)

    add(normalized)
    stripped = "".join(ch for ch in normalized if ch not in _SEPARATORS)
    add(stripped)
    for base in (normalized, stripped):
        if not base:
            continue
        add(_collapse(base, 2))
        add(_collapse(base, 1))
    subs = config.substitution_map
    if subs:
        for form in list(forms):
            add("".join(subs.get(ch, ch) for ch in form))
    return forms


def damerau_levenshtein(a: str, b: str, cap: int | None = None) -> int:
    """Edit distance with adjacent transposition (optimal string alignment).

    ``cap`` short-circuits: once every alignment exceeds it, cap+1 is
    returned, which keeps cascade matching cheap on long tokens.
    """
    la, lb = len(a), len(b)
    if cap is not None and abs(la - lb) > cap:
        return cap + 1
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev2: list[int] | None = None
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        ca = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            best = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if (i > 1 and j > 1 and ca == b[j - 2] and a[i - 2] == b[j - 1]):
                best = min(best, prev2[j - 2] + 1)
            cur[j] = best
        if cap is not None and min(cur) > cap:
            return cap + 1
        prev2, prev = prev, cur
    return prev[lb]


def match(token: Token, lexicon, config: NormalizerConfig | None = None) -> MatchResult | None:
    """First match across the cascade: exact, deobfuscated, fuzzy.

    ``lexicon`` may be a Lexicon (its seed+accepted terms are used) or any
    iterable of terms. Fuzzy matches pick the smallest distance, then the
    lexicographically smallest term; the allowed distance comes from the
    policy table keyed on lexicon-term length.
    """
    config = config or NormalizerConfig()
    terms = _active_terms(lexicon)
    term_set = set(terms)

    if token.normalized in term_set:
        return MatchResult(token, token.normalized, "exact", 0)

    forms = variants(token, config)
    for form in forms:
        if form in term_set:
            return MatchResult(token, form, "deobfuscated", 0)

    best: tuple[int, str] | None = None
    for term in sorted(term_set):
        allowed = config.fuzzy_policy.max_distance(term)
        if allowed < 1:
            continue
        for form in forms:
            if abs(len(form) - len(term)) > allowed:
                continue
            dist = damerau_levenshtein(form, term, cap=allowed)
            if 1 <= dist <= allowed and (best is None or dist < best[0]):
                best = (dist, term)
                if dist == 1:
                    break
        if best is not None and best[0] == 1:
            # can't beat distance 1; earlier (smaller) terms already scanned
            break
    if best is not None:
        return MatchResult(token, best[1], "fuzzy", best[0])
    return None


def _active_terms(lexicon) -> list[str]:
    active = getattr(lexicon, "active_terms", None)
    if callable(active):
        return list(active())
    return list(lexicon)
