"""Interpolated Kneser-Ney n-gram model with ARPA serialization.

One pooled model is trained over all normalized transcripts and shared by
every decoder worker. The smoothing uses a single discount per order
(estimated from count-of-counts unless fixed), continuation counts for
lower orders, and encodes the interpolated probabilities in standard
ARPA back-off form.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .errors import DegenerateCorpus, ParseError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

LOG10_ZERO = -99.0  # conventional stand-in for log10(0) in ARPA files


@dataclass
class ArpaModel:
    order: int
    # entries[k-1]: k-gram tuple -> (log10 prob, log10 backoff or None)
    entries: list[dict[tuple[str, ...], tuple[float, float | None]]]
    vocab: set[str] = field(default_factory=set)

    def logprob(self, context: tuple[str, ...], word: str) -> float:
        """ARPA back-off evaluation of log10 P(word | context)."""
        word = word if word in self.vocab else UNK
        context = tuple(w if w in self.vocab else UNK for w in context)
        context = context[-(self.order - 1):] if self.order > 1 else ()
        return self._score(context, word)

    def _score(self, context: tuple[str, ...], word: str) -> float:
        gram = context + (word,)
        hit = self.entries[len(gram) - 1].get(gram)
        if hit is not None:
            return hit[0]
        if not context:
            # UNK is always present, so this is total after mapping
            return self.entries[0][(UNK,)][0]
        ctx_hit = self.entries[len(context) - 1].get(context)
        bow = ctx_hit[1] if ctx_hit is not None and ctx_hit[1] is not None else 0.0
        return bow + self._score(context[1:], word)

    def event_vocab(self) -> set[str]:
        """Words the model can predict (everything except the BOS marker)."""
        return {w for w in self.vocab if w != BOS}


def _count_ngrams(sentences: list[list[str]], order: int) -> list[Counter]:
    counts = [Counter() for _ in range(order)]
    for tokens in sentences:
        padded = [BOS] + tokens + [EOS]
        for k in range(1, order + 1):
            for i in range(len(padded) - k + 1):
                counts[k - 1][tuple(padded[i:i + k])] += 1
    return counts


def _continuation_counts(raw: list[Counter], order: int) -> list[Counter]:
    """Counts actually used per order: raw at the top, continuation below.

    Grams starting with BOS keep raw counts (nothing can precede BOS, so
    their continuation count would be zero despite being real events).
    """
    used = [Counter() for _ in range(order)]
    used[order - 1] = Counter(raw[order - 1])
    for k in range(order - 1, 0, -1):
        preds = defaultdict(set)
        for gram in raw[k]:
            preds[gram[1:]].add(gram[0])
        for gram, count in raw[k - 1].items():
            if gram == (BOS,):
                continue  # BOS is never a predicted event
            if gram[0] == BOS:
                used[k - 1][gram] = count
            elif gram in preds:
                used[k - 1][gram] = len(preds[gram])
    return used


def _estimate_discount(counts: Counter, order_k: int) -> float:
    n1 = sum(1 for c in counts.values() if c == 1)
    n2 = sum(1 for c in counts.values() if c == 2)
    if n1 + 2 * n2 == 0:
        raise DegenerateCorpus(
            f"count-of-counts at order {order_k} leave the discount undefined; "
            "pass a fixed discount"
        )
    return n1 / (n1 + 2 * n2)


def train(corpus, order: int = 3, discount="estimate") -> ArpaModel:
    """Train an interpolated Kneser-Ney model on normalized sentences.

    ``corpus`` is an iterable of sentence strings (or token lists);
    ``discount`` is "estimate", a single value, or one value per order.
    """
    sentences = []
    for sent in corpus:
        tokens = sent.split() if isinstance(sent, str) else list(sent)
        if tokens:
            sentences.append(tokens)
    if not sentences:
        raise ValueError("corpus contains no tokens")

    raw = _count_ngrams(sentences, order)
    used = _continuation_counts(raw, order)

    if discount == "estimate":
        discounts = [_estimate_discount(used[k], k + 1) for k in range(order)]
    else:
        discounts = list(discount) if hasattr(discount, "__len__") else [float(discount)] * order
        if len(discounts) != order:
            raise ValueError(f"need {order} discounts, got {len(discounts)}")
        if any(not (0.0 <= d <= 1.0) for d in discounts):
            raise ValueError("discounts must lie in [0, 1]")

    vocab = {w for (w,) in used[0]} | {UNK, EOS, BOS}
    event_vocab = sorted(vocab - {BOS})

    # probs[k]: gram -> linear interpolated probability
    probs: list[dict[tuple[str, ...], float]] = [dict() for _ in range(order)]
    bows: list[dict[tuple[str, ...], float]] = [dict() for _ in range(order)]

    d1 = discounts[0]
    total1 = sum(used[0].values())
    types1 = sum(1 for c in used[0].values() if c > 0)
    gamma1 = d1 * types1 / total1
    uniform = 1.0 / len(event_vocab)
    for w in event_vocab:
        c = used[0].get((w,), 0)
        probs[0][(w,)] = max(c - d1, 0.0) / total1 + gamma1 * uniform

    for k in range(2, order + 1):
        dk = discounts[k - 1]
        by_context = defaultdict(list)
        for gram, count in used[k - 1].items():
            by_context[gram[:-1]].append((gram[-1], count))
        for context, events in by_context.items():
            total = sum(c for _, c in events)
            gamma = dk * len(events) / total
            bows[k - 2][context] = gamma
            for w, c in events:
                lower = probs[k - 2][context[1:] + (w,)]
                probs[k - 1][context + (w,)] = max(c - dk, 0.0) / total + gamma * lower

    def to_log10(p: float) -> float:
        return math.log10(p) if p > 0.0 else LOG10_ZERO

    entries: list[dict[tuple[str, ...], tuple[float, float | None]]] = [dict() for _ in range(order)]
    for k in range(1, order + 1):
        for gram, p in probs[k - 1].items():
            bow = bows[k - 1].get(gram) if k < order else None
            entries[k - 1][gram] = (to_log10(p), to_log10(bow) if bow is not None else None)
    # BOS is context-only: placeholder probability, real backoff weight
    bos_bow = bows[0].get((BOS,))
    entries[0][(BOS,)] = (LOG10_ZERO, to_log10(bos_bow) if bos_bow is not None else None)

    return ArpaModel(order=order, entries=entries, vocab=vocab)


# ---------------------------------------------------------------------------
# ARPA text round trip
# ---------------------------------------------------------------------------

def write_arpa(model: ArpaModel) -> str:
    lines = ["\\data\\"]
    for k in range(1, model.order + 1):
        lines.append(f"ngram {k}={len(model.entries[k - 1])}")
    for k in range(1, model.order + 1):
        lines.append("")
        lines.append(f"\\{k}-grams:")
        for gram in sorted(model.entries[k - 1]):
            prob, bow = model.entries[k - 1][gram]
            row = f"{prob:.6f}\t{' '.join(gram)}"
            if bow is not None:
                row += f"\t{bow:.6f}"
            lines.append(row)
    lines.append("")
    lines.append("\\end\\")
    return "\n".join(lines) + "\n"


def read_arpa(text: str) -> ArpaModel:
    counts: dict[int, int] = {}
    entries: list[dict[tuple[str, ...], tuple[float, float | None]]] = []
    current_k = None
    in_data = False
    saw_end = False
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line:
            continue
        if line == "\\data\\":
            in_data = True
            continue
        if line == "\\end\\":
            saw_end = True
            break
        if line.endswith("-grams:") and line.startswith("\\"):
            try:
                current_k = int(line[1:].split("-")[0])
            except ValueError:
                raise ParseError(f"bad section header {line!r}", lineno)
            while len(entries) < current_k:
                entries.append({})
            in_data = False
            continue
        if in_data:
            if not line.startswith("ngram "):
                raise ParseError(f"unexpected line in data section: {line!r}", lineno)
            try:
                k, n = line[6:].split("=")
                counts[int(k)] = int(n)
            except ValueError:
                raise ParseError(f"bad ngram count line: {line!r}", lineno)
            continue
        if current_k is None:
            raise ParseError(f"entry outside any n-gram section: {line!r}", lineno)
        fields = line.split()
        if len(fields) == current_k + 1:
            bow = None
        elif len(fields) == current_k + 2:
            try:
                bow = float(fields[-1])
            except ValueError:
                raise ParseError(f"bad backoff value: {fields[-1]!r}", lineno)
            fields = fields[:-1]
        else:
            raise ParseError(
                f"expected {current_k + 1} or {current_k + 2} fields, got {len(fields)}",
                lineno,
            )
        try:
            prob = float(fields[0])
        except ValueError:
            raise ParseError(f"bad probability value: {fields[0]!r}", lineno)
        entries[current_k - 1][tuple(fields[1:])] = (prob, bow)
    if not saw_end:
        raise ParseError("missing \\end\\ marker")
    if not entries:
        raise ParseError("no n-gram sections found")
    order = len(entries)
    vocab = {w for (w,) in entries[0]} | {UNK, EOS}
    return ArpaModel(order=order, entries=entries, vocab=vocab)
