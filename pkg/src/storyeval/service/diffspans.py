"""Display-level diff between generated and edited text.

Both texts are partitioned losslessly into word / whitespace / other runs and
matched with the same longest-run pivot recursion the edit metric uses, so the
UI renders exactly what the metric sees. Concatenating matched+deleted spans
reproduces the generated text; matched+added reproduces the edited text.
"""

from __future__ import annotations

from ..metrics import pivot_match_blocks
from ..textproc import raw_partition

MATCHED = "matched"
ADDED = "added"
DELETED = "deleted"


def diff_spans(generated: str, edited: str) -> list[dict]:
    xs = raw_partition(generated)
    ys = raw_partition(edited)
    blocks = pivot_match_blocks(xs, ys) + [(len(xs), len(ys), 0)]
    spans: list[dict] = []
    ix = iy = 0
    for sx, sy, length in blocks:
        deleted = "".join(xs[ix:sx])
        if deleted:
            spans.append({"text": deleted, "kind": DELETED})
        added = "".join(ys[iy:sy])
        if added:
            spans.append({"text": added, "kind": ADDED})
        if length:
            spans.append({"text": "".join(xs[sx : sx + length]), "kind": MATCHED})
        ix = sx + length
        iy = sy + length
    return spans
