"""Edit-overlap metrics plus the agreement statistics used by the dashboard.

The edit metric scores how much generated text survives in the published
version: it recursively pivots on the longest common contiguous token run,
then credits only runs containing at least one non-stopword. Longest common
subsequence metrics are provided for reference comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .textproc import StopwordList, TokenSequence, is_stopword


class MetricError(Exception):
    """Base class for metric computation failures."""


class EmptyInput(MetricError):
    """A side of the comparison has no tokens (degenerate suggestion or entry)."""


class InvalidAlpha(MetricError):
    """Weighted-subsequence exponent must exceed 1."""


class DegenerateInput(MetricError):
    """Correlation inputs are too short or constant."""


class InconsistentRaterCount(MetricError):
    """Ratings matrix rows do not all sum to the same rater count."""


@dataclass(frozen=True)
class MatchSpan:
    """A contiguous common run: ``x[start_x:start_x+length] == y[start_y:start_y+length]``.

    ``counted`` is True when the run contains at least one non-stopword and
    therefore contributes to the score.
    """

    start_x: int
    start_y: int
    length: int
    counted: bool = True


@dataclass(frozen=True)
class EditMetricReport:
    precision: float
    recall: float
    f1: float
    matched_tokens: int
    spans: tuple[MatchSpan, ...] = ()


def _f1(precision: float, recall: float) -> float:
    if precision + recall > 0:
        return 2 * precision * recall / (precision + recall)
    return 0.0


def _longest_common_run(
    xs: Sequence, ys: Sequence, x0: int, x1: int, y0: int, y1: int
) -> tuple[int, int, int]:
    """Longest common contiguous run within the given windows.

    Ties resolve to the smallest start in ``xs``, then in ``ys`` (the strict
    ``>`` below keeps the first maximum found, and candidates of equal length
    appear in that order).
    """
    best_x, best_y, best_n = x0, y0, 0
    runs: dict[int, int] = {}
    for i in range(x0, x1):
        new_runs: dict[int, int] = {}
        xi = xs[i]
        for j in range(y0, y1):
            if xi == ys[j]:
                k = runs.get(j - 1, 0) + 1
                new_runs[j] = k
                if k > best_n:
                    best_n = k
                    best_x = i - k + 1
                    best_y = j - k + 1
        runs = new_runs
    return best_x, best_y, best_n


def pivot_match_blocks(xs: Sequence, ys: Sequence) -> list[tuple[int, int, int]]:
    """All (start_x, start_y, length) blocks found by longest-run pivot recursion.

    The longest run splits both sequences; the procedure recurses on the left
    and right remainders independently. Blocks come back ordered and are
    non-overlapping in both sequences.
    """
    blocks: list[tuple[int, int, int]] = []
    stack = [(0, len(xs), 0, len(ys))]
    while stack:
        x0, x1, y0, y1 = stack.pop()
        if x0 >= x1 or y0 >= y1:
            continue
        sx, sy, n = _longest_common_run(xs, ys, x0, x1, y0, y1)
        if n == 0:
            continue
        blocks.append((sx, sy, n))
        stack.append((x0, sx, y0, sy))
        stack.append((sx + n, x1, sy + n, y1))
    blocks.sort()
    return blocks


def longest_common_substring(x: TokenSequence, y: TokenSequence) -> MatchSpan | None:
    """Maximal-length common contiguous run, or None when no token is shared.

    The ``counted`` flag is left True here; stopword accounting happens in
    :func:`user_matches`.
    """
    sx, sy, n = _longest_common_run(x.tokens, y.tokens, 0, len(x), 0, len(y))
    if n == 0:
        return None
    return MatchSpan(start_x=sx, start_y=sy, length=n)


def user_matches(
    x: TokenSequence, y: TokenSequence, stopwords: StopwordList
) -> list[MatchSpan]:
    """Pivot-recursion match spans with stopword accounting.

    Stopword-only runs still act as pivots (they partition the remaining
    space); they are merely flagged uncounted afterwards.
    """
    spans = []
    for sx, sy, n in pivot_match_blocks(x.tokens, y.tokens):
        counted = any(not is_stopword(tok, stopwords) for tok in x.tokens[sx : sx + n])
        spans.append(MatchSpan(sx, sy, n, counted))
    return spans


def strip_stopwords(seq: TokenSequence, stopwords: StopwordList) -> TokenSequence:
    kept = tuple(tok for tok in seq.tokens if not is_stopword(tok, stopwords))
    return TokenSequence(kept, seq.mode)


def user_score(
    x: TokenSequence,
    y: TokenSequence,
    stopwords: StopwordList,
    remove_stopwords: bool = False,
) -> EditMetricReport:
    """Precision/recall/F1 of counted matched tokens over |x| and |y|.

    ``remove_stopwords`` strips stopwords from both sides before matching
    (every surviving span is then counted); the default applies the stopword
    rule during counting only.
    """
    if remove_stopwords:
        x = strip_stopwords(x, stopwords)
        y = strip_stopwords(y, stopwords)
    if len(x) == 0 or len(y) == 0:
        raise EmptyInput("both sequences must contain at least one token")
    spans = user_matches(x, y, stopwords)
    matched = sum(s.length for s in spans if s.counted)
    precision = matched / len(x)
    recall = matched / len(y)
    return EditMetricReport(precision, recall, _f1(precision, recall), matched, tuple(spans))


def _lcs_length(xs: Sequence, ys: Sequence) -> int:
    if not xs or not ys:
        return 0
    prev = [0] * (len(ys) + 1)
    for i in range(1, len(xs) + 1):
        cur = [0] * (len(ys) + 1)
        xi = xs[i - 1]
        for j in range(1, len(ys) + 1):
            if xi == ys[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = cur[j - 1] if cur[j - 1] >= prev[j] else prev[j]
        prev = cur
    return prev[len(ys)]


def rouge_l(
    x: TokenSequence,
    y: TokenSequence,
    remove_stopwords: bool = False,
    stopwords: StopwordList | None = None,
) -> EditMetricReport:
    """Longest-common-subsequence overlap: P = LCS/|x|, R = LCS/|y|.

    The spans list stays empty: subsequence matches are not contiguous
    evidence. ``matched_tokens`` carries the LCS length.
    """
    if remove_stopwords:
        if stopwords is None:
            raise ValueError("remove_stopwords requires a stopword list")
        x = strip_stopwords(x, stopwords)
        y = strip_stopwords(y, stopwords)
    if len(x) == 0 or len(y) == 0:
        raise EmptyInput("both sequences must contain at least one token")
    lcs = _lcs_length(x.tokens, y.tokens)
    precision = lcs / len(x)
    recall = lcs / len(y)
    return EditMetricReport(precision, recall, _f1(precision, recall), lcs)


def rouge_w(x: TokenSequence, y: TokenSequence, alpha: float = 1.2) -> EditMetricReport:
    """Weighted LCS favoring consecutive matches, weight f(k) = k**alpha.

    Scores are f_inverse(WLCS / f(n)) per side, so a single run of length L in
    length-n text scores L/n while the same tokens scattered score lower.
    """
    if alpha <= 1:
        raise InvalidAlpha("alpha must be > 1")
    if len(x) == 0 or len(y) == 0:
        raise EmptyInput("both sequences must contain at least one token")

    def f(k: float) -> float:
        return k**alpha

    nx, ny = len(x), len(y)
    score = [[0.0] * (ny + 1) for _ in range(nx + 1)]
    run = [[0] * (ny + 1) for _ in range(nx + 1)]
    for i in range(1, nx + 1):
        xi = x.tokens[i - 1]
        for j in range(1, ny + 1):
            if xi == y.tokens[j - 1]:
                k = run[i - 1][j - 1]
                score[i][j] = score[i - 1][j - 1] + f(k + 1) - f(k)
                run[i][j] = k + 1
            else:
                score[i][j] = max(score[i - 1][j], score[i][j - 1])
    wlcs = score[nx][ny]
    precision = (wlcs / f(nx)) ** (1 / alpha)
    recall = (wlcs / f(ny)) ** (1 / alpha)
    matched = round(wlcs ** (1 / alpha))
    return EditMetricReport(precision, recall, _f1(precision, recall), matched)


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    n: int


def pearson_r(a: Sequence[float], b: Sequence[float]) -> CorrelationResult:
    """Sample Pearson correlation of two equal-length, non-constant series."""
    if len(a) != len(b):
        raise DegenerateInput("series lengths differ")
    n = len(a)
    if n < 2:
        raise DegenerateInput("need at least two observations")
    mean_a = sum(a) / n
    mean_b = sum(b) / n
    var_a = sum((v - mean_a) ** 2 for v in a)
    var_b = sum((v - mean_b) ** 2 for v in b)
    if var_a == 0 or var_b == 0:
        raise DegenerateInput("constant series has no defined correlation")
    cov = sum((u - mean_a) * (v - mean_b) for u, v in zip(a, b))
    return CorrelationResult(cov / math.sqrt(var_a * var_b), n)


def fleiss_kappa(matrix: Sequence[Sequence[int]]) -> float:
    """Fleiss' kappa over an items x categories count matrix.

    Every row must sum to the same rater count n >= 2. When chance agreement
    is exact (all raters, all items, one category), agreement is also exact
    and 1.0 is returned by convention.
    """
    rows = [list(row) for row in matrix]
    if len(rows) < 2:
        raise DegenerateInput("need at least two rated items")
    n = sum(rows[0])
    if n < 2:
        raise InconsistentRaterCount("need at least two raters")
    if any(sum(row) != n for row in rows):
        raise InconsistentRaterCount("rows must sum to the same rater count")
    n_items = len(rows)
    n_categories = len(rows[0])
    if any(len(row) != n_categories for row in rows):
        raise InconsistentRaterCount("rows must have the same number of categories")

    p_bar = sum(
        (sum(c * c for c in row) - n) / (n * (n - 1)) for row in rows
    ) / n_items
    category_totals = [sum(row[j] for row in rows) for j in range(n_categories)]
    p_e = sum((t / (n_items * n)) ** 2 for t in category_totals)
    if p_e == 1.0:
        return 1.0
    return (p_bar - p_e) / (1 - p_e)
