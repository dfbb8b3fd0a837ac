"""Independent reference computations used as test oracles.

None of these share code paths with the package implementation.
"""

from __future__ import annotations

import math
from itertools import permutations

BEGIN_KEY = (0, 0xFFFF_FFFF_FFFF_FFFF)


def rga_tree_text(inserts, deleted):
    """Text of an RGA built from per-character inserts.

    ``inserts`` is an iterable of ``((clock, replica), (origin_clock, origin_replica), content)``;
    ``deleted`` a set of character ids. Children of each character are ordered
    newest-first and the tree is walked in pre-order.
    """
    children = {}
    chars = {}
    for (clock, replica), origin, content in inserts:
        prev = tuple(origin)
        for i, ch in enumerate(content):
            cid = (clock + i, replica)
            chars[cid] = ch
            children.setdefault(prev, []).append(cid)
            prev = cid
    out = []
    stack = [BEGIN_KEY]
    while stack:
        node = stack.pop()
        if node != BEGIN_KEY and node not in deleted:
            out.append(chars[node])
        kids = sorted(children.get(node, ()), reverse=True)
        stack.extend(reversed(kids))
    return "".join(out)


def lww_winner(writes):
    """``writes`` = [(clock, replica, value)]; highest (clock, replica) wins."""
    best = None
    for clock, replica, value in writes:
        if best is None or (clock, replica) > (best[0], best[1]):
            best = (clock, replica, value)
    return best[2]


def all_orders(items):
    return list(permutations(items))


def type7_quantile(values, q):
    xs = sorted(values)
    h = (len(xs) - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def wilcoxon_bruteforce(pairs):
    """Plain-loop signed-rank test: returns (W, p) with the same conventions.

    Zero differences dropped, average ranks for ties, normal approximation with
    tie-corrected variance and continuity correction, W = min(W+, W-).
    """
    diffs = [a - b for a, b in pairs if a - b != 0]
    n = len(diffs)
    absd = [abs(d) for d in diffs]
    ranks = []
    for x in absd:
        below = sum(1 for y in absd if y < x)
        equal = sum(1 for y in absd if y == x)
        ranks.append(below + (equal + 1) / 2.0)
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    groups = {}
    for x in absd:
        groups[x] = groups.get(x, 0) + 1
    tie = sum(t**3 - t for t in groups.values())
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie / 48.0
    mean = n * (n + 1) / 4.0
    d = w_plus - mean
    sign = (d > 0) - (d < 0)
    z = (d - 0.5 * sign) / math.sqrt(var)
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2)))
    return min(w_plus, w_minus), p


def cohens_dz_plain(pairs):
    diffs = [a - b for a, b in pairs]
    n = len(diffs)
    m = sum(diffs) / n
    var = sum((x - m) ** 2 for x in diffs) / (n - 1)
    return m / math.sqrt(var)
