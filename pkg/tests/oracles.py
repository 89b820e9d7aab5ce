"""Independent reference computations used by the tests.

Deliberately naive: exact rational arithmetic and full enumeration, no code
shared with the package.
"""

from fractions import Fraction


def gini_exact(labels):
    n = len(labels)
    counts = {}
    for v in labels:
        counts[v] = counts.get(v, 0) + 1
    return 1 - sum(Fraction(c, n) ** 2 for c in counts.values())


def documented_threshold(below, above):
    mid = (below + above) / 2.0
    if not below <= mid < above:
        mid = below
    t = round(mid, 6)
    return t if below <= t < above else mid


def brute_force_split(X, y, min_leaf=1):
    """Enumerate every (feature, threshold) candidate; return the best
    ``(feature, threshold, Fraction gain)`` or ``None``."""
    n = len(y)
    parent = gini_exact(y)
    best = None
    for j in range(len(X[0])):
        values = sorted({row[j] for row in X})
        for a, b in zip(values, values[1:]):
            t = documented_threshold(a, b)
            left = [y[i] for i in range(n) if X[i][j] <= t]
            right = [y[i] for i in range(n) if X[i][j] > t]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            gain = parent - Fraction(len(left), n) * gini_exact(left) - Fraction(len(right), n) * gini_exact(right)
            if best is None or gain > best[2]:
                best = (j, t, gain)
    if best is None or best[2] <= 0:
        return None
    return best
