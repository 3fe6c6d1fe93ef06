"""Sparse multiindex calculus.

A multiindex is a finitely supported map from positive mode indices to
nonnegative integer counts.  All arithmetic is exact: counts, lengths,
factorials and multinomial weights are Python integers, so overflow never
occurs and combinatorial identities can be checked bit-exactly.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement


class MultiIndex:
    """Immutable sparse multiindex mu: {mode index -> count}.

    Only nonzero counts are stored; lookup of an absent key yields 0.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, entries=None):
        items = {}
        if entries:
            for k, v in dict(entries).items():
                k = int(k)
                v = int(v)
                if k < 1:
                    raise ValueError("mode indices must be positive, got %d" % k)
                if v < 0:
                    raise ValueError("counts must be nonnegative, got %d" % v)
                if v > 0:
                    items[k] = v
        self._items = tuple(sorted(items.items()))
        self._hash = hash(self._items)

    # -- basic protocol -------------------------------------------------

    def __getitem__(self, key):
        for k, v in self._items:
            if k == key:
                return v
        return 0

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __eq__(self, other):
        return isinstance(other, MultiIndex) and self._items == other._items

    def __hash__(self):
        return self._hash

    def __repr__(self):
        body = ", ".join("%d: %d" % kv for kv in self._items)
        return "MultiIndex({%s})" % body

    def keys(self):
        return [k for k, _ in self._items]

    def as_dict(self):
        return dict(self._items)

    # -- calculus --------------------------------------------------------

    @property
    def length(self):
        """|mu| = sum of counts."""
        return sum(v for _, v in self._items)

    def factorial(self):
        """mu! = product of count factorials (exact integer, >= 1)."""
        out = 1
        for _, v in self._items:
            out *= math.factorial(v)
        return out

    def add(self, other):
        """Component-wise sum."""
        out = dict(self._items)
        for k, v in other._items:
            out[k] = out.get(k, 0) + v
        return MultiIndex(out)

    def __add__(self, other):
        return self.add(other)

    def power(self, seq):
        """Multiindex power: prod_i seq[i]**mu(i).

        ``seq`` is indexed from 1, i.e. key k reads seq[k-1].  A key
        beyond the end of ``seq`` raises IndexError.
        """
        out = 1
        for k, v in self._items:
            if k > len(seq):
                raise IndexError("multiindex key %d exceeds sequence length %d"
                                 % (k, len(seq)))
            out = out * seq[k - 1] ** v
        return out

    def dense(self, dims):
        """Counts as a tuple over keys 1..dims."""
        out = [0] * dims
        for k, v in self._items:
            if k > dims:
                raise IndexError("key %d exceeds dims %d" % (k, dims))
            out[k - 1] = v
        return tuple(out)


def add(a, b):
    return a.add(b)


def power(seq, mu):
    return mu.power(seq)


def enumerate_of_length(k, dims):
    """All multiindices over keys 1..dims with |mu| = k.

    Deterministic order: descending lexicographic order of the dense
    tuple, e.g. k=2, dims=2 gives {1:2}, {1:1,2:1}, {2:2}.
    """
    if k < 0:
        raise ValueError("length must be nonnegative")
    if dims < 1:
        raise ValueError("dims must be positive")
    out = []
    # combinations_with_replacement over sorted keys yields ascending key
    # tuples, whose induced dense tuples are in descending lex order.
    for combo in combinations_with_replacement(range(1, dims + 1), k):
        entries = {}
        for key in combo:
            entries[key] = entries.get(key, 0) + 1
        out.append(MultiIndex(entries))
    return out


def enumerate_up_to_length(k_max, dims):
    """All multiindices with |mu| <= k_max, grouped by increasing length."""
    out = []
    for k in range(k_max + 1):
        out.extend(enumerate_of_length(k, dims))
    return out


def multinomial_weight(mu):
    """|mu|! / mu!  (exact integer)."""
    return math.factorial(mu.length) // mu.factorial()


def multinomial_identity_lhs(ts, k):
    """(sum_j t_j)**k, exact when the t_j are exact numbers."""
    s = sum(ts)
    return s ** k


def multinomial_identity_rhs(ts, k):
    """sum_{|mu|=k} (|mu|!/mu!) t**mu over keys 1..len(ts)."""
    total = 0
    for mu in enumerate_of_length(k, len(ts)):
        total += multinomial_weight(mu) * mu.power(ts)
    return total


def trinomial_sum(n):
    """sum over a+a'+a''=n of n!/(a! a'! a''!), exact; equals 3**n."""
    total = 0
    fn = math.factorial(n)
    for a in range(n + 1):
        for b in range(n - a + 1):
            c = n - a - b
            total += fn // (math.factorial(a) * math.factorial(b)
                            * math.factorial(c))
    return total


class TwoMultiIndex:
    """Pair mubar = (mu_plus, mu_minus) with combined length and factorial."""

    __slots__ = ("plus", "minus")

    def __init__(self, plus=None, minus=None):
        self.plus = plus if plus is not None else MultiIndex()
        self.minus = minus if minus is not None else MultiIndex()

    @property
    def length(self):
        return self.plus.length + self.minus.length

    def factorial(self):
        return self.plus.factorial() * self.minus.factorial()

    def add(self, other):
        return TwoMultiIndex(self.plus.add(other.plus),
                             self.minus.add(other.minus))

    def __add__(self, other):
        return self.add(other)

    def __eq__(self, other):
        return (isinstance(other, TwoMultiIndex)
                and self.plus == other.plus and self.minus == other.minus)

    def __hash__(self):
        return hash((self.plus, self.minus))

    def __repr__(self):
        return "TwoMultiIndex(%r, %r)" % (self.plus, self.minus)

    def power(self, seq_plus, seq_minus):
        """(b^+)^{mu^+} (b^-)^{mu^-} for two coefficient sequences."""
        return self.plus.power(seq_plus) * self.minus.power(seq_minus)


def splittings(mu, parts=3):
    """All ordered decompositions mu = alpha_1 + ... + alpha_parts.

    Yields tuples of MultiIndex.  Used by the generating-functional
    expansions, where each split carries a multinomial weight.
    """
    keys = mu.keys()

    def split_count(c, nparts):
        if nparts == 1:
            yield (c,)
            return
        for first in range(c + 1):
            for rest in split_count(c - first, nparts - 1):
                yield (first,) + rest

    def rec(idx, partial):
        if idx == len(keys):
            yield tuple(MultiIndex(p) for p in partial)
            return
        k = keys[idx]
        c = mu[k]
        for split in split_count(c, parts):
            new_partial = []
            for p, extra in zip(partial, split):
                q = dict(p)
                if extra:
                    q[k] = extra
                new_partial.append(q)
            yield from rec(idx + 1, new_partial)

    yield from rec(0, [{} for _ in range(parts)])


def split_weight(mu, parts_tuple):
    """mu! / (alpha_1! ... alpha_k!) for a splitting of mu (exact integer)."""
    denom = 1
    for a in parts_tuple:
        denom *= a.factorial()
    return mu.factorial() // denom
