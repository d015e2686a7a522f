"""Sparse nonnegative measures on countable groups, with mass accounting.

A SparseMeasure is a finite list of weighted atoms plus a `lost_mass`
ledger: every operation that drops atoms (support budgets, truncations)
adds the dropped weight to the ledger instead of silently renormalizing.
Total-variation distances therefore come back as a pair
``(value, bracket)`` where the true distance between the ideal measures
lies within ``value +- bracket``.

Two arithmetic modes, never mixed:

* ``"exact"`` - Fraction weights, dict storage, bit-exact results;
* ``"float"`` - float64 weights; small convolutions run on dicts in
  canonical order, large ones on a packed int64 numpy kernel (see
  `groupwalk.codecs`) with overflowing atoms spilled to a dict side
  channel, so results are identical for any worker count.

Atom order everywhere is the group's spiral order (word length, then the
family's lexicographic rank); all tie-breaks reduce to it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from groupwalk.errors import BudgetError, SpecMismatchError
from groupwalk.groups import GSet, Group

_FAST_PAIR_CUTOFF = 200_000  # at or below this, the dict path is used
_FLUSH_ROWS = 1 << 22  # pending-row threshold before a dedup flush
_PAIR_LIMIT = 6 * 10**9  # refuse convolutions beyond this many pairs


def _zero(mode: str):
    return Fraction(0) if mode == "exact" else 0.0


def _coerce_mass(m, mode: str):
    if mode == "exact":
        if isinstance(m, Fraction):
            return m
        if isinstance(m, int):
            return Fraction(m)
        raise SpecMismatchError(f"exact mode needs Fraction weights, got {type(m).__name__}")
    if isinstance(m, (int, float)):
        return float(m)
    raise SpecMismatchError(f"float mode needs float weights, got {type(m).__name__}")


class SparseMeasure:
    """Finitely supported measure; see the module docstring for the contract."""

    __slots__ = ("group", "mode", "lost_mass", "_data", "_codes", "_masses")

    def __init__(self, group: Group, mode: str = "float", *, lost_mass=None):
        if mode not in ("float", "exact"):
            raise SpecMismatchError(f"unknown mode {mode!r}")
        self.group = group
        self.mode = mode
        self.lost_mass = _zero(mode) if lost_mass is None else _coerce_mass(lost_mass, mode)
        self._data: dict | None = {}
        self._codes: np.ndarray | None = None
        self._masses: np.ndarray | None = None

    # -- constructors --------------------------------------------------

    @classmethod
    def from_items(cls, group: Group, items, mode: str = "float", lost_mass=None) -> "SparseMeasure":
        mu = cls(group, mode, lost_mass=lost_mass)
        data: dict = {}
        for x, m in items.items() if isinstance(items, dict) else items:
            m = _coerce_mass(m, mode)
            if m < 0:
                raise SpecMismatchError(f"negative weight {m} at {x!r}")
            if m != 0:
                data[x] = data.get(x, _zero(mode)) + m
        for x in data:
            group.validate(x)
        mu._data = data
        return mu

    @classmethod
    def _from_packed(cls, group: Group, codes: np.ndarray, masses: np.ndarray, lost_mass=0.0) -> "SparseMeasure":
        mu = cls(group, "float", lost_mass=lost_mass)
        mu._data = None
        mu._codes = codes
        mu._masses = masses
        return mu

    # -- basic queries ---------------------------------------------------

    @property
    def is_packed(self) -> bool:
        return self._data is None

    def __len__(self) -> int:
        return len(self._codes) if self.is_packed else len(self._data)

    def total_mass(self):
        if self.is_packed:
            return float(np.sum(self._masses))
        if self.mode == "exact":
            return sum(self._data.values(), Fraction(0))
        return math.fsum(self._data.values())

    def mass_of(self, x):
        self.group.validate(x)
        if not self.is_packed:
            return self._data.get(x, _zero(self.mode))
        code = self.group.codec().encode_one(x)
        if code is None:
            return 0.0
        i = np.searchsorted(self._codes, np.uint64(code))
        if i < len(self._codes) and self._codes[i] == np.uint64(code):
            return float(self._masses[i])
        return 0.0

    def as_dict(self) -> dict:
        if not self.is_packed:
            return dict(self._data)
        codec = self.group.codec()
        return {
            codec.decode_one(int(c)): float(m)
            for c, m in zip(self._codes, self._masses)
        }

    def items_canonical(self) -> list:
        d = self._data if not self.is_packed else self.as_dict()
        return sorted(d.items(), key=lambda kv: self.group.sort_key(kv[0]))

    def support_sorted(self) -> list:
        return [x for x, _ in self.items_canonical()]

    def scaled(self, c) -> "SparseMeasure":
        c = _coerce_mass(c, self.mode)
        if c < 0:
            raise SpecMismatchError("scale factor must be >= 0")
        if self.is_packed:
            return SparseMeasure._from_packed(
                self.group, self._codes.copy(), self._masses * c, self.lost_mass * c
            )
        return SparseMeasure.from_items(
            self.group,
            {x: m * c for x, m in self._data.items()},
            self.mode,
            lost_mass=self.lost_mass * c,
        )

    # -- representations -------------------------------------------------

    def _packed_view(self):
        """(codes sorted ascending, masses, leftover dict items)."""
        if self.is_packed:
            return self._codes, self._masses, []
        codec = self.group.codec()
        if codec is None:
            raise SpecMismatchError(f"no packed codec for {self.group.spec_text()}")
        codes, masses, left = [], [], []
        for x, m in self._data.items():
            c = codec.encode_one(x)
            if c is None:
                left.append((x, m))
            else:
                codes.append(c)
                masses.append(m)
        codes = np.array(codes, dtype=np.uint64)
        masses = np.array(masses, dtype=np.float64)
        order = np.argsort(codes, kind="stable")
        return codes[order], masses[order], left

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        lines = [
            "groupwalk-measure 1",
            f"group {self.group.spec_text()}",
            f"mode {self.mode}",
            f"lost {_mass_to_text(self.lost_mass, self.mode)}",
            f"atoms {len(self)}",
        ]
        for x, m in self.items_canonical():
            lines.append(f"{_mass_to_text(m, self.mode)} {self.group.element_to_text(x)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SparseMeasure":
        from groupwalk.groups import parse_group

        lines = [
            l for l in text.splitlines() if l.strip() and not l.lstrip().startswith("#")
        ]
        if not lines or lines[0].split() != ["groupwalk-measure", "1"]:
            raise SpecMismatchError("not a groupwalk-measure v1 payload")
        hdr = {}
        for line in lines[1:5]:
            k, _, v = line.partition(" ")
            hdr[k] = v.strip()
        group = parse_group(hdr["group"])
        mode = hdr["mode"]
        lost = _mass_from_text(hdr["lost"], mode)
        n = int(hdr["atoms"])
        body = lines[5 : 5 + n]
        if len(body) != n:
            raise SpecMismatchError(f"expected {n} atom lines, found {len(body)}")
        items = []
        for line in body:
            m_txt, _, el_txt = line.partition(" ")
            items.append((group.element_from_text(el_txt.strip()), _mass_from_text(m_txt, mode)))
        return cls.from_items(group, items, mode, lost_mass=lost)

    def __repr__(self):
        return (
            f"SparseMeasure({self.group.spec_text()}, mode={self.mode}, "
            f"atoms={len(self)}, total={self.total_mass()}, lost={self.lost_mass})"
        )


def _mass_to_text(m, mode: str) -> str:
    if mode == "exact":
        return f"{m.numerator}/{m.denominator}"
    return float(m).hex()


def _mass_from_text(s: str, mode: str):
    if mode == "exact":
        num, _, den = s.partition("/")
        return Fraction(int(num), int(den or "1"))
    return float.fromhex(s)


# -- constructors --------------------------------------------------------


def delta(group: Group, x=None, mode: str = "float") -> SparseMeasure:
    """Point mass at x (identity when omitted)."""
    if x is None:
        x = group.identity
    group.validate(x)
    one = Fraction(1) if mode == "exact" else 1.0
    return SparseMeasure.from_items(group, [(x, one)], mode)


def uniform(S, mode: str = "float", group: Group | None = None) -> SparseMeasure:
    """Uniform probability measure on a finite set (GSet or iterable)."""
    if isinstance(S, GSet):
        group = S.group
        elements = list(S.elements)
    else:
        if group is None:
            raise SpecMismatchError("uniform needs a GSet or an explicit group")
        elements = list(S)
    if not elements:
        raise SpecMismatchError("uniform measure on empty set")
    n = len(set(elements))
    w = Fraction(1, n) if mode == "exact" else 1.0 / n
    return SparseMeasure.from_items(group, [(x, w) for x in set(elements)], mode)


# -- shared accounting helpers -------------------------------------------


def _check_compat(mu: SparseMeasure, nu: SparseMeasure) -> None:
    if mu.group != nu.group:
        raise SpecMismatchError("operands live on different groups")
    if mu.mode != nu.mode:
        raise SpecMismatchError(f"mixed modes: {mu.mode} vs {nu.mode}")


def _propagated_lost(mu: SparseMeasure, nu: SparseMeasure):
    """Worst-case unlocated mass of mu*nu given each operand's ledger."""
    t_mu, t_nu = mu.total_mass(), nu.total_mass()
    return mu.lost_mass * (t_nu + nu.lost_mass) + nu.lost_mass * t_mu


def _prune_dict(group: Group, data: dict, budget: int, mode: str):
    """Keep the `budget` heaviest atoms; ties resolved in spiral order.

    Returns (kept dict, pruned mass).
    """
    if len(data) <= budget:
        return data, _zero(mode)
    ranked = sorted(data.items(), key=lambda kv: group.sort_key(kv[0]))
    ranked.sort(key=lambda kv: kv[1], reverse=True)  # stable: spiral order within ties
    kept = dict(ranked[:budget])
    dropped = [m for _, m in ranked[budget:]]
    pruned = sum(dropped, Fraction(0)) if mode == "exact" else math.fsum(dropped)
    return kept, pruned


def prune(mu: SparseMeasure, min_mass) -> SparseMeasure:
    """Move every atom with mass < min_mass to the lost_mass ledger."""
    if min_mass < 0:
        raise SpecMismatchError("prune threshold must be >= 0")
    if mu.is_packed:
        keep = mu._masses >= min_mass
        pruned = float(np.sum(mu._masses[~keep]))
        return SparseMeasure._from_packed(
            mu.group, mu._codes[keep], mu._masses[keep], mu.lost_mass + pruned
        )
    kept = {x: m for x, m in mu._data.items() if m >= min_mass}
    dropped = [m for m in mu._data.values() if m < min_mass]
    pruned = sum(dropped, Fraction(0)) if mu.mode == "exact" else math.fsum(dropped)
    return SparseMeasure.from_items(mu.group, kept, mu.mode, lost_mass=mu.lost_mass + pruned)


def prune_to_budget(mu: SparseMeasure, budget: int) -> SparseMeasure:
    """Restrict mu to its `budget` heaviest atoms, moving the rest to lost_mass."""
    if budget < 1:
        raise BudgetError(f"budget must be >= 1, got {budget}")
    if len(mu) <= budget:
        return mu
    if not mu.is_packed:
        kept, pruned = _prune_dict(mu.group, mu._data, budget, mu.mode)
        return SparseMeasure.from_items(mu.group, kept, mu.mode, lost_mass=mu.lost_mass + pruned)
    codes, masses, _, side, pruned = _select_top(
        mu.group, mu._codes, mu._masses, {}, budget
    )
    assert not side
    return SparseMeasure._from_packed(mu.group, codes, masses, mu.lost_mass + pruned)


def _select_top(group: Group, codes: np.ndarray, masses: np.ndarray, side: dict, budget: int):
    """Top-`budget` atoms across the packed pool and the dict side pool.

    Ties at the cutoff mass are resolved by spiral order (packed ties are
    decoded first). Returns (codes, masses, kept_flags_unused, side_kept,
    pruned_mass).
    """
    codec = group.codec()
    total = len(codes) + len(side)
    if total <= budget:
        return codes, masses, None, side, 0.0
    side_items = sorted(side.items(), key=lambda kv: group.sort_key(kv[0]))
    all_masses = np.concatenate(
        [masses, np.array([m for _, m in side_items], dtype=np.float64)]
    ) if side_items else masses
    cutoff = np.partition(all_masses, total - budget)[total - budget]
    grand = float(np.sum(all_masses))

    above_mask = masses > cutoff
    side_above = [(x, m) for x, m in side_items if m > cutoff]
    n_above = int(np.count_nonzero(above_mask)) + len(side_above)
    need = budget - n_above

    tie_mask = masses == cutoff
    tie_codes = codes[tie_mask]
    tie_pairs = [(codec.decode_one(int(c)), c) for c in tie_codes]
    tied = [(x, cutoff, c) for x, c in tie_pairs] + [
        (x, m, None) for x, m in side_items if m == cutoff
    ]
    tied.sort(key=lambda t: group.sort_key(t[0]))
    kept_tied = tied[:need]

    kept_tie_codes = np.array(
        sorted(int(c) for _, _, c in kept_tied if c is not None), dtype=np.uint64
    )
    new_codes = np.concatenate([codes[above_mask], kept_tie_codes])
    new_masses = np.concatenate(
        [masses[above_mask], np.full(len(kept_tie_codes), cutoff)]
    )
    order = np.argsort(new_codes, kind="stable")
    new_codes = new_codes[order]
    new_masses = new_masses[order]

    side_kept = dict(side_above)
    side_kept.update((x, m) for x, m, c in kept_tied if c is None)
    kept_sum = float(np.sum(new_masses)) + math.fsum(side_kept.values())
    pruned = grand - kept_sum
    return new_codes, new_masses, None, side_kept, max(pruned, 0.0)


# -- convolution -----------------------------------------------------------


def convolve_reference(
    mu: SparseMeasure, nu: SparseMeasure, budget: int | None = None
) -> SparseMeasure:
    """Naive pairwise convolution, kept deliberately simple for oracle use."""
    _check_compat(mu, nu)
    g = mu.group
    zero = _zero(mu.mode)
    acc: dict = {}
    for x, mx in mu.items_canonical():
        for y, wy in nu.items_canonical():
            z = g.mul(x, y)
            acc[z] = acc.get(z, zero) + mx * wy
    lost = _propagated_lost(mu, nu)
    if budget is not None and len(acc) > budget:
        acc, pruned = _prune_dict(g, acc, budget, mu.mode)
        lost = lost + pruned
    return SparseMeasure.from_items(g, acc, mu.mode, lost_mass=lost)


def _convolve_exact(mu: SparseMeasure, nu: SparseMeasure) -> dict:
    """Integer-numerator convolution over a common denominator."""
    mu_items = mu.items_canonical()
    nu_items = nu.items_canonical()
    d_mu = math.lcm(*(m.denominator for _, m in mu_items)) if mu_items else 1
    d_nu = math.lcm(*(m.denominator for _, m in nu_items)) if nu_items else 1
    sm = [(x, m.numerator * (d_mu // m.denominator)) for x, m in mu_items]
    sn = [(y, m.numerator * (d_nu // m.denominator)) for y, m in nu_items]
    g = mu.group
    acc: dict = {}
    for x, nx in sm:
        for y, ny in sn:
            z = g.mul(x, y)
            acc[z] = acc.get(z, 0) + nx * ny
    den = d_mu * d_nu
    return {z: Fraction(n, den) for z, n in acc.items()}


def _convolve_fast(
    mu: SparseMeasure, nu: SparseMeasure, budget: int | None, threads: int
) -> SparseMeasure:
    g = mu.group
    codec = g.codec()
    mu_codes, mu_masses, mu_left = mu._packed_view()
    nu_items = nu.items_canonical()

    acc_codes = np.array([], dtype=np.uint64)
    acc_masses = np.array([], dtype=np.float64)
    pend_codes: list[np.ndarray] = [acc_codes]
    pend_masses: list[np.ndarray] = [acc_masses]
    pend_rows = 0
    side: dict = {}

    def flush():
        nonlocal acc_codes, acc_masses, pend_codes, pend_masses, pend_rows
        cat_c = np.concatenate(pend_codes)
        cat_m = np.concatenate(pend_masses)
        acc_codes, inv = np.unique(cat_c, return_inverse=True)
        acc_masses = np.bincount(inv, weights=cat_m, minlength=len(acc_codes))
        pend_codes = [acc_codes]
        pend_masses = [acc_masses]
        pend_rows = 0

    def one_atom(y):
        return codec.mul_right(mu_codes, y)

    if threads > 1 and len(nu_items) > 1:
        pool = ThreadPoolExecutor(max_workers=threads)
        results = pool.map(one_atom, [y for y, _ in nu_items])
    else:
        pool = None
        results = (one_atom(y) for y, _ in nu_items)

    try:
        for (y, wy), (out, ok) in zip(nu_items, results):
            if bool(ok.all()):
                pend_codes.append(out)
                pend_masses.append(mu_masses * wy)
                pend_rows += len(out)
            else:
                pend_codes.append(out[ok])
                pend_masses.append(mu_masses[ok] * wy)
                pend_rows += int(np.count_nonzero(ok))
                for i in np.nonzero(~ok)[0]:
                    x = codec.decode_one(int(mu_codes[i]))
                    z = g.mul(x, y)
                    side[z] = side.get(z, 0.0) + float(mu_masses[i]) * wy
            for x, mx in mu_left:
                z = g.mul(x, y)
                side[z] = side.get(z, 0.0) + mx * wy
            if pend_rows >= _FLUSH_ROWS:
                flush()
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    flush()

    lost = _propagated_lost(mu, nu)
    if budget is not None and len(acc_codes) + len(side) > budget:
        acc_codes, acc_masses, _, side, pruned = _select_top(
            g, acc_codes, acc_masses, side, budget
        )
        lost += pruned
    if side:
        data = {
            codec.decode_one(int(c)): float(m)
            for c, m in zip(acc_codes, acc_masses)
        }
        for x, m in side.items():
            data[x] = data.get(x, 0.0) + m
        return SparseMeasure.from_items(g, data, "float", lost_mass=lost)
    return SparseMeasure._from_packed(g, acc_codes, acc_masses, lost)


def convolve(
    mu: SparseMeasure,
    nu: SparseMeasure,
    budget: int | None = None,
    threads: int = 1,
) -> SparseMeasure:
    """mu * nu with budget pruning; fast path for large float convolutions.

    The dict path and `convolve_reference` perform bit-identical float
    arithmetic; the packed path differs only in summation grouping and is
    byte-reproducible for any `threads` value.
    """
    _check_compat(mu, nu)
    if budget is not None and budget < 1:
        raise BudgetError(f"budget must be >= 1, got {budget}")
    pairs = len(mu) * len(nu)
    if pairs > _PAIR_LIMIT:
        raise BudgetError(f"convolution of {len(mu)} x {len(nu)} atoms refused", stage="convolve")
    g = mu.group
    if mu.mode == "exact":
        acc = _convolve_exact(mu, nu)
        lost = _propagated_lost(mu, nu)
        if budget is not None and len(acc) > budget:
            acc, pruned = _prune_dict(g, acc, budget, "exact")
            lost = lost + pruned
        return SparseMeasure.from_items(g, acc, "exact", lost_mass=lost)
    if g.codec() is None or pairs <= _FAST_PAIR_CUTOFF:
        return convolve_reference(mu, nu, budget)
    return _convolve_fast(mu, nu, budget, threads)


# -- translations and distance ----------------------------------------------


def translate_left(g_el, mu: SparseMeasure) -> SparseMeasure:
    """Pushforward by left multiplication: (g . mu)(A) = mu(g^-1 A)."""
    grp = mu.group
    grp.validate(g_el)
    return SparseMeasure.from_items(
        grp,
        [(grp.mul(g_el, x), m) for x, m in (mu._data or mu.as_dict()).items()],
        mu.mode,
        lost_mass=mu.lost_mass,
    )


def translate_right(mu: SparseMeasure, g_el) -> SparseMeasure:
    """Pushforward by right multiplication."""
    grp = mu.group
    grp.validate(g_el)
    return SparseMeasure.from_items(
        grp,
        [(grp.mul(x, g_el), m) for x, m in (mu._data or mu.as_dict()).items()],
        mu.mode,
        lost_mass=mu.lost_mass,
    )


def tv_left_translate(mu: SparseMeasure, t) -> tuple:
    """tv_distance(translate_left(t, mu), mu) without materializing the translate.

    For central t on a packed measure this is a single vectorized pass
    (t*x = x*t); otherwise it falls back to the dict route.
    """
    grp = mu.group
    grp.validate(t)
    bracket = mu.lost_mass + mu.lost_mass
    if t == grp.identity:
        return (_zero(mu.mode), bracket)
    if mu.is_packed and grp.is_central(t):
        codec = grp.codec()
        shifted, ok = codec.mul_right(mu._codes, t)
        cat = np.concatenate([shifted[ok], mu._codes])
        w = np.concatenate([mu._masses[ok], -mu._masses])
        uniq, inv = np.unique(cat, return_inverse=True)
        sums = np.bincount(inv, weights=w, minlength=len(uniq))
        value = float(np.sum(np.abs(sums)))
        # atoms pushed out of codec range sit at positions the packed union
        # cannot see; each contributes its whole mass to the difference
        value += float(np.sum(mu._masses[~ok]))
        return value, bracket
    return tv_distance(translate_left(t, mu), mu)


def tv_distance(mu: SparseMeasure, nu: SparseMeasure):
    """L1 distance between the located parts, with an uncertainty bracket.

    Returns (value, bracket): the distance between the ideal measures is
    value +- bracket, where bracket = mu.lost_mass + nu.lost_mass.
    """
    _check_compat(mu, nu)
    bracket = mu.lost_mass + nu.lost_mass
    if mu.mode == "exact":
        keys = set(mu._data) | set(nu._data)
        z = Fraction(0)
        value = sum((abs(mu._data.get(k, z) - nu._data.get(k, z)) for k in keys), z)
        return value, bracket
    if (mu.is_packed or nu.is_packed) and mu.group.codec() is not None:
        mc, mm, ml = mu._packed_view()
        nc, nm, nl = nu._packed_view()
        cat = np.concatenate([mc, nc])
        w = np.concatenate([mm, -nm])
        uniq, inv = np.unique(cat, return_inverse=True)
        sums = np.bincount(inv, weights=w, minlength=len(uniq))
        value = float(np.sum(np.abs(sums)))
        if ml or nl:
            left: dict = {}
            for x, m in ml:
                left[x] = left.get(x, 0.0) + m
            for x, m in nl:
                left[x] = left.get(x, 0.0) - m
            value += math.fsum(abs(v) for v in left.values())
        return value, bracket
    md, nd = mu._data, nu._data
    keys = sorted(set(md) | set(nd), key=mu.group.sort_key)
    value = math.fsum(abs(md.get(k, 0.0) - nd.get(k, 0.0)) for k in keys)
    return value, bracket
