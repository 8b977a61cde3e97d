"""Exact scalar fields: sparse rational-coefficient polynomials, rational
functions, and forward-mode jets.

``Poly`` and ``RatFn`` are the symbolic backend (exact arithmetic over
``fractions.Fraction``, identity testing by normal form / cross-multiplication).
``Jet`` carries a value together with first partials through every arithmetic
operation and is the numeric backend; ``JetRule`` wraps an opaque callable
point -> Jet for fields that have no symbolic form.

Printing is deterministic: terms are emitted in descending graded-lexicographic
order, so equal polynomials always print to identical bytes and every printed
polynomial re-parses to itself.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

from .errors import (
    BackendError,
    DimensionError,
    ExprSyntaxError,
    UnknownVariableError,
    ZeroDivisionPolyError,
)

Scalar = Union[int, Fraction]


def _as_coeff(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational coefficient, got {type(x).__name__}")


class Poly:
    """Sparse multivariate polynomial with Fraction coefficients.

    Terms are kept in a dict mapping exponent tuples to nonzero coefficients.
    Instances are treated as immutable; all operations return new objects.
    """

    __slots__ = ("vars", "terms")
    __hash__ = None  # equality crosses types (RatFn), so hashing is disabled

    def __init__(self, vars: Sequence[str], terms: dict | None = None):
        self.vars = tuple(vars)
        clean = {}
        if terms:
            nv = len(self.vars)
            for exps, c in terms.items():
                c = _as_coeff(c)
                if not c:
                    continue
                if len(exps) != nv or any(e < 0 for e in exps):
                    raise ValueError(f"bad exponent tuple {exps!r} for {nv} variables")
                clean[tuple(exps)] = c
        self.terms = clean

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls, vars: Sequence[str]) -> "Poly":
        return cls(vars, {})

    @classmethod
    def const(cls, vars: Sequence[str], c) -> "Poly":
        c = _as_coeff(c)
        if not c:
            return cls(vars, {})
        return cls(vars, {(0,) * len(vars): c})

    @classmethod
    def var(cls, vars: Sequence[str], which) -> "Poly":
        vars = tuple(vars)
        i = vars.index(which) if isinstance(which, str) else int(which)
        exps = [0] * len(vars)
        exps[i] = 1
        return cls(vars, {tuple(exps): Fraction(1)})

    # ---- predicates and views -----------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def total_degree(self) -> int:
        """Degree of the zero polynomial is -1 by convention here."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def degree_in(self, i: int) -> int:
        if not self.terms:
            return -1
        return max(e[i] for e in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((0,) * len(self.vars), Fraction(0))

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def homogeneous_component(self, k: int) -> "Poly":
        return Poly(self.vars, {e: c for e, c in self.terms.items() if sum(e) == k})

    def homogeneous_components(self) -> dict[int, "Poly"]:
        out: dict[int, dict] = {}
        for e, c in self.terms.items():
            out.setdefault(sum(e), {})[e] = c
        return {k: Poly(self.vars, t) for k, t in sorted(out.items())}

    def support_vars(self) -> set[int]:
        """Indices of variables that actually occur."""
        used = set()
        for e in self.terms:
            for i, p in enumerate(e):
                if p:
                    used.add(i)
        return used

    # ---- arithmetic ----------------------------------------------------

    def _check(self, other: "Poly"):
        if self.vars != other.vars:
            raise DimensionError(
                f"variable mismatch: {self.vars} vs {other.vars}"
            )

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.vars, other)
        if isinstance(other, Poly):
            self._check(other)
            terms = dict(self.terms)
            for e, c in other.terms.items():
                s = terms.get(e, Fraction(0)) + c
                if s:
                    terms[e] = s
                else:
                    terms.pop(e, None)
            out = Poly.__new__(Poly)
            out.vars = self.vars
            out.terms = terms
            return out
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        out = Poly.__new__(Poly)
        out.vars = self.vars
        out.terms = {e: -c for e, c in self.terms.items()}
        return out

    def __sub__(self, other):
        if isinstance(other, Poly):
            return self + (-other)
        if isinstance(other, (int, Fraction)):
            return self + Poly.const(self.vars, -_as_coeff(other))
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.vars, other) + (-self)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_coeff(other)
            if not c:
                return Poly.zero(self.vars)
            out = Poly.__new__(Poly)
            out.vars = self.vars
            out.terms = {e: k * c for e, k in self.terms.items()}
            return out
        if isinstance(other, Poly):
            self._check(other)
            return self._mul_poly(other, None)
        return NotImplemented

    __rmul__ = __mul__

    def _mul_poly(self, other: "Poly", cap: int | None) -> "Poly":
        if not self.terms or not other.terms:
            return Poly.zero(self.vars)
        terms: dict = {}
        if cap is None:
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    s = terms.get(e, Fraction(0)) + c1 * c2
                    if s:
                        terms[e] = s
                    else:
                        terms.pop(e, None)
        else:
            left = [(sum(e), e, c) for e, c in self.terms.items()]
            right = [(sum(e), e, c) for e, c in other.terms.items()]
            for d1, e1, c1 in left:
                for d2, e2, c2 in right:
                    if d1 + d2 > cap:
                        continue
                    e = tuple(a + b for a, b in zip(e1, e2))
                    s = terms.get(e, Fraction(0)) + c1 * c2
                    if s:
                        terms[e] = s
                    else:
                        terms.pop(e, None)
        out = Poly.__new__(Poly)
        out.vars = self.vars
        out.terms = terms
        return out

    def mul_trunc(self, other: "Poly", cap: int) -> "Poly":
        """Product with every term of total degree > cap dropped."""
        self._check(other)
        return self._mul_poly(other, cap)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers take non-negative integers")
        result = Poly.const(self.vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_coeff(other)
            if not c:
                raise ZeroDivisionPolyError("division by zero constant")
            return self * (Fraction(1) / c)
        if isinstance(other, Poly):
            return RatFn(self, other)
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.vars == other.vars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == Poly.const(self.vars, other).terms
        if isinstance(other, RatFn):
            return other == self
        return NotImplemented

    # ---- calculus -------------------------------------------------------

    def diff(self, which) -> "Poly":
        i = self.vars.index(which) if isinstance(which, str) else int(which)
        terms = {}
        for e, c in self.terms.items():
            if e[i]:
                d = list(e)
                d[i] -= 1
                terms[tuple(d)] = c * e[i]
        return Poly(self.vars, terms)

    def gradient(self) -> list["Poly"]:
        return [self.diff(i) for i in range(len(self.vars))]

    # ---- evaluation ------------------------------------------------------

    def eval(self, point: Sequence):
        """Value at a point; exact when the point is exact."""
        total = Fraction(0) if all(isinstance(x, (int, Fraction)) for x in point) else 0.0
        for e, c in self.terms.items():
            m = c
            for x, p in zip(point, e):
                if p:
                    m = m * x**p
            total = total + m
        return total

    def eval_jet(self, point: Sequence) -> "Jet":
        n = len(self.vars)
        if len(point) != n:
            raise DimensionError(f"point has {len(point)} coordinates, field has {n}")
        exact = all(isinstance(x, (int, Fraction)) for x in point)
        zero = Fraction(0) if exact else 0.0
        val = zero
        parts = [zero] * n
        for e, c in self.terms.items():
            m = c
            for x, p in zip(point, e):
                if p:
                    m = m * x**p
            val = val + m
            for j in range(n):
                if e[j]:
                    d = c * e[j]
                    for i, (x, p) in enumerate(zip(point, e)):
                        q = p - 1 if i == j else p
                        if q:
                            d = d * x**q
                    parts[j] = parts[j] + d
        return Jet(val, tuple(parts))

    def subs(self, replacements: Sequence["Poly"], cap: int | None = None) -> "Poly":
        """Substitute replacements[i] for variable i.  All replacements must
        share one variable tuple, which becomes the result's."""
        if len(replacements) != len(self.vars):
            raise DimensionError("need one replacement per variable")
        if not replacements:
            raise DimensionError("cannot substitute into a polynomial with no variables")
        new_vars = replacements[0].vars
        for r in replacements:
            if r.vars != new_vars:
                raise DimensionError("replacements disagree on variables")
        out = Poly.zero(new_vars)
        pow_cache: dict[tuple[int, int], Poly] = {}

        def power(i: int, k: int) -> Poly:
            key = (i, k)
            if key not in pow_cache:
                if k == 0:
                    pow_cache[key] = Poly.const(new_vars, 1)
                else:
                    prev = power(i, k - 1)
                    nxt = prev.mul_trunc(replacements[i], cap) if cap is not None else prev * replacements[i]
                    pow_cache[key] = nxt
            return pow_cache[key]

        for e, c in self.terms.items():
            term = Poly.const(new_vars, c)
            for i, p in enumerate(e):
                if p:
                    term = term.mul_trunc(power(i, p), cap) if cap is not None else term * power(i, p)
            out = out + term
        return out

    def rename(self, new_vars: Sequence[str], index_map: Sequence[int] | None = None) -> "Poly":
        """Re-embed onto a new variable tuple.  ``index_map[i]`` gives the slot
        of old variable i in ``new_vars`` (defaults to name lookup)."""
        new_vars = tuple(new_vars)
        if index_map is None:
            index_map = [new_vars.index(v) for v in self.vars]
        terms = {}
        for e, c in self.terms.items():
            ne = [0] * len(new_vars)
            for i, p in enumerate(e):
                if p:
                    ne[index_map[i]] += p
            terms[tuple(ne)] = terms.get(tuple(ne), Fraction(0)) + c
        return Poly(new_vars, terms)

    def truncate(self, cap: int) -> "Poly":
        return Poly(self.vars, {e: c for e, c in self.terms.items() if sum(e) <= cap})

    # ---- printing --------------------------------------------------------

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Descending graded-lex: higher total degree first, then lexicographic
        on the exponent tuple."""
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def _monomial_str(self, e) -> str:
        parts = []
        for v, p in zip(self.vars, e):
            if p == 1:
                parts.append(v)
            elif p > 1:
                parts.append(f"{v}^{p}")
        return "*".join(parts)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for idx, (e, c) in enumerate(self.sorted_terms()):
            mono = self._monomial_str(e)
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            if idx == 0:
                chunks.append(f"-{body}" if c < 0 else body)
            else:
                chunks.append(f" - {body}" if c < 0 else f" + {body}")
        return "".join(chunks)

    def __repr__(self) -> str:
        return f"Poly({str(self)!r})"


def _content(p: Poly) -> Fraction:
    """Positive rational c such that p/c has coprime integer coefficients."""
    if p.is_zero:
        return Fraction(1)
    num = 0
    den = 1
    for c in p.terms.values():
        num = math.gcd(num, abs(c.numerator))
        den = den * c.denominator // math.gcd(den, c.denominator)
    return Fraction(num, den)


def _leading_coeff(p: Poly) -> Fraction:
    if p.is_zero:
        return Fraction(0)
    e = max(p.terms, key=lambda t: (sum(t), t))
    return p.terms[e]


def _single_var(p: Poly) -> int | None:
    used = p.support_vars()
    if len(used) == 1:
        return used.pop()
    return None


def _uni_coeffs(p: Poly, i: int) -> list[Fraction]:
    out = [Fraction(0)] * (p.degree_in(i) + 1)
    for e, c in p.terms.items():
        out[e[i]] += c
    return out


def _uni_to_poly(coeffs: Sequence[Fraction], vars, i) -> Poly:
    terms = {}
    for k, c in enumerate(coeffs):
        if c:
            e = [0] * len(vars)
            e[i] = k
            terms[tuple(e)] = c
    return Poly(vars, terms)


def _uni_gcd(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    def deg(c):
        d = len(c) - 1
        while d >= 0 and not c[d]:
            d -= 1
        return d

    def rem(num, den):
        num = list(num)
        dd = deg(den)
        while deg(num) >= dd:
            dn = deg(num)
            f = num[dn] / den[dd]
            for i in range(dd + 1):
                num[dn - dd + i] -= f * den[i]
            num[dn] = Fraction(0)
        return num

    x, y = list(a), list(b)
    while deg(y) >= 0:
        x, y = y, rem(x, y)
    d = deg(x)
    if d < 0:
        return [Fraction(0)]
    lead = x[d]
    return [c / lead for c in x[: d + 1]]


def _uni_div_exact(num: list[Fraction], den: list[Fraction]) -> list[Fraction]:
    def deg(c):
        d = len(c) - 1
        while d >= 0 and not c[d]:
            d -= 1
        return d

    dn, dd = deg(num), deg(den)
    out = [Fraction(0)] * (dn - dd + 1)
    num = list(num)
    while deg(num) >= dd:
        k = deg(num)
        f = num[k] / den[dd]
        out[k - dd] = f
        for i in range(dd + 1):
            num[k - dd + i] -= f * den[i]
    assert deg(num) < 0, "inexact univariate division"
    return out


class RatFn:
    """Ratio of two polynomials.  Equality is decided by cross-multiplication,
    so reduction to lowest terms is a best-effort normalization, not a
    correctness requirement."""

    __slots__ = ("num", "den")
    __hash__ = None

    def __init__(self, num: Poly, den: Poly):
        if not isinstance(num, Poly) or not isinstance(den, Poly):
            raise TypeError("RatFn takes two Poly operands")
        if num.vars != den.vars:
            raise DimensionError("numerator and denominator disagree on variables")
        if den.is_zero:
            raise ZeroDivisionPolyError("zero denominator")
        num, den = self._reduce(num, den)
        self.num = num
        self.den = den

    @staticmethod
    def _reduce(num: Poly, den: Poly) -> tuple[Poly, Poly]:
        if num.is_zero:
            return num, Poly.const(den.vars, 1)
        # common monomial factor
        mins = None
        for e in list(num.terms) + list(den.terms):
            mins = e if mins is None else tuple(min(a, b) for a, b in zip(mins, e))
        if mins and any(mins):
            num = Poly(num.vars, {tuple(a - b for a, b in zip(e, mins)): c for e, c in num.terms.items()})
            den = Poly(den.vars, {tuple(a - b for a, b in zip(e, mins)): c for e, c in den.terms.items()})
        # shared single-variable content: exact Euclid
        i, j = _single_var(num), _single_var(den)
        if i is not None and i == j:
            g = _uni_gcd(_uni_coeffs(num, i), _uni_coeffs(den, i))
            if len(g) > 1:
                num = _uni_to_poly(_uni_div_exact(_uni_coeffs(num, i), g), num.vars, i)
                den = _uni_to_poly(_uni_div_exact(_uni_coeffs(den, i), g), den.vars, i)
        # scale so den has positive leading coefficient and content 1
        c = _content(den)
        if _leading_coeff(den) < 0:
            c = -c
        num = num * (Fraction(1) / c)
        den = den * (Fraction(1) / c)
        return num, den

    @classmethod
    def coerce(cls, x, vars) -> "RatFn":
        if isinstance(x, RatFn):
            return x
        if isinstance(x, Poly):
            return cls(x, Poly.const(x.vars, 1))
        if isinstance(x, (int, Fraction)):
            return cls(Poly.const(vars, x), Poly.const(vars, 1))
        raise TypeError(f"cannot coerce {type(x).__name__} to RatFn")

    @property
    def vars(self):
        return self.num.vars

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def is_poly(self) -> bool:
        return self.den.is_constant()

    def as_poly(self) -> Poly:
        if not self.den.is_constant():
            raise ValueError("denominator is not constant")
        return self.num * (Fraction(1) / self.den.constant_value())

    def __add__(self, other):
        try:
            o = RatFn.coerce(other, self.vars)
        except TypeError:
            return NotImplemented
        return RatFn(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        out = RatFn.__new__(RatFn)
        out.num = -self.num
        out.den = self.den
        return out

    def __sub__(self, other):
        try:
            o = RatFn.coerce(other, self.vars)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            o = RatFn.coerce(other, self.vars)
        except TypeError:
            return NotImplemented
        return RatFn(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = RatFn.coerce(other, self.vars)
        if o.num.is_zero:
            raise ZeroDivisionPolyError("division by zero field")
        return RatFn(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        o = RatFn.coerce(other, self.vars)
        return o / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise ValueError("rational-function powers take integers")
        if k < 0:
            return RatFn(self.den, self.num) ** (-k)
        return RatFn(self.num**k, self.den**k)

    def __eq__(self, other):
        try:
            o = RatFn.coerce(other, self.vars)
        except TypeError:
            return NotImplemented
        return (self.num * o.den - o.num * self.den).is_zero

    def diff(self, which) -> "RatFn":
        return RatFn(
            self.num.diff(which) * self.den - self.num * self.den.diff(which),
            self.den * self.den,
        )

    def eval(self, point):
        d = self.den.eval(point)
        if d == 0:
            raise ZeroDivisionError("field evaluated on its singular locus")
        return self.num.eval(point) / d

    def eval_jet(self, point) -> "Jet":
        return self.num.eval_jet(point) / self.den.eval_jet(point)

    def __str__(self) -> str:
        if self.den.is_constant() and self.den.constant_value() == 1:
            return str(self.num)
        return f"({self.num}) / ({self.den})"

    def __repr__(self) -> str:
        return f"RatFn({str(self)!r})"


class Jet:
    """Value plus first partial derivatives; the workhorse of the numeric
    backend.  Components stay exact if fed exact numbers."""

    __slots__ = ("value", "partials")

    def __init__(self, value, partials: Iterable):
        self.value = value
        self.partials = tuple(partials)

    @staticmethod
    def seed(point: Sequence) -> list["Jet"]:
        """One jet per coordinate, each with a unit partial in its own slot."""
        n = len(point)
        exact = all(isinstance(x, (int, Fraction)) for x in point)
        one = Fraction(1) if exact else 1.0
        zero = Fraction(0) if exact else 0.0
        return [
            Jet(point[i], tuple(one if j == i else zero for j in range(n)))
            for i in range(n)
        ]

    @staticmethod
    def const(value, n: int) -> "Jet":
        zero = Fraction(0) if isinstance(value, (int, Fraction)) else 0.0
        return Jet(value, (zero,) * n)

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        if isinstance(other, (int, float, Fraction)):
            return Jet.const(other, len(self.partials))
        raise TypeError(f"cannot mix Jet with {type(other).__name__}")

    def __add__(self, other):
        o = self._coerce(other)
        return Jet(self.value + o.value, tuple(a + b for a, b in zip(self.partials, o.partials)))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, tuple(-a for a in self.partials))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        return Jet(
            self.value * o.value,
            tuple(a * o.value + self.value * b for a, b in zip(self.partials, o.partials)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.value == 0:
            raise ZeroDivisionError("jet division by zero value")
        inv = 1 / o.value if not isinstance(o.value, (int, Fraction)) else Fraction(1) / o.value
        v = self.value * inv
        return Jet(v, tuple((a - v * b) * inv for a, b in zip(self.partials, o.partials)))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("jet powers take non-negative integers")
        out = Jet.const(Fraction(1) if isinstance(self.value, (int, Fraction)) else 1.0, len(self.partials))
        for _ in range(k):
            out = out * self
        return out

    def exp(self) -> "Jet":
        v = math.exp(self.value)
        return Jet(v, tuple(v * a for a in self.partials))

    def sin(self) -> "Jet":
        c = math.cos(self.value)
        return Jet(math.sin(self.value), tuple(c * a for a in self.partials))

    def cos(self) -> "Jet":
        s = -math.sin(self.value)
        return Jet(math.cos(self.value), tuple(s * a for a in self.partials))

    def __repr__(self):
        return f"Jet({self.value!r}, {self.partials!r})"


class JetRule:
    """Opaque scalar field: an arbitrary rule computing a jet at a point.

    Only pointwise jet evaluation is available; anything symbolic raises
    BackendError so mixed backends fail loudly instead of silently degrading.
    """

    __slots__ = ("fn", "nvars")

    def __init__(self, fn: Callable[[Sequence[float]], Jet], nvars: int):
        self.fn = fn
        self.nvars = nvars

    @property
    def is_zero(self):
        raise BackendError("opaque fields admit no identity test; sample instead")

    def diff(self, which):
        raise BackendError("opaque fields cannot be differentiated symbolically")

    def eval(self, point):
        return self.fn(point).value

    def eval_jet(self, point) -> Jet:
        jet = self.fn(point)
        if len(jet.partials) != self.nvars:
            raise DimensionError("jet rule returned wrong number of partials")
        return jet

    def __str__(self):
        return "<opaque jet rule>"


ScalarField = Union[Poly, RatFn, JetRule]


def is_symbolic(f: ScalarField) -> bool:
    return isinstance(f, (Poly, RatFn))


# ---------------------------------------------------------------------------
# expression parsing
# ---------------------------------------------------------------------------

_OPS = set("+-*^/()")


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        if ch in _OPS:
            tokens.append((ch, ch, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, vars: Sequence[str]):
        self.text = text
        self.vars = tuple(vars)
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind):
        t = self.take()
        if t[0] != kind:
            raise ExprSyntaxError(f"expected {kind!r}, found {t[1]!r}", t[2])
        return t

    def parse(self) -> Poly:
        p = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ExprSyntaxError(f"trailing input {t[1]!r}", t[2])
        return p

    def expr(self) -> Poly:
        p = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Poly:
        p = self.factor()
        while self.peek()[0] == "*":
            self.take()
            p = p * self.factor()
        return p

    def factor(self) -> Poly:
        if self.peek()[0] == "-":
            self.take()
            return -self.factor()
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            t = self.peek()
            if t[0] != "int":
                raise ExprSyntaxError("exponent must be a non-negative integer literal", t[2])
            self.take()
            return base ** int(t[1])
        return base

    def atom(self) -> Poly:
        t = self.take()
        if t[0] == "int":
            value = Fraction(int(t[1]))
            if self.peek()[0] == "/":
                self.take()
                d = self.peek()
                if d[0] != "int":
                    raise ExprSyntaxError("'/' is only allowed between integer literals", d[2])
                self.take()
                if int(d[1]) == 0:
                    raise ExprSyntaxError("zero denominator in rational literal", d[2])
                value = value / int(d[1])
            return Poly.const(self.vars, value)
        if t[0] == "ident":
            if t[1] not in self.vars:
                raise UnknownVariableError(f"unknown variable {t[1]!r}", t[2])
            return Poly.var(self.vars, t[1])
        if t[0] == "(":
            p = self.expr()
            self.expect(")")
            return p
        raise ExprSyntaxError(f"unexpected token {t[1]!r}" if t[1] else "unexpected end of input", t[2])


def parse_poly(text: str, vars: Sequence[str]) -> Poly:
    """Parse expression text over the given variables.

    Grammar: integers, rational literals a/b, variables, binary + - *,
    ^ with non-negative integer exponents, unary minus, parentheses.
    """
    return _Parser(text, vars).parse()


def parse_univariate(text: str, tname: str, vars: Sequence[str]) -> list[Poly]:
    """Parse a polynomial in one distinguished variable (e.g. ``t``) whose
    coefficients are polynomials over ``vars``.  Returns coefficients by
    ascending degree in ``tname``."""
    if tname in vars:
        raise DimensionError(f"distinguished variable {tname!r} shadows a field variable")
    ext = tuple(vars) + (tname,)
    p = parse_poly(text, ext)
    ti = len(ext) - 1
    deg = p.degree_in(ti)
    out = [Poly.zero(vars) for _ in range(max(deg + 1, 1))]
    for e, c in p.terms.items():
        k = e[ti]
        out[k] = out[k] + Poly(tuple(vars), {e[:-1]: c})
    return out
