"""Exact expressions over the delay jet space.

An :class:`Expr` is kept in canonical form at all times: a finite sum of
monomials with rational coefficients. A monomial is a sorted product of
atoms raised to rational powers. Atoms are jet variables, symbolic
constants, elementary function applications (opaque, keyed by their
canonical argument) and opaque powers of non-monomial bases.

Sums raised to positive integer powers are expanded; sums raised to negative
or fractional powers become opaque ``Power`` atoms. No polynomial GCD
cancellation is attempted, so ``(u + v)*(u + v)^-1`` does not collapse.
:func:`is_zero` falls back to random sampling when that matters.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

KINDS = ("t", "u", "du", "ddu", "dddu")
LEVELS = (-2, -1, 0, 1, 2)
MAX_ORDER = 3
FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt")

_SUFFIX = {-2: "_mm", -1: "_m", 0: "", 1: "_p", 2: "_pp"}
_KIND_RANK = {"dddu": 0, "ddu": 1, "du": 2, "u": 3, "t": 4}

Number = Union[int, Fraction]


class EvaluationError(ArithmeticError):
    """Raised for unbound variables and domain errors during evaluation."""


class LevelOverflowError(ValueError):
    pass


# ---------------------------------------------------------------- atoms


@dataclass(frozen=True)
class Var:
    """Jet variable: ``kind`` in KINDS at shift ``level`` (number of tau-shifts)."""

    kind: str
    level: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown jet kind {self.kind!r}")
        if self.level not in LEVELS:
            raise LevelOverflowError(f"level {self.level} of {self.kind} outside [-2, 2]")

    @property
    def order(self) -> int | None:
        """Derivative order of a state variable, ``None`` for time."""
        return None if self.kind == "t" else KINDS.index(self.kind) - 1

    @property
    def is_time(self) -> bool:
        return self.kind == "t"

    @property
    def name(self) -> str:
        return self.kind + _SUFFIX[self.level]

    @property
    def key(self):
        return (0, _KIND_RANK[self.kind], -self.level)

    @property
    def free(self) -> frozenset:
        return frozenset((self,))

    def diff(self, v) -> "Expr":
        return ONE if v == self else ZERO

    def subs(self, bindings) -> "Expr":
        e = bindings.get(self)
        return Expr.atom(self) if e is None else e

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    """Symbolic constant such as ``tau`` or a user-declared ``A``."""

    name: str

    @property
    def key(self):
        return (1, self.name)

    @property
    def free(self) -> frozenset:
        return frozenset((self,))

    def diff(self, v) -> "Expr":
        return ONE if v == self else ZERO

    def subs(self, bindings) -> "Expr":
        e = bindings.get(self)
        return Expr.atom(self) if e is None else e

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"

    @property
    def key(self):
        return (2, self.name, self.arg.key)

    @property
    def free(self) -> frozenset:
        return self.arg.free_symbols

    def diff(self, v) -> "Expr":
        darg = self.arg.diff(v)
        if darg.is_zero:
            return ZERO
        a = self.arg
        if self.name == "sin":
            outer = func("cos", a)
        elif self.name == "cos":
            outer = -func("sin", a)
        elif self.name == "tan":
            outer = ONE + func("tan", a) ** 2
        elif self.name == "exp":
            outer = func("exp", a)
        elif self.name == "ln":
            outer = a ** -1
        else:  # pragma: no cover - constructor rejects others
            raise ValueError(self.name)
        return outer * darg

    def subs(self, bindings) -> "Expr":
        return func(self.name, self.arg.subs(bindings))

    def __str__(self):
        return f"{self.name}({self.arg})"


@dataclass(frozen=True)
class Power:
    """Opaque base whose exponent lives in the enclosing monomial."""

    base: "Expr"

    @property
    def key(self):
        return (3, self.base.key)

    @property
    def free(self) -> frozenset:
        return self.base.free_symbols

    def diff(self, v) -> "Expr":
        return self.base.diff(v)

    def subs(self, bindings) -> "Expr":
        return self.base.subs(bindings)

    def __str__(self):
        return f"({self.base})"


Atom = Union[Var, Const, Func, Power]
Monomial = tuple  # tuple[tuple[Atom, Fraction], ...] sorted by atom key


# ---------------------------------------------------------------- Expr


def _mono_key(mono):
    return tuple((a.key, p) for a, p in mono)


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for a, p in m2:
        q = d.get(a, 0) + p
        if q:
            d[a] = q
        else:
            del d[a]
    return tuple(sorted(d.items(), key=lambda ap: ap[0].key))


def _needs_expand(mono) -> bool:
    return any(isinstance(a, Power) and p > 0 and p.denominator == 1 for a, p in mono)


def _acc(acc: dict, terms: Mapping, scale: Fraction = Fraction(1)):
    for m, c in terms.items():
        v = acc.get(m, 0) + c * scale
        if v:
            acc[m] = v
        else:
            acc.pop(m, None)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12) if x != int(x) else Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


class Expr:
    """Immutable canonical expression. Build with arithmetic operators."""

    __slots__ = ("_terms", "_hash", "_key", "_free", "_compiled")

    def __init__(self, terms: dict | None = None):
        self._terms = terms or {}
        self._hash = None
        self._key = None
        self._free = None
        self._compiled = {}

    # -- constructors
    @staticmethod
    def const(q) -> "Expr":
        q = _as_fraction(q)
        return Expr({(): q}) if q else Expr()

    @staticmethod
    def atom(a: Atom) -> "Expr":
        return Expr({((a, Fraction(1)),): Fraction(1)})

    @staticmethod
    def _from_mono(coef: Fraction, mono) -> "Expr":
        if not coef:
            return ZERO
        if _needs_expand(mono):
            plain = []
            expanded = ONE
            for a, p in mono:
                if isinstance(a, Power) and p > 0 and p.denominator == 1:
                    expanded = expanded * (a.base ** p)
                else:
                    plain.append((a, p))
            return Expr({tuple(plain): coef}) * expanded
        return Expr({mono: coef})

    # -- introspection
    @property
    def terms(self) -> Mapping:
        return self._terms

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_rational(self) -> bool:
        return all(m == () for m in self._terms)

    def rational_value(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self} is not a rational constant")
        return self._terms.get((), Fraction(0))

    @property
    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    @property
    def free_symbols(self) -> frozenset:
        if self._free is None:
            s = set()
            for m in self._terms:
                for a, _ in m:
                    s |= a.free
            self._free = frozenset(s)
        return self._free

    @property
    def variables(self) -> frozenset:
        return frozenset(v for v in self.free_symbols if isinstance(v, Var))

    @property
    def levels(self) -> set:
        return {v.level for v in self.variables}

    @property
    def key(self):
        if self._key is None:
            self._key = tuple(sorted((_mono_key(m), c) for m, c in self._terms.items()))
        return self._key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._terms == other._terms

    def __bool__(self):
        return bool(self._terms)

    # -- arithmetic
    @staticmethod
    def _coerce(x) -> "Expr":
        if isinstance(x, Expr):
            return x
        if isinstance(x, (Var, Const, Func, Power)):
            return Expr.atom(x)
        return Expr.const(x)

    def __add__(self, other):
        other = Expr._coerce(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        acc = dict(self._terms)
        _acc(acc, other._terms)
        return Expr(acc)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-Expr._coerce(other))

    def __rsub__(self, other):
        return Expr._coerce(other) - self

    def __mul__(self, other):
        other = Expr._coerce(other)
        if not self._terms or not other._terms:
            return ZERO
        acc: dict = {}
        extra = []
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                if _needs_expand(m):
                    extra.append(Expr._from_mono(c1 * c2, m))
                    continue
                v = acc.get(m, 0) + c1 * c2
                if v:
                    acc[m] = v
                else:
                    acc.pop(m, None)
        for e in extra:
            _acc(acc, e._terms)
        return Expr(acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (Expr._coerce(other) ** -1)

    def __rtruediv__(self, other):
        return Expr._coerce(other) * (self ** -1)

    def __pow__(self, q):
        if isinstance(q, Expr):
            q = q.rational_value()
        q = _as_fraction(q)
        if q == 0:
            return ONE
        if not self._terms:
            if q > 0:
                return ZERO
            raise ZeroDivisionError("zero raised to a non-positive power")
        integral = q.denominator == 1
        if len(self._terms) == 1:
            (mono, c), = self._terms.items()
            if integral:
                n = int(q)
                return Expr._from_mono(c ** n, tuple((a, p * n) for a, p in mono))
            if c == 1 and len(mono) == 1 and mono[0][1] == 1:
                return Expr._from_mono(Fraction(1), ((mono[0][0], q),))
            return Expr({((Power(self), q),): Fraction(1)})
        if integral and q > 0:
            result, base, n = ONE, self, int(q)
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        if integral:
            common = self.common_monomial()
            if common:
                stripped = Expr({_mono_mul(m, tuple((a, -p) for a, p in common)): c
                                 for m, c in self._terms.items()})
                return Expr._from_mono(Fraction(1), tuple((a, p * int(q)) for a, p in common)) * stripped ** q
            lead = self.content()
            base = self * (1 / lead)
            return Expr({((Power(base), q),): lead ** int(q)})
        return Expr({((Power(self), q),): Fraction(1)})

    def leading_coefficient(self) -> Fraction:
        return self.key[0][1] if self._terms else Fraction(0)

    def common_monomial(self):
        """Largest monomial (integer exponents) dividing every term."""
        it = iter(self._terms)
        first = dict(next(it))
        common = {a: p for a, p in first.items() if p.denominator == 1}
        for m in it:
            d = dict(m)
            for a in list(common):
                p = d.get(a)
                if p is None or p.denominator != 1:
                    del common[a]
                else:
                    common[a] = min(common[a], p)
            if not common:
                break
        return tuple(sorted(((a, p) for a, p in common.items() if p),
                            key=lambda ap: ap[0].key))

    def content(self) -> Fraction:
        """Rational content signed like the leading coefficient, so that
        ``self / self.content()`` has coprime integer coefficients."""
        if not self._terms:
            return Fraction(0)
        num = den = 0
        for c in self._terms.values():
            num = math.gcd(num, c.numerator)
            den = den * c.denominator // math.gcd(den, c.denominator) if den else c.denominator
        g = Fraction(num, den)
        return g if self.leading_coefficient() > 0 else -g

    # -- calculus and substitution
    def diff(self, v) -> "Expr":
        """Formal partial derivative with respect to a Var or Const."""
        if v not in self.free_symbols:
            return ZERO
        acc: dict = {}
        for mono, c in self._terms.items():
            for i, (a, p) in enumerate(mono):
                if v not in a.free:
                    continue
                da = a.diff(v)
                if da.is_zero:
                    continue
                rest = list(mono)
                if p == 1:
                    del rest[i]
                else:
                    rest[i] = (a, p - 1)
                term = Expr._from_mono(c * p, tuple(rest)) * da
                _acc(acc, term._terms)
        return Expr(acc)

    def subs(self, bindings: Mapping) -> "Expr":
        """Simultaneous substitution of Var/Const atoms by expressions."""
        bindings = {k: Expr._coerce(v) for k, v in bindings.items()}
        if not bindings or not (self.free_symbols & bindings.keys()):
            return self
        acc: dict = {}
        for mono, c in self._terms.items():
            if not any(a.free & bindings.keys() for a, _ in mono):
                v = acc.get(mono, 0) + c
                if v:
                    acc[mono] = v
                else:
                    acc.pop(mono, None)
                continue
            term = Expr.const(c)
            for a, p in mono:
                if a.free & bindings.keys():
                    term = term * (a.subs(bindings) ** p)
                else:
                    term = term * Expr._from_mono(Fraction(1), ((a, p),))
            _acc(acc, term._terms)
        return Expr(acc)

    def coefficients(self, v: Var) -> dict:
        """Coefficients of ``self`` as a polynomial in ``v``: degree -> Expr.

        Raises ValueError when ``v`` occurs inside a function, an opaque
        power, or with a non-natural exponent.
        """
        out: dict = {}
        for mono, c in self._terms.items():
            deg = 0
            rest = []
            for a, p in mono:
                if a == v:
                    if p.denominator != 1 or p < 0:
                        raise ValueError(f"{v} occurs with exponent {p}")
                    deg = int(p)
                elif v in a.free:
                    raise ValueError(f"{v} occurs inside {a}")
                else:
                    rest.append((a, p))
            out.setdefault(deg, {})
            _acc(out[deg], {tuple(rest): c})
        return {d: Expr(t) for d, t in out.items() if t}

    # -- printing
    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"


ZERO = Expr()
ONE = Expr({(): Fraction(1)})
TAU = Const("tau")


def var(kind: str, level: int = 0) -> Expr:
    return Expr.atom(Var(kind, level))


def const(name: str) -> Expr:
    return Expr.atom(Const(name))


def func(name: str, arg) -> Expr:
    arg = Expr._coerce(arg)
    if name == "sqrt":
        return arg ** Fraction(1, 2)
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    if arg.is_zero:
        if name in ("sin", "tan"):
            return ZERO
        if name in ("cos", "exp"):
            return ONE
    if name == "ln" and arg == ONE:
        return ZERO
    return Expr.atom(Func(name, arg))


def sin(x) -> Expr:
    return func("sin", x)


def cos(x) -> Expr:
    return func("cos", x)


# ---------------------------------------------------------------- printing


def _display_key(a):
    if isinstance(a, Var):
        return (0, _KIND_RANK[a.kind], -a.level)
    return a.key


def _factor_str(a, p: Fraction) -> str:
    s = str(a)
    if p == 1:
        return s
    if p.denominator == 1:
        return f"{s}^{p.numerator}"
    return f"{s}^({p})"


def _term_str(coef: Fraction, mono) -> str:
    """Unsigned string of |coef| * mono."""
    c = abs(coef)
    factors = sorted(mono, key=lambda ap: _display_key(ap[0]))
    num = [_factor_str(a, p) for a, p in factors if p > 0]
    den = [_factor_str(a, -p) for a, p in factors if p < 0]
    if c.numerator != 1 or not num:
        num.insert(0, str(c.numerator))
    if c.denominator != 1:
        den.insert(0, str(c.denominator))
    s = "*".join(num)
    if den:
        s += "/" + (den[0] if len(den) == 1 else "(" + "*".join(den) + ")")
    return s


def to_string(e: Expr) -> str:
    """Render ``e`` in the expression grammar; the result parses back to ``e``."""
    if not e.terms:
        return "0"
    items = sorted(
        e.terms.items(),
        key=lambda mc: (not mc[0], tuple((_display_key(a), -p) for a, p in sorted(mc[0], key=lambda ap: _display_key(ap[0]))), mc[1]),
    )
    parts = []
    for i, (mono, c) in enumerate(items):
        body = _term_str(c, mono)
        if i == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)


# ---------------------------------------------------------------- numerics


def _fpow(x: float, p: float) -> float:
    if x < 0:
        raise ValueError("fractional power of a negative number")
    if x == 0 and p < 0:
        raise ZeroDivisionError("zero to a negative power")
    return x ** p


def _np_fpow(x, p):
    import numpy as np

    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(x < 0, np.nan, np.power(np.abs(x), p))


_MATH_NS = {
    "_sin": math.sin, "_cos": math.cos, "_tan": math.tan,
    "_exp": math.exp, "_ln": math.log, "_fpow": _fpow,
}


def _py_atom(a, ns: dict) -> str:
    if isinstance(a, (Var, Const)):
        return a.name
    if isinstance(a, Func):
        return f"_{a.name}({_py_expr(a.arg, ns)})"
    return f"({_py_expr(a.base, ns)})"


def _py_expr(e: Expr, ns: dict) -> str:
    if not e.terms:
        return "0.0"
    out = []
    for mono, c in e.terms.items():
        factors = [repr(float(c))]
        for a, p in mono:
            s = _py_atom(a, ns)
            if p.denominator == 1:
                factors.append(f"{s}**{int(p)}" if p > 0 else f"{s}**({int(p)})")
            else:
                factors.append(f"_fpow({s}, {float(p)!r})")
        out.append("*".join(factors))
    return "(" + " + ".join(out) + ")"


def compile_expr(e: Expr, args: Iterable[str], backend: str = "math") -> Callable:
    """Compile ``e`` to a Python function of the named arguments.

    ``backend="numpy"`` gives a vectorised function; non-finite results are
    left for the caller to check.
    """
    args = tuple(args)
    cache_key = (args, backend)
    fn = e._compiled.get(cache_key)
    if fn is not None:
        return fn
    if backend == "numpy":
        import numpy as np

        ns = {"_sin": np.sin, "_cos": np.cos, "_tan": np.tan, "_exp": np.exp,
              "_ln": np.log, "_fpow": _np_fpow, "np": np}
    else:
        ns = dict(_MATH_NS)
    body = _py_expr(e, ns)
    if backend == "numpy":
        body = f"{body} + 0.0 * np.zeros_like({args[0]}, dtype=float)" if args else body
    src = f"lambda {', '.join(args)}: {body}"
    fn = eval(src, ns)  # noqa: S307 - source generated from a canonical Expr
    e._compiled[cache_key] = fn
    return fn


def _point_name(k) -> str:
    if isinstance(k, (Var, Const)):
        return k.name
    if isinstance(k, Expr) and k.is_monomial:
        (mono, _), = k.terms.items()
        if len(mono) == 1:
            return mono[0][0].name
    return str(k)


def eval_numeric(e: Expr, point: Mapping) -> float:
    """Evaluate ``e`` at a point mapping Var/Const (or their names) to floats."""
    values = {_point_name(k): float(v) for k, v in point.items()}
    names = sorted(s.name for s in e.free_symbols)
    missing = [n for n in names if n not in values]
    if missing:
        raise EvaluationError(f"unbound variables: {', '.join(missing)}")
    fn = compile_expr(e, names)
    try:
        val = fn(*(values[n] for n in names))
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise EvaluationError(f"domain error evaluating {e}: {exc}") from exc
    if isinstance(val, complex) or not math.isfinite(val):
        raise EvaluationError(f"non-finite value evaluating {e}")
    return float(val)


# ---------------------------------------------------------------- zero tests


@dataclass(frozen=True)
class ZeroCertificate:
    """How a zero verdict was reached.

    mode is ``canonical``, ``canonical-resolved`` (after substituting
    t^(k) -> t + k*tau), ``probabilistic`` or ``probabilistic-on-relation``
    (sampled on the real zero set of a relation).
    """

    mode: str
    zero: bool
    n_points: int = 0
    tol: float = 0.0
    seed: int | None = None
    max_residual: float = 0.0
    samples: tuple = field(default=(), repr=False, compare=False)

    def __str__(self):
        if self.mode.startswith("canonical"):
            return f"{self.mode} zero={self.zero}"
        return (f"{self.mode} zero={self.zero} n_points={self.n_points} "
                f"tol={self.tol:g} seed={self.seed} max_residual={self.max_residual:.3e}")


def resolve_times(e: Expr) -> Expr:
    """Substitute every shifted time t^(k) by t + k*tau."""
    t = var("t")
    tau = Expr.atom(TAU)
    b = {v: t + v.level * tau for v in e.variables if v.is_time and v.level}
    return e.subs(b)


def _sample_point(symbols, rng: random.Random):
    return {s.name: rng.uniform(-2.0, 2.0) for s in symbols}


def probabilistic_zero(e: Expr, n_points: int = 50, tol: float = 1e-9, seed: int = 0) -> ZeroCertificate:
    """Sample ``e`` at random points of [-2, 2]^n.

    A point counts as zero when |e| <= tol * max(1, sum of |terms|), so that
    large cancelling terms near singular denominators do not trip the test.
    """
    rng = random.Random(seed)
    names = sorted(s.name for s in e.free_symbols)
    symbols = sorted(e.free_symbols, key=lambda s: s.name)
    total = compile_expr(e, names)
    parts = [compile_expr(Expr({m: c}), names) for m, c in e.terms.items()]
    worst = 0.0
    samples = []
    zero = True
    for _ in range(n_points):
        for _attempt in range(100):
            pt = _sample_point(symbols, rng)
            args = [pt[n] for n in names]
            try:
                val = total(*args)
                scale = sum(abs(f(*args)) for f in parts)
            except (ZeroDivisionError, ValueError, OverflowError):
                continue
            if isinstance(val, complex) or not math.isfinite(val) or not math.isfinite(scale):
                continue
            break
        else:
            raise EvaluationError(f"no admissible sample point for {e} after 100 attempts")
        rel = abs(val) / max(1.0, scale)
        worst = max(worst, rel)
        samples.append((tuple(args), val))
        if rel > tol:
            zero = False
    return ZeroCertificate("probabilistic", zero, n_points, tol, seed, worst, tuple(samples))


def is_zero(e: Expr, mode: str = "auto", n_points: int = 50, tol: float = 1e-9,
            seed: int = 0) -> ZeroCertificate:
    """Zero test. ``mode`` is ``canonical``, ``probabilistic`` or ``auto``.

    ``auto`` tries the canonical form, then the canonical form with times
    resolved, then sampling.
    """
    if mode == "canonical":
        return ZeroCertificate("canonical", e.is_zero)
    if mode == "probabilistic":
        if e.is_zero:
            return ZeroCertificate("probabilistic", True, n_points, tol, seed, 0.0)
        return probabilistic_zero(e, n_points, tol, seed)
    if mode != "auto":
        raise ValueError(f"unknown zero-test mode {mode!r}")
    if e.is_zero:
        return ZeroCertificate("canonical", True)
    if any(v.is_time and v.level for v in e.variables):
        r = resolve_times(e)
        if r.is_zero:
            return ZeroCertificate("canonical-resolved", True)
    return probabilistic_zero(e, n_points, tol, seed)


# ---------------------------------------------------------------- API


def partial(e: Expr, v) -> Expr:
    """Formal partial derivative; ``v`` may be a Var, Const or atomic Expr."""
    return e.diff(as_symbol(v))


def substitute(e: Expr, bindings: Mapping) -> Expr:
    return e.subs({as_symbol(k): v for k, v in bindings.items()})


def simplify(e: Expr) -> Expr:
    """Return the canonical form. Expressions are canonical on construction,
    so this rebuilds ``e`` from its terms and is idempotent."""
    acc: dict = {}
    for m, c in e.terms.items():
        _acc(acc, Expr._from_mono(c, m).terms)
    return Expr(acc)


def as_symbol(v):
    if isinstance(v, (Var, Const)):
        return v
    if isinstance(v, Expr) and v.is_monomial:
        (mono, c), = v.terms.items()
        if c == 1 and len(mono) == 1 and mono[0][1] == 1 and isinstance(mono[0][0], (Var, Const)):
            return mono[0][0]
    raise TypeError(f"{v!r} is not a jet variable or constant")
