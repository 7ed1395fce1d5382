"""Exact polynomial / rational calculus in (z, zbar, t) with optional parameters (c, cbar).

z and zbar are independent formal variables; the formal conjugate swaps
z <-> zbar and c <-> cbar and conjugates coefficients (t stays real).
Coefficients are complex numbers; the catalog data are Gaussian integers,
for which all arithmetic here is exact.
"""
from __future__ import annotations

import json
import math

import numpy as np

VARS = ("z", "zbar", "t", "c", "cbar")
_VAR_INDEX = {name: VARS.index(name) for name in VARS}
_ZERO_KEY = (0, 0, 0, 0, 0)


class HeatDatumError(ValueError):
    pass


class BiPoly:
    """Polynomial with complex coefficients, exponent keys (dz, dzbar, dt, dc, dcbar)."""

    __slots__ = ("coef",)

    def __init__(self, coef=None):
        self.coef = {}
        if coef:
            for key, val in coef.items():
                key = self._norm_key(key)
                val = complex(val)
                if val != 0:
                    self.coef[key] = self.coef.get(key, 0) + val
            self.coef = {k: v for k, v in self.coef.items() if v != 0}

    @staticmethod
    def _norm_key(key):
        key = tuple(int(e) for e in key)
        if len(key) == 3:
            key = key + (0, 0)
        if len(key) != 5 or any(e < 0 for e in key):
            raise ValueError(f"bad exponent key {key}")
        return key

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def const(cls, value):
        return cls({_ZERO_KEY: value})

    @classmethod
    def variable(cls, name):
        key = [0] * 5
        key[_VAR_INDEX[name]] = 1
        return cls({tuple(key): 1.0})

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        other = _as_poly(other)
        out = dict(self.coef)
        for k, v in other.coef.items():
            s = out.get(k, 0) + v
            if s == 0:
                out.pop(k, None)
            else:
                out[k] = s
        res = BiPoly()
        res.coef = out
        return res

    __radd__ = __add__

    def __neg__(self):
        res = BiPoly()
        res.coef = {k: -v for k, v in self.coef.items()}
        return res

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, BiPoly):
            if isinstance(other, RationalFn):
                return NotImplemented
            z = complex(other)
            res = BiPoly()
            if z != 0:
                res.coef = {k: v * z for k, v in self.coef.items()}
            return res
        out = {}
        for k1, v1 in self.coef.items():
            for k2, v2 in other.coef.items():
                k = (k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2], k1[3] + k2[3], k1[4] + k2[4])
                s = out.get(k, 0) + v1 * v2
                if s == 0:
                    out.pop(k, None)
                else:
                    out[k] = s
        res = BiPoly()
        res.coef = out
        return res

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power")
        result = BiPoly.const(1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __truediv__(self, other):
        if isinstance(other, BiPoly):
            return RationalFn(self, other)
        return self * (1.0 / complex(other))

    # -- calculus ----------------------------------------------------------

    def wirtinger(self, var: str) -> "BiPoly":
        """Formal partial derivative; z and zbar are independent."""
        i = _VAR_INDEX[var]
        out = {}
        for k, v in self.coef.items():
            if k[i] == 0:
                continue
            nk = list(k)
            nk[i] -= 1
            out[tuple(nk)] = v * k[i]
        res = BiPoly()
        res.coef = out
        return res

    def conj(self) -> "BiPoly":
        """Formal conjugate: swap z<->zbar and c<->cbar, conjugate coefficients."""
        out = {}
        for (a, b, dt, dc, dcb), v in self.coef.items():
            out[(b, a, dt, dcb, dc)] = v.conjugate()
        res = BiPoly()
        res.coef = out
        return res

    # -- queries -----------------------------------------------------------

    def eval(self, z=0.0, zbar=None, t=0.0, c=0.0, cbar=None):
        """Evaluate; zbar/cbar default to the complex conjugates of z/c."""
        z = np.asarray(z, dtype=np.complex128) if not np.isscalar(z) else z
        zb = np.conj(z) if zbar is None else zbar
        cb = np.conjugate(c) if cbar is None else cbar
        vals = (z, zb, t, c, cb)
        powers = [dict() for _ in range(5)]

        def pw(i, e):
            if e == 0:
                return 1.0
            cache = powers[i]
            if e not in cache:
                cache[e] = vals[i] ** e
            return cache[e]

        acc = 0.0
        for k, v in self.coef.items():
            term = v
            for i in range(5):
                if k[i]:
                    term = term * pw(i, k[i])
            acc = acc + term
        return acc

    def degree(self, var=None):
        if not self.coef:
            return -1
        if var is None:
            return max(sum(k) for k in self.coef)
        i = _VAR_INDEX[var]
        return max(k[i] for k in self.coef)

    def depends_on(self, var) -> bool:
        i = _VAR_INDEX[var]
        return any(k[i] for k in self.coef)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coef.values()), default=0.0)

    def is_zero(self, rel: float = 0.0, ref: float = 1.0) -> bool:
        return self.max_abs() <= rel * ref

    @property
    def nterms(self) -> int:
        return len(self.coef)

    def __eq__(self, other):
        if not isinstance(other, BiPoly):
            other = _as_poly(other)
        return (self - other).nterms == 0

    def __hash__(self):
        return hash(frozenset(self.coef.items()))

    def __repr__(self):
        if not self.coef:
            return "BiPoly(0)"
        parts = []
        for k in sorted(self.coef):
            mono = "*".join(f"{VARS[i]}^{k[i]}" for i in range(5) if k[i])
            parts.append(f"({self.coef[k]:.6g})" + ("*" + mono if mono else ""))
        return "BiPoly(" + " + ".join(parts) + ")"

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        out = {}
        for k, v in self.coef.items():
            key = ",".join(str(e) for e in (k if (k[3] or k[4]) else k[:3]))
            out[key] = [v.real, v.imag]
        return json.dumps(out, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BiPoly":
        raw = json.loads(text)
        coef = {}
        for key, (re, im) in raw.items():
            parts = tuple(int(p) for p in key.split(","))
            coef[parts] = complex(re, im)
        return cls(coef)


def _as_poly(x) -> BiPoly:
    if isinstance(x, BiPoly):
        return x
    return BiPoly.const(complex(x))


# convenience generators
Z = BiPoly.variable("z")
ZBAR = BiPoly.variable("zbar")
T = BiPoly.variable("t")
C = BiPoly.variable("c")
CBAR = BiPoly.variable("cbar")
ONE = BiPoly.const(1.0)


def poly_equal(p: BiPoly, q: BiPoly, rel: float = 1e-12) -> bool:
    ref = max(p.max_abs(), q.max_abs(), 1.0)
    return (p - q).is_zero(rel, ref)


class RationalFn:
    """Quotient of BiPolys; arithmetic is cross-multiplied, no gcd reduction."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        self.num = _as_poly(num)
        self.den = _as_poly(den if den is not None else 1.0)
        if self.den.nterms == 0:
            raise ZeroDivisionError("zero denominator")

    def __add__(self, other):
        other = _as_rational(other)
        if self.den == other.den:
            return RationalFn(self.num + other.num, self.den)
        return RationalFn(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, self.den)

    def __sub__(self, other):
        return self + (-_as_rational(other))

    def __rsub__(self, other):
        return _as_rational(other) + (-self)

    def __mul__(self, other):
        other = _as_rational(other)
        return RationalFn(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_rational(other)
        if other.num.nterms == 0:
            raise ZeroDivisionError("division by zero rational")
        return RationalFn(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return _as_rational(other) / self

    def wirtinger(self, var: str) -> "RationalFn":
        """Quotient rule, z and zbar treated as independent."""
        dn = self.num.wirtinger(var)
        dd = self.den.wirtinger(var)
        return RationalFn(dn * self.den - self.num * dd, self.den * self.den)

    def conj(self) -> "RationalFn":
        return RationalFn(self.num.conj(), self.den.conj())

    def eval(self, **kw):
        return self.num.eval(**kw) / self.den.eval(**kw)

    def equals(self, other, rel: float = 1e-12) -> bool:
        other = _as_rational(other)
        lhs = self.num * other.den
        rhs = other.num * self.den
        return poly_equal(lhs, rhs, rel)

    def is_zero(self, rel: float = 1e-12, ref: float = 1.0) -> bool:
        return self.num.is_zero(rel, ref)

    def __repr__(self):
        return f"RationalFn({self.num!r} / {self.den!r})"


def _as_rational(x) -> RationalFn:
    if isinstance(x, RationalFn):
        return x
    return RationalFn(_as_poly(x))


def rational_wirtinger(r: RationalFn, var: str) -> RationalFn:
    return r.wirtinger(var)


def heat_extend(initial: BiPoly) -> BiPoly:
    """Extend a z-polynomial to f(z, t) with f(z, 0) = initial and f_t = i f_zz.

    Closed form: f = sum_m (i t)^m / m! * d_z^{2m} initial.
    """
    initial = _as_poly(initial)
    if initial.depends_on("zbar") or initial.depends_on("cbar") or initial.depends_on("t"):
        raise HeatDatumError("heat datum must be a polynomial in z (and c) only")
    out = BiPoly.zero()
    deriv = initial
    m = 0
    while deriv.nterms:
        out = out + deriv * (1j ** m / math.factorial(m)) * (T ** m)
        deriv = deriv.wirtinger("z").wirtinger("z")
        m += 1
    return out


def heat_residual(f: BiPoly) -> BiPoly:
    """f_t - i f_zz; identically zero for heat polynomials."""
    return f.wirtinger("t") - 1j * f.wirtinger("z").wirtinger("z")


class RMat2:
    """2x2 matrix over RationalFn, for the exact Moutard / Dirac algebra."""

    __slots__ = ("a",)

    def __init__(self, entries):
        self.a = [[_as_rational(entries[i][j]) for j in range(2)] for i in range(2)]

    @classmethod
    def from_scalars(cls, e11, e12, e21, e22):
        return cls([[e11, e12], [e21, e22]])

    def __getitem__(self, ij):
        return self.a[ij[0]][ij[1]]

    def __mul__(self, other):
        if isinstance(other, RMat2):
            return RMat2([[self.a[i][0] * other.a[0][j] + self.a[i][1] * other.a[1][j]
                           for j in range(2)] for i in range(2)])
        return RMat2([[self.a[i][j] * other for j in range(2)] for i in range(2)])

    __rmul__ = __mul__

    def __add__(self, other):
        return RMat2([[self.a[i][j] + other.a[i][j] for j in range(2)] for i in range(2)])

    def __sub__(self, other):
        return RMat2([[self.a[i][j] - other.a[i][j] for j in range(2)] for i in range(2)])

    def __neg__(self):
        return RMat2([[-self.a[i][j] for j in range(2)] for i in range(2)])

    def det(self) -> RationalFn:
        return self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]

    def inv(self) -> "RMat2":
        d = self.det()
        return RMat2([[self.a[1][1] / d, -self.a[0][1] / d],
                      [-self.a[1][0] / d, self.a[0][0] / d]])

    def transpose(self) -> "RMat2":
        return RMat2([[self.a[0][0], self.a[1][0]], [self.a[0][1], self.a[1][1]]])

    def conj(self) -> "RMat2":
        return RMat2([[self.a[i][j].conj() for j in range(2)] for i in range(2)])

    def wirtinger(self, var: str) -> "RMat2":
        return RMat2([[self.a[i][j].wirtinger(var) for j in range(2)] for i in range(2)])

    def eval(self, **kw) -> np.ndarray:
        return np.array([[complex(self.a[0][0].eval(**kw)), complex(self.a[0][1].eval(**kw))],
                         [complex(self.a[1][0].eval(**kw)), complex(self.a[1][1].eval(**kw))]])


GAMMA_EXACT = RMat2([[0, 1], [-1, 0]])
