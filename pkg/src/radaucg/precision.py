"""Precision-parameterized scalar arithmetic.

Every numerical routine in this package takes an explicit PrecisionContext
instead of relying on ambient global state, so that runs at different
precisions can coexist in one process (e.g. a reference construction at 128
digits feeding a solve at 64 digits).
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath

NATIVE = 0

MIN_DIGITS = 16
MAX_DIGITS = 4096

# One shared mpmath context per digit count.  Scalars from clones with
# different precisions interoperate silently at the wrong precision, so all
# D-digit values must come from the same context object.
_MP_CONTEXTS: dict[int, mpmath.ctx_mp.MPContext] = {}


def _mp_context(digits):
    ctx = _MP_CONTEXTS.get(digits)
    if ctx is None:
        ctx = mpmath.mp.clone()
        ctx.dps = digits
        _MP_CONTEXTS[digits] = ctx
    return ctx


class PrecisionError(ValueError):
    pass


class PrecisionContext:
    """Real scalar arithmetic at a fixed number of significant decimal digits.

    ``decimal_digits == 0`` (or None) selects native binary64 arithmetic;
    otherwise the count must lie in [16, 4096] and scalars are mpmath floats
    evaluated at that many digits.
    """

    __slots__ = ("decimal_digits", "_mp")

    def __init__(self, decimal_digits=NATIVE):
        if decimal_digits is None:
            decimal_digits = NATIVE
        decimal_digits = int(decimal_digits)
        if decimal_digits != NATIVE and not MIN_DIGITS <= decimal_digits <= MAX_DIGITS:
            raise PrecisionError(
                "decimal_digits must be 0 (native) or in [%d, %d], got %d"
                % (MIN_DIGITS, MAX_DIGITS, decimal_digits)
            )
        self.decimal_digits = decimal_digits
        self._mp = None if decimal_digits == NATIVE else _mp_context(decimal_digits)

    # -- identity ---------------------------------------------------------

    @property
    def is_native(self):
        return self._mp is None

    def __eq__(self, other):
        return (
            isinstance(other, PrecisionContext)
            and other.decimal_digits == self.decimal_digits
        )

    def __hash__(self):
        return hash(("PrecisionContext", self.decimal_digits))

    def __repr__(self):
        if self.is_native:
            return "PrecisionContext(native)"
        return "PrecisionContext(%d)" % self.decimal_digits

    # -- conversions ------------------------------------------------------

    def scalar(self, x):
        """Convert x (int, float, str, Fraction or any mpf) to this context.

        Binary values convert exactly; decimal strings are rounded at this
        context's precision.
        """
        if self.is_native:
            if isinstance(x, Fraction):
                return x.numerator / x.denominator
            if isinstance(x, mpmath.mpf) or type(x).__name__ == "mpf":
                return float(x)
            return float(x)
        if isinstance(x, Fraction):
            return self._mp.mpf(x.numerator) / self._mp.mpf(x.denominator)
        if isinstance(x, str):
            return self._mp.mpf(x)
        return self._mp.convert(x)

    def to_float(self, x):
        """Round a scalar of this context to the nearest binary64 value."""
        return float(x)

    # -- constants --------------------------------------------------------

    @property
    def zero(self):
        return 0.0 if self.is_native else self._mp.mpf(0)

    @property
    def one(self):
        return 1.0 if self.is_native else self._mp.mpf(1)

    @property
    def eps(self):
        """Unit roundoff scale of the arithmetic (machine epsilon analogue)."""
        if self.is_native:
            return math.ulp(1.0)
        return self._mp.eps

    @property
    def tolerance(self):
        """Package-wide relative comparison tolerance: 10^-(D-8), or 1e-12 native.

        Leaves eight guard digits between the arithmetic and what tests and
        invariant checks are entitled to expect.  Returned in this context's
        scalar type (a float would underflow beyond ~300 digits).
        """
        if self.is_native:
            return 1e-12
        return self._mp.mpf(10) ** (-(self.decimal_digits - 8))

    # -- elementary functions ----------------------------------------------

    def sqrt(self, x):
        if self.is_native:
            return math.sqrt(x)
        return self._mp.sqrt(x)

    def hypot(self, x, y):
        if self.is_native:
            return math.hypot(x, y)
        return self._mp.hypot(x, y)

    # -- formatting ---------------------------------------------------------

    def format(self, x, digits=None):
        """Decimal string carrying the context's full precision.

        Native values use the shortest round-trip representation; mpf values
        are printed with D (or ``digits``) significant digits.
        """
        if x is None:
            return ""
        if self.is_native:
            return repr(float(x))
        n = digits if digits is not None else self.decimal_digits
        return self._mp.nstr(self._mp.convert(x), n)

    def parse(self, s):
        s = s.strip()
        if not s:
            return None
        return self.scalar(s)


def native():
    return PrecisionContext(NATIVE)


def elevated(ctx, factor=2, extra=32):
    """An evaluation context with comfortably more digits than ctx.

    Used for reference quantities (exact solutions, per-iteration spectral
    data) whose accuracy must exceed the tolerances being verified on
    ctx-precision data.  Native contexts elevate to 2*16 digits equivalents.
    """
    base = ctx.decimal_digits if not ctx.is_native else MIN_DIGITS
    return PrecisionContext(max(factor * base, base + extra))
