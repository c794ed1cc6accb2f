"""Check-report plumbing shared by every verification module.

A verification pass produces a list of CheckItem records.  Each item states
one inequality or structural predicate: a stable id, a reference tag naming
the axiom or bound being measured, both computed sides, the ratio lhs/rhs,
and a verdict.  Items come in three flavours:

* asserted   -- pass/fail counts toward the exit code,
* informational -- measured quantities (e.g. best constants) that are
  reported but never fail a run,
* skipped    -- checks that do not apply to the instance (with a note).

Numeric conventions: structural quantities are exact (int / Fraction),
operator values are floats.  Bounds with astronomically large constants
(powers of two in the tens of thousands of bits) are kept exact and
compared in log2 space so that nothing is ever rounded through a float.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

Number = Union[int, float, Fraction]

# Relative slack protecting float-valued sides against boundary rounding.
FLOAT_SLACK = 1e-9


def log2_exact(value: Union[int, Fraction]) -> float:
    """log2 of a positive int/Fraction, safe for values far beyond float range."""
    if isinstance(value, int):
        num, den = value, 1
    else:
        num, den = value.numerator, value.denominator
    if num <= 0:
        raise ValueError("log2_exact needs a positive value")

    def _log2_int(k: int) -> float:
        bits = k.bit_length()
        if bits <= 500:
            return math.log2(k)
        shift = bits - 64
        return math.log2(k >> shift) + shift

    return _log2_int(num) - _log2_int(den)


def log2_number(value: Number) -> float:
    """log2 of a positive number of any supported type (-inf for zero)."""
    if isinstance(value, float):
        if value < 0:
            raise ValueError("log2_number needs a nonnegative value")
        return math.log2(value) if value > 0.0 else -math.inf
    if isinstance(value, (int, Fraction)):
        if value == 0:
            return -math.inf
        return log2_exact(value)
    raise TypeError(f"unsupported number type {type(value)!r}")


def le_with_slack(lhs: Number, rhs: Number, slack: float = FLOAT_SLACK) -> bool:
    """lhs <= rhs, exact when both sides are exact, else with relative slack.

    Float/exact mixtures go through log2 space so huge exact bounds never
    overflow.  The slack only absorbs float rounding at near-equality.
    """
    exact = isinstance(lhs, (int, Fraction)) and isinstance(rhs, (int, Fraction))
    if exact:
        return lhs <= rhs
    lf = float(lhs) if not isinstance(lhs, float) else lhs
    if lf <= 0.0:
        return True
    rhs_log2 = log2_number(rhs)
    if rhs_log2 == -math.inf:
        return lf <= 0.0
    return math.log2(lf) <= rhs_log2 + math.log2(1.0 + slack) + slack


def ratio_of(lhs: Number, rhs: Number) -> Optional[float]:
    """float(lhs/rhs) via log2 space; None where the ratio is undefined."""
    try:
        llog = log2_number(abs(lhs) if isinstance(lhs, (int, float)) else lhs)
        rlog = log2_number(abs(rhs) if isinstance(rhs, (int, float)) else rhs)
    except (ValueError, TypeError):
        return None
    if rlog == -math.inf:
        return None if llog == -math.inf else math.inf
    if llog == -math.inf:
        return 0.0
    d = llog - rlog
    if d > 1020:
        return math.inf
    if d < -1020:
        return 0.0
    return 2.0 ** d


def encode_number(value: Optional[Number]) -> Union[None, int, float, str]:
    """JSON encoding: exact values as ints or 'p/q' strings, huge ones as '2^e'."""
    if value is None:
        return None
    if isinstance(value, float):
        return value
    if isinstance(value, int):
        if value.bit_length() <= 256:
            return value
        return f"2^{log2_exact(value):.6f}"
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return encode_number(value.numerator)
        if value.numerator.bit_length() <= 256 and value.denominator.bit_length() <= 256:
            return f"{value.numerator}/{value.denominator}"
        sign = "-" if value < 0 else ""
        return f"{sign}2^{log2_exact(abs(value)):.6f}"
    raise TypeError(f"cannot encode {type(value)!r}")


@dataclass
class CheckItem:
    """One named check: a measured inequality or structural predicate."""

    id: str
    paper_ref: str
    lhs: Optional[Number] = None
    rhs: Optional[Number] = None
    passed: Optional[bool] = None
    skipped: bool = False
    info: bool = False
    context: str = ""

    @property
    def ratio(self) -> Optional[float]:
        if self.lhs is None or self.rhs is None:
            return None
        return ratio_of(self.lhs, self.rhs)

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "paper_ref": self.paper_ref,
            "lhs": encode_number(self.lhs),
            "rhs": encode_number(self.rhs),
            "ratio": self.ratio,
        }
        if self.skipped:
            out["skip"] = True
        else:
            out["pass"] = self.passed
        if self.info:
            out["info"] = True
        if self.context:
            out["context"] = self.context
        return out


class CheckReport:
    """Ordered collection of CheckItems with summary helpers."""

    def __init__(self, items: Optional[Iterable[CheckItem]] = None):
        self.items: list[CheckItem] = list(items) if items is not None else []

    def __iter__(self) -> Iterator[CheckItem]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def add(self, item: CheckItem) -> CheckItem:
        self.items.append(item)
        return item

    def extend(self, other: "CheckReport") -> "CheckReport":
        self.items.extend(other.items)
        return self

    def compare(
        self,
        check_id: str,
        ref: str,
        lhs: Number,
        rhs: Number,
        *,
        info: bool = False,
        context: str = "",
        slack: float = FLOAT_SLACK,
    ) -> CheckItem:
        """Record lhs <= rhs (exact when both exact, slack otherwise)."""
        ok = le_with_slack(lhs, rhs, slack)
        return self.add(
            CheckItem(check_id, ref, lhs=lhs, rhs=rhs, passed=ok, info=info, context=context)
        )

    def predicate(
        self,
        check_id: str,
        ref: str,
        holds: bool,
        *,
        info: bool = False,
        context: str = "",
    ) -> CheckItem:
        """Record an exact structural predicate (pass encoded as 0 <= 1)."""
        return self.add(
            CheckItem(
                check_id,
                ref,
                lhs=0 if holds else 1,
                rhs=0,
                passed=holds,
                info=info,
                context=context,
            )
        )

    def skip(self, check_id: str, ref: str, context: str = "") -> CheckItem:
        return self.add(CheckItem(check_id, ref, skipped=True, context=context))

    def failures(self, include_info: bool = True) -> list[CheckItem]:
        out = []
        for it in self.items:
            if it.skipped or it.passed is not False:
                continue
            if it.info and not include_info:
                continue
            out.append(it)
        return out

    def all_passed(self, include_info: bool = False) -> bool:
        return not self.failures(include_info=include_info)

    def summary(self) -> dict:
        passed = sum(1 for it in self.items if not it.skipped and it.passed and not it.info)
        failed = sum(1 for it in self.items if not it.skipped and it.passed is False and not it.info)
        skipped = sum(1 for it in self.items if it.skipped)
        informational = sum(1 for it in self.items if it.info and not it.skipped)
        return {
            "total": len(self.items),
            "passed": passed,
            "failed": failed,
            "skipped": skipped,
            "informational": informational,
        }

    def to_json(self) -> list[dict]:
        return [it.to_json() for it in self.items]
