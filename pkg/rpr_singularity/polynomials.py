"""
Multivariate polynomials over complex doubles.

Polynomials live in a :class:`PolynomialRing`, an ordered registry of variable
names; every term is a dense exponent tuple over that registry. Square systems
built from them (:class:`ParameterizedSystem`) split the registry into unknowns
and parameters and compile into numpy index tables (:class:`CompiledSystem`)
for the repeated evaluations done by the path tracker.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from numbers import Number
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class UnknownVariable(KeyError):
    """Raised when a variable name is not registered in the ring."""


class MissingAssignment(KeyError):
    """Raised when an evaluation lacks a value for an occurring variable."""


class NonSquareSystem(ValueError):
    """Raised when the number of equations differs from the number of unknowns."""


class PolynomialRing:
    """
    Ordered registry of variable names shared by a family of polynomials.

    Args:
        names (Iterable[str]): Variable names, in exponent-vector order.
    """

    def __init__(self, names: Iterable[str]):
        self.names = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate variable names in {self.names}")
        self._index = {name: i for i, name in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PolynomialRing) and other.names == self.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"PolynomialRing({', '.join(self.names)})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariable(name) from None

    def zero(self) -> "MultiPoly":
        return MultiPoly(self)

    def constant(self, value: complex) -> "MultiPoly":
        return MultiPoly(self, {(0,) * len(self.names): value})

    def var(self, name: str) -> "MultiPoly":
        exponents = [0] * len(self.names)
        exponents[self.index(name)] = 1
        return MultiPoly(self, {tuple(exponents): 1.0})

    def vars(self, *names: str) -> tuple["MultiPoly", ...]:
        return tuple(self.var(name) for name in names)


class MultiPoly:
    """
    Sparse sum of complex-coefficient monomials with dense exponent tuples.

    Instances are treated as immutable: every operation returns a new
    polynomial. Exact zero coefficients are never stored.

    Args:
        ring (PolynomialRing): Variable registry of the polynomial.
        terms (Mapping[tuple, complex], optional): Exponent tuple -> coefficient.
    """

    __slots__ = ("ring", "terms")
    __hash__ = None
    # numpy scalars on the left defer to the reflected operators
    __array_ufunc__ = None

    def __init__(self, ring: PolynomialRing, terms: Mapping[tuple, complex] | None = None):
        self.ring = ring
        self.terms = {}
        for exponents, coeff in (terms or {}).items():
            if len(exponents) != len(ring):
                raise ValueError("exponent vector does not match the ring")
            if coeff != 0:
                self.terms[tuple(exponents)] = complex(coeff)

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.ring != self.ring:
                raise ValueError("polynomials belong to different rings")
            return other
        if isinstance(other, Number):
            return self.ring.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for exponents, coeff in other.terms.items():
            total = terms.get(exponents, 0) + coeff
            if total == 0:
                terms.pop(exponents, None)
            else:
                terms[exponents] = total
        return MultiPoly(self.ring, terms)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.ring, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, Number):
            return MultiPoly(self.ring, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[tuple, complex] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exponents = tuple(a + b for a, b in zip(e1, e2))
                terms[exponents] = terms.get(exponents, 0) + c1 * c2
        return MultiPoly(self.ring, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Number):
            return NotImplemented
        return self * (1.0 / other)

    def __pow__(self, exponent: int) -> "MultiPoly":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = self.ring.constant(1.0)
        for _ in range(exponent):
            result = result * self
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Number):
            other = self.ring.constant(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __repr__(self) -> str:
        return f"MultiPoly({self.dump() or '0'})"

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self, names: Iterable[str] | None = None) -> int:
        """
        Total degree, optionally counted over a subset of the variables.

        Args:
            names (Iterable[str], optional): Variables to count; all when omitted.

        Returns:
            int: Maximum exponent sum over the stored terms (0 for the zero polynomial).
        """
        if not self.terms:
            return 0
        if names is None:
            return max(sum(e) for e in self.terms)
        slots = [self.ring.index(name) for name in names]
        return max(sum(e[i] for i in slots) for e in self.terms)

    def variables(self) -> tuple[str, ...]:
        """Names of the variables that occur with a positive exponent."""
        used = set()
        for exponents in self.terms:
            used.update(i for i, e in enumerate(exponents) if e)
        return tuple(self.ring.names[i] for i in sorted(used))

    def differentiate(self, name: str) -> "MultiPoly":
        return differentiate(self, name)

    def evaluate(self, assignment: Mapping[str, complex]) -> complex:
        return evaluate(self, assignment)

    def substitute(self, assignment: Mapping[str, complex]) -> "MultiPoly":
        """
        Replace some variables by numbers.

        Args:
            assignment (Mapping[str, complex]): Values for a subset of the ring.

        Returns:
            MultiPoly: Polynomial in the same ring free of the assigned variables.
        """
        slots = {self.ring.index(name): complex(value) for name, value in assignment.items()}
        terms: dict[tuple, complex] = {}
        for exponents, coeff in self.terms.items():
            reduced = list(exponents)
            for slot, value in slots.items():
                if reduced[slot]:
                    coeff = coeff * value ** reduced[slot]
                    reduced[slot] = 0
            key = tuple(reduced)
            terms[key] = terms.get(key, 0) + coeff
        return MultiPoly(self.ring, terms)

    def univariate_coefficients(self, name: str) -> np.ndarray:
        """
        Coefficients of a polynomial in a single variable, lowest degree first.

        Args:
            name (str): The only variable allowed to occur.

        Returns:
            numpy.ndarray: Complex coefficients in numpy.polynomial order.
        """
        slot = self.ring.index(name)
        coeffs = np.zeros(self.degree() + 1, dtype=complex)
        for exponents, coeff in self.terms.items():
            if any(e for i, e in enumerate(exponents) if i != slot):
                raise ValueError(f"polynomial is not univariate in {name}")
            coeffs[exponents[slot]] += coeff
        return coeffs

    def dump(self) -> str:
        """Plain-text ``coeff*var^exp`` rendering, terms in descending exponent order."""
        parts = []
        for exponents in sorted(self.terms, reverse=True):
            coeff = self.terms[exponents]
            if coeff.imag == 0:
                text = format(coeff.real, ".17g")
            else:
                text = f"({coeff.real:.17g}{coeff.imag:+.17g}j)"
            factors = [
                name if e == 1 else f"{name}^{e}"
                for name, e in zip(self.ring.names, exponents)
                if e
            ]
            parts.append("*".join([text, *factors]))
        return " + ".join(parts)


def differentiate(p: MultiPoly, var: str) -> MultiPoly:
    """
    Exact formal partial derivative.

    Args:
        p (MultiPoly): Polynomial to differentiate.
        var (str): Registered variable name.

    Returns:
        MultiPoly: dp/dvar in the same ring.
    """
    slot = p.ring.index(var)
    terms: dict[tuple, complex] = {}
    for exponents, coeff in p.terms.items():
        power = exponents[slot]
        if power:
            lowered = exponents[:slot] + (power - 1,) + exponents[slot + 1:]
            terms[lowered] = coeff * power
    return MultiPoly(p.ring, terms)


def evaluate(p: MultiPoly, assignment: Mapping[str, complex]) -> complex:
    """
    Evaluate a polynomial at a point.

    Args:
        p (MultiPoly): Polynomial.
        assignment (Mapping[str, complex]): Values of every occurring variable.

    Returns:
        complex: p at the point.
    """
    values = {}
    for name in p.variables():
        try:
            values[p.ring.index(name)] = complex(assignment[name])
        except KeyError:
            raise MissingAssignment(name) from None
    powers = {}
    total = 0j
    for exponents, coeff in p.terms.items():
        term = coeff
        for slot, power in enumerate(exponents):
            if power:
                if (slot, power) not in powers:
                    powers[slot, power] = values[slot] ** power
                term *= powers[slot, power]
        total += term
    return total


def gradient(p: MultiPoly, names: Sequence[str]) -> list[MultiPoly]:
    return [differentiate(p, name) for name in names]


@dataclass(frozen=True)
class ParameterizedSystem:
    """
    Square polynomial system with named unknowns and named parameters.

    Attributes:
        equations (tuple[MultiPoly, ...]): One polynomial per unknown.
        unknowns (tuple[str, ...]): Ordered unknown names.
        parameters (tuple[str, ...]): Ordered parameter names.
    """

    equations: tuple
    unknowns: tuple
    parameters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        object.__setattr__(self, "unknowns", tuple(self.unknowns))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if len(self.equations) != len(self.unknowns):
            raise NonSquareSystem(
                f"{len(self.equations)} equations in {len(self.unknowns)} unknowns"
            )
        if not self.equations:
            raise NonSquareSystem("empty system")
        ring = self.equations[0].ring
        allowed = set(self.unknowns) | set(self.parameters)
        for name in allowed:
            ring.index(name)
        for eq in self.equations:
            if eq.ring != ring:
                raise ValueError("equations belong to different rings")
            stray = set(eq.variables()) - allowed
            if stray:
                raise UnknownVariable(", ".join(sorted(stray)))

    @property
    def ring(self) -> PolynomialRing:
        return self.equations[0].ring

    def jacobian(self) -> list[list[MultiPoly]]:
        return jacobian(self)

    def degrees(self) -> tuple[int, ...]:
        """Degree of every equation counted in the unknowns only."""
        return tuple(eq.degree(self.unknowns) for eq in self.equations)

    def substitute(self, assignment: Mapping[str, complex]) -> "ParameterizedSystem":
        """Fix some parameters to numbers; they leave the parameter roster."""
        fixed = set(assignment)
        if fixed & set(self.unknowns):
            raise ValueError("only parameters can be substituted")
        return ParameterizedSystem(
            tuple(eq.substitute(assignment) for eq in self.equations),
            self.unknowns,
            tuple(name for name in self.parameters if name not in fixed),
        )

    def dump(self) -> str:
        header = [
            f"unknowns: {' '.join(self.unknowns)}",
            f"parameters: {' '.join(self.parameters)}",
        ]
        body = [f"f{i + 1} = {eq.dump() or '0'}" for i, eq in enumerate(self.equations)]
        return "\n".join(header + body) + "\n"

    def compile(self) -> "CompiledSystem":
        return CompiledSystem(self)


def jacobian(system: ParameterizedSystem) -> list[list[MultiPoly]]:
    """
    Symbolic Jacobian with respect to the unknowns.

    Args:
        system (ParameterizedSystem): Square system.

    Returns:
        list[list[MultiPoly]]: Entry (i, j) is d eq_i / d unknown_j.
    """
    return [gradient(eq, system.unknowns) for eq in system.equations]


class _TermTable:
    """Flattened monomial table evaluating many polynomials in one numpy pass."""

    def __init__(self, polys: Sequence[MultiPoly]):
        rows, coeffs, factors = [], [], []
        for row, poly in enumerate(polys):
            for exponents, coeff in poly.terms.items():
                rows.append(row)
                coeffs.append(coeff)
                factors.append([(i, e) for i, e in enumerate(exponents) if e])
        self.size = len(polys)
        self.stride = 1 + max((e for f in factors for _, e in f), default=0)
        width = max((len(f) for f in factors), default=0)
        # padding slots point at x_0^0 == 1
        index = np.zeros((len(factors), max(width, 1)), dtype=np.intp)
        for t, factor in enumerate(factors):
            for slot, (i, e) in enumerate(factor):
                index[t, slot] = i * self.stride + e
        self.index = index
        self.rows = np.asarray(rows, dtype=np.intp)
        self.coeffs = np.asarray(coeffs, dtype=complex)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        powers = np.ones((values.size, self.stride), dtype=complex)
        for k in range(1, self.stride):
            powers[:, k] = powers[:, k - 1] * values
        terms = self.coeffs * powers.ravel()[self.index].prod(axis=1)
        return (
            np.bincount(self.rows, weights=terms.real, minlength=self.size)
            + 1j * np.bincount(self.rows, weights=terms.imag, minlength=self.size)
        )


class CompiledSystem:
    """
    Numeric evaluator of a :class:`ParameterizedSystem` and its Jacobians.

    The system value, the Jacobian in the unknowns and the Jacobian in the
    parameters are precompiled; instances pickle cleanly for worker pools.

    Args:
        system (ParameterizedSystem): System to compile.
    """

    def __init__(self, system: ParameterizedSystem):
        ring = system.ring
        self.unknowns = system.unknowns
        self.parameters = system.parameters
        self.n_unknowns = len(system.unknowns)
        self.n_parameters = len(system.parameters)
        self._n_vars = len(ring)
        self._unknown_slots = np.array([ring.index(n) for n in system.unknowns], dtype=np.intp)
        self._parameter_slots = np.array([ring.index(n) for n in system.parameters], dtype=np.intp)
        self._value = _TermTable(system.equations)
        self._jacobian = _TermTable([p for row in jacobian(system) for p in row])
        self._parameter_jacobian = _TermTable(
            [differentiate(eq, name) for eq in system.equations for name in system.parameters]
        )

    def _values(self, x, p) -> np.ndarray:
        values = np.zeros(self._n_vars, dtype=complex)
        values[self._unknown_slots] = x
        if self.n_parameters:
            values[self._parameter_slots] = p
        return values

    def evaluate(self, x, p=()) -> np.ndarray:
        return self._value(self._values(x, p))

    def jacobian(self, x, p=()) -> np.ndarray:
        return self._jacobian(self._values(x, p)).reshape(self.n_unknowns, self.n_unknowns)

    def parameter_jacobian(self, x, p=()) -> np.ndarray:
        flat = self._parameter_jacobian(self._values(x, p))
        return flat.reshape(self.n_unknowns, self.n_parameters)
