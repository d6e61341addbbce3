"""Model definitions: chemistry, compartment rate constants, and the inflow law.

A full model couples three ingredients: a mass-action reaction network that
runs inside every compartment, four rate constants for the compartment events
(inflow, exit, fragmentation, coagulation), and a probability distribution
giving the contents of freshly arrived compartments.  Values are immutable
after construction and safe to share between threads.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

StateVec = tuple[int, ...]

#: per-species Poisson tails below this mass are dropped when a finite
#: support is materialized
POISSON_TRUNCATION_TAIL = 1e-12

_MU_SUPPORT_CAP = 1_000_000


class ModelError(ValueError):
    """Structurally invalid model component."""


class UnboundedMuError(ModelError):
    """Inflow distribution has no usable finite support."""


def _check_state(vec, d: int | None = None) -> StateVec:
    t = tuple(int(v) for v in vec)
    if any(v < 0 for v in t):
        raise ModelError(f"state vector {t} has a negative entry")
    if d is not None and len(t) != d:
        raise ModelError(f"state vector {t} has dimension {len(t)}, expected {d}")
    return t


@dataclass(frozen=True)
class Reaction:
    """One reaction: reactant complex, product complex, rate constant.

    The rate of the reaction in state x is ``rate * prod_j C(x_j, reactant_j)``
    (binomial convention), so ``rate`` is the per-combination propensity
    constant with units 1/time.
    """

    reactant: StateVec
    product: StateVec
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "reactant", _check_state(self.reactant))
        object.__setattr__(self, "product", _check_state(self.product))
        object.__setattr__(self, "rate", float(self.rate))
        if len(self.reactant) != len(self.product):
            raise ModelError("reactant and product dimensions differ")
        if self.reactant == self.product:
            raise ModelError(f"reaction {self.reactant} -> {self.product} has no effect")
        if not (self.rate >= 0.0) or math.isinf(self.rate):
            raise ModelError(f"rate constant {self.rate} is not a finite non-negative number")

    @property
    def delta(self) -> StateVec:
        return tuple(p - r for r, p in zip(self.reactant, self.product))


@dataclass(frozen=True)
class ReactionNetwork:
    """Species table plus reaction list; species order fixes the dimension."""

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        if not self.species:
            raise ModelError("at least one species is required")
        if len(set(self.species)) != len(self.species):
            raise ModelError("species names must be unique")
        d = self.dimension
        seen = set()
        for r in self.reactions:
            if len(r.reactant) != d:
                raise ModelError("reaction dimension does not match species table")
            key = (r.reactant, r.product)
            if key in seen:
                raise ModelError(f"duplicate reaction {r.reactant} -> {r.product}")
            seen.add(key)

    @property
    def dimension(self) -> int:
        return len(self.species)


@dataclass(frozen=True)
class CompartmentParams:
    """Rate constants for the four compartment events, each >= 0 (1/time)."""

    kappa_i: float = 0.0
    kappa_e: float = 0.0
    kappa_f: float = 0.0
    kappa_c: float = 0.0

    def __post_init__(self):
        for name in ("kappa_i", "kappa_e", "kappa_f", "kappa_c"):
            v = float(getattr(self, name))
            if not (v >= 0.0) or math.isinf(v):
                raise ModelError(f"{name}={v} must be a finite non-negative number")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class PointMass:
    """Inflow law: every new compartment starts in the same state."""

    state: StateVec

    def __post_init__(self):
        object.__setattr__(self, "state", _check_state(self.state))

    @property
    def dimension(self) -> int:
        return len(self.state)


@dataclass(frozen=True)
class Categorical:
    """Inflow law: finite list of (state, probability) atoms summing to one."""

    atoms: tuple[tuple[StateVec, float], ...]

    def __post_init__(self):
        atoms = tuple((_check_state(s), float(p)) for s, p in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ModelError("categorical inflow law needs at least one atom")
        d = len(atoms[0][0])
        if any(len(s) != d for s, _ in atoms):
            raise ModelError("categorical atoms have inconsistent dimensions")
        if len({s for s, _ in atoms}) != len(atoms):
            raise ModelError("categorical atoms must be distinct states")
        if any(p <= 0.0 for _, p in atoms):
            raise ModelError("categorical probabilities must be positive")
        total = math.fsum(p for _, p in atoms)
        if abs(total - 1.0) > 1e-12:
            raise ModelError(f"categorical probabilities sum to {total!r}, expected 1")

    @property
    def dimension(self) -> int:
        return len(self.atoms[0][0])


@dataclass(frozen=True)
class ProductPoisson:
    """Inflow law: species counts independently Poisson with the given means."""

    means: tuple[float, ...]

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        object.__setattr__(self, "means", means)
        if not means:
            raise ModelError("Poisson inflow law needs at least one mean")
        if any(m < 0.0 or math.isinf(m) or math.isnan(m) for m in means):
            raise ModelError("Poisson means must be finite and non-negative")

    @property
    def dimension(self) -> int:
        return len(self.means)


InflowDistribution = Union[PointMass, Categorical, ProductPoisson]


def _poisson_bound(mean: float, tail: float) -> int:
    """Smallest m with P(Poisson(mean) > m) < tail."""
    if mean == 0.0:
        return 0
    p = math.exp(-mean)
    cum = p
    m = 0
    while 1.0 - cum >= tail:
        m += 1
        p *= mean / m
        cum += p
    return m


def mu_support(mu: InflowDistribution) -> list[tuple[StateVec, float]]:
    """Finite (state, probability) support of an inflow law.

    Product-Poisson laws are materialized on the box where each species'
    tail mass is below ``POISSON_TRUNCATION_TAIL``; the dropped mass is not
    renormalized.  Raises :class:`UnboundedMuError` if the materialized
    support would be absurdly large.
    """
    if isinstance(mu, PointMass):
        return [(mu.state, 1.0)]
    if isinstance(mu, Categorical):
        return list(mu.atoms)
    if isinstance(mu, ProductPoisson):
        bounds = [_poisson_bound(m, POISSON_TRUNCATION_TAIL) for m in mu.means]
        size = 1
        for b in bounds:
            size *= b + 1
            if size > _MU_SUPPORT_CAP:
                raise UnboundedMuError(
                    f"Poisson inflow support exceeds {_MU_SUPPORT_CAP} states after truncation"
                )
        pmfs = []
        for mean, bound in zip(mu.means, bounds):
            row = [math.exp(-mean)]
            for k in range(1, bound + 1):
                row.append(row[-1] * mean / k)
            pmfs.append(row)
        out = []
        for vec in itertools.product(*(range(b + 1) for b in bounds)):
            p = 1.0
            for k, v in enumerate(vec):
                p *= pmfs[k][v]
            if p > 0.0:
                out.append((vec, p))
        return out
    raise ModelError(f"unknown inflow law {mu!r}")


def mu_sample(mu: InflowDistribution, rng) -> StateVec:
    """Draw one arriving-compartment state from the inflow law."""
    if isinstance(mu, PointMass):
        return mu.state
    if isinstance(mu, Categorical):
        i = rng.categorical([p for _, p in mu.atoms])
        return mu.atoms[i][0]
    if isinstance(mu, ProductPoisson):
        return tuple(rng.poisson(m) for m in mu.means)
    raise ModelError(f"unknown inflow law {mu!r}")


@dataclass(frozen=True)
class RnicModel:
    """Full model: internal chemistry, compartment rates, inflow law.

    The inflow law may be omitted only when the inflow rate constant is zero
    (no compartment ever arrives, so no initial-content law is needed).
    """

    chemistry: ReactionNetwork
    compartments: CompartmentParams
    mu: InflowDistribution | None = None

    def __post_init__(self):
        if self.mu is None:
            if self.compartments.kappa_i > 0.0:
                raise ModelError("an inflow law is required when kappa_I > 0")
        elif self.mu.dimension != self.chemistry.dimension:
            raise ModelError(
                f"inflow law dimension {self.mu.dimension} does not match "
                f"chemistry dimension {self.chemistry.dimension}"
            )

    @property
    def dimension(self) -> int:
        return self.chemistry.dimension


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def __str__(self):
        return f"warning: {self.message}"


def _rref_kernel_solver(rows: list[list[int]], d: int):
    """Reduced row echelon form of the net-change matrix over the rationals.

    Returns (pivot columns, free columns, solver) where solver maps an
    assignment of the free coordinates to the full kernel vector, or None
    where the pivot entries come out non-integral.
    """
    mat = [[Fraction(v) for v in row] for row in rows]
    pivots: list[int] = []
    r = 0
    for c in range(d):
        pivot_row = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot_row is None:
            continue
        mat[r], mat[pivot_row] = mat[pivot_row], mat[r]
        inv = mat[r][c]
        mat[r] = [v / inv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(d) if c not in pivots]

    def solve(assignment: dict[int, int]):
        w: list[Fraction | int] = [0] * d
        for c in free:
            w[c] = Fraction(assignment[c])
        for row_idx, c in enumerate(pivots):
            acc = Fraction(0)
            for fc in free:
                acc -= mat[row_idx][fc] * w[fc]
            w[c] = acc
        out = []
        for v in w:
            fv = Fraction(v)
            if fv.denominator != 1:
                return None
            out.append(int(fv))
        return out

    return pivots, free, solve


def conservation_laws(chem: ReactionNetwork, max_entry: int = 32) -> list[StateVec]:
    """Non-negative integer combinations of species preserved by every reaction.

    Searches the kernel of the net-change matrix for vectors w >= 0, w != 0
    with entries bounded by ``max_entry``, enumerating the free coordinates of
    the kernel basis.  Bounded by construction; a full decision procedure is
    out of scope, this exists to power diagnostics.
    """
    d = chem.dimension
    rows = [list(r.delta) for r in chem.reactions]
    if not rows:
        # no reactions: every species count is conserved
        return [tuple(1 if j == k else 0 for j in range(d)) for k in range(d)]
    pivots, free, solve = _rref_kernel_solver(rows, d)
    if not free:
        return []
    if (max_entry + 1) ** len(free) > 2_000_000:
        # keep the diagnostic search bounded for wide kernels
        grid: list[tuple[int, ...]] = [t for t in itertools.product(range(2), repeat=len(free))]
    else:
        grid = list(itertools.product(range(max_entry + 1), repeat=len(free)))
    found: set[StateVec] = set()
    for values in grid:
        if not any(values):
            continue
        w = solve(dict(zip(free, values)))
        if w is None or any(v < 0 or v > max_entry for v in w):
            continue
        g = math.gcd(*w)
        if g > 0:
            found.add(tuple(v // g for v in w))
    return sorted(found)


def _law_text(chem: ReactionNetwork, w: StateVec) -> str:
    terms = []
    for coeff, name in zip(w, chem.species):
        if coeff == 1:
            terms.append(name)
        elif coeff > 1:
            terms.append(f"{coeff}{name}")
    return "+".join(terms)


def validate(model: RnicModel) -> list[Diagnostic]:
    """Non-fatal diagnostics for a structurally valid model."""
    out: list[Diagnostic] = []
    for r in model.chemistry.reactions:
        if r.rate == 0.0:
            out.append(
                Diagnostic(
                    "zero-rate-reaction",
                    f"reaction {_complex_text(model.chemistry, r.reactant)} -> "
                    f"{_complex_text(model.chemistry, r.product)} has zero rate",
                )
            )
    laws = conservation_laws(model.chemistry)
    for w in laws[:8]:
        out.append(
            Diagnostic(
                "conservation-law",
                f"conservation law: total {_law_text(model.chemistry, w)} preserved by chemistry",
            )
        )
    p = model.compartments
    if p.kappa_i == p.kappa_e == p.kappa_f == p.kappa_c == 0.0:
        out.append(
            Diagnostic(
                "static-compartments",
                "all compartment rates are zero: all compartment states absorbing",
            )
        )
    return out


def _complex_text(chem: ReactionNetwork, vec: StateVec) -> str:
    terms = []
    for coeff, name in zip(vec, chem.species):
        if coeff == 1:
            terms.append(name)
        elif coeff > 1:
            terms.append(f"{coeff}{name}")
    return " + ".join(terms) if terms else "0"
