# -*- coding: utf-8 -*-
"""
@description: The cut metric between measures on Omega^n, couplings, product and
mixture constructions, and the Wasserstein D1 distance between finite atom lists.

Cutm(mu, nu) = (1/n) min over couplings gamma of the max over (I, omega, sign) of
    sum_{(sigma, tau)} gamma(sigma, tau) max(0, sign * sum_{i in I} (1{sigma_i = omega} - 1{tau_i = omega})).
For fixed (I, omega, sign) the best event B keeps the pairs with a positive
integrand, so the adversary family is finite and every member is linear in gamma.

Modes:
    exact  the min-max as one linear program over the coupling polytope
    upper  the adversary max under a supplied or heuristic coupling
    lower  for candidate adversaries, the min over all couplings of that single
           functional (a transport problem); the max over candidates
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import ot
import scipy.sparse as sp
from loguru import logger
from scipy.optimize import linprog

from gibbs import BudgetExceededError, DenseMeasure, check_budget, configurations, marginal

__all__ = [
    'DEFAULT_PAIR_BUDGET',
    'DEFAULT_FUNCTIONAL_BUDGET',
    'Coupling',
    'AdversaryWitness',
    'CutResult',
    'tv_distance',
    'independent_coupling',
    'diagonal_coupling',
    'cut_distance',
    'product_measure',
    'product_of_marginals',
    'mixture',
    'tensor_product',
    'product_and_mixture',
    'wasserstein_d1',
]

DEFAULT_PAIR_BUDGET = 2 ** 16
DEFAULT_FUNCTIONAL_BUDGET = 2 ** 18
# coefficient entries of the exact LP
DEFAULT_LP_ENTRY_BUDGET = 2 ** 27
# lower mode tries the whole adversary family up to this size
LOWER_FAMILY_LIMIT = 64
_CHUNK = 2 ** 22


@dataclass(eq=False)
class Coupling:
    """A sparse joint distribution; left/right are configuration indices of mu and nu."""

    left: np.ndarray
    right: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        keep = np.asarray(self.mass) > 0
        self.left = np.asarray(self.left, dtype=np.int64)[keep]
        self.right = np.asarray(self.right, dtype=np.int64)[keep]
        self.mass = np.asarray(self.mass, dtype=np.float64)[keep]

    @property
    def support_size(self) -> int:
        return len(self.mass)

    def check_marginals(self, mu: DenseMeasure, nu: DenseMeasure, atol: float = 1e-10):
        rows = np.bincount(self.left, weights=self.mass, minlength=len(mu.probs))
        cols = np.bincount(self.right, weights=self.mass, minlength=len(nu.probs))
        if len(rows) != len(mu.probs) or len(cols) != len(nu.probs):
            raise ValueError("marginal mismatch: coupling indices out of range")
        if not np.allclose(rows, mu.probs, atol=atol) or not np.allclose(cols, nu.probs, atol=atol):
            raise ValueError("marginal mismatch: coupling does not reproduce both measures")


@dataclass(frozen=True)
class AdversaryWitness:
    I: Tuple[int, ...]
    omega: int
    sign: int
    value: float

    def to_json(self):
        return {"I": list(self.I), "omega": self.omega, "sign": self.sign}


@dataclass
class CutResult:
    value: float
    mode: str
    witness: Optional[AdversaryWitness]
    coupling: Optional[Coupling] = None
    # exact was requested but over budget
    fallback: bool = False

    def to_json(self):
        return {
            "value": self.value,
            "mode": self.mode,
            "fallback": self.fallback,
            "coupling_support_size": None if self.coupling is None else self.coupling.support_size,
            "adversary": None if self.witness is None else self.witness.to_json(),
        }


def tv_distance(p: DenseMeasure, q: DenseMeasure) -> float:
    a = p.probs if isinstance(p, DenseMeasure) else np.asarray(p, dtype=np.float64)
    b = q.probs if isinstance(q, DenseMeasure) else np.asarray(q, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(0.5 * np.abs(a - b).sum())


def independent_coupling(mu: DenseMeasure, nu: DenseMeasure) -> Coupling:
    a, b = mu.support(), nu.support()
    left, right = np.repeat(a, len(b)), np.tile(b, len(a))
    return Coupling(left, right, mu.probs[left] * nu.probs[right])


def diagonal_coupling(mu: DenseMeasure, nu: DenseMeasure) -> Coupling:
    """Maximal diagonal mass min(mu, nu), then the independent coupling of the residuals."""
    common = np.minimum(mu.probs, nu.probs)
    diag = np.flatnonzero(common > 0)
    rest_mu, rest_nu = mu.probs - common, nu.probs - common
    residual = 1.0 - common.sum()
    a, b = np.flatnonzero(rest_mu > 0), np.flatnonzero(rest_nu > 0)
    left = [diag]
    right = [diag]
    mass = [common[diag]]
    if residual > 0 and len(a) and len(b):
        ra, rb = rest_mu[a], rest_nu[b]
        left.append(np.repeat(a, len(b)))
        right.append(np.tile(b, len(a)))
        mass.append(np.outer(ra, rb).reshape(-1) / residual)
    return Coupling(np.concatenate(left), np.concatenate(right), np.concatenate(mass))


class _Reduced:
    """
    The pair (mu, nu) restricted to the coordinates that are not deterministic
    and equal in both; those contribute 0 under every coupling.
    """

    def __init__(self, mu: DenseMeasure, nu: DenseMeasure):
        if mu.n != nu.n or mu.q != nu.q:
            raise ValueError(f"Cut metric needs measures on the same cube, got {mu} and {nu}")
        self.n, self.q = mu.n, mu.q
        keep = []
        for i in range(mu.n):
            mi, ni = marginal(mu, [i]).probs, marginal(nu, [i]).probs
            if not (mi.max() == 1.0 and ni.max() == 1.0 and mi.argmax() == ni.argmax()):
                keep.append(i)
        self.keep = tuple(keep)
        self.mu = marginal(mu, keep) if keep else None
        self.nu = marginal(nu, keep) if keep else None
        self._full_mu, self._full_nu = mu, nu
        if keep:
            digits = configurations(len(keep), self.q)
            self.digits = digits
            self.subsets = ((np.arange(1, 2 ** len(keep))[:, None] >> np.arange(len(keep))) & 1).astype(np.float64)
        logger.debug(f"Cut metric on {len(keep)} of {mu.n} coordinates")

    @property
    def family_size(self) -> int:
        return 2 * self.q * (2 ** len(self.keep) - 1)

    def lift_coupling(self, coupling: Coupling) -> Coupling:
        """Map a coupling on the kept coordinates back to full configuration indices."""
        lift_mu = self._lift_index(self._full_mu)
        lift_nu = self._lift_index(self._full_nu)
        return Coupling(lift_mu[coupling.left], lift_nu[coupling.right], coupling.mass)

    def _lift_index(self, mu: DenseMeasure) -> np.ndarray:
        # kept-coordinate configuration -> the unique full configuration carrying it
        out = np.zeros(self.q ** len(self.keep), dtype=np.int64)
        support = mu.support()
        full_digits = np.stack([(support // self.q ** (mu.n - 1 - i)) % self.q for i in self.keep], axis=1)
        local = np.zeros(len(support), dtype=np.int64)
        for col in range(full_digits.shape[1]):
            local = local * self.q + full_digits[:, col]
        out[local] = support
        return out

    def patterns(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """(pairs, q, n') array of 1{sigma_i = omega} - 1{tau_i = omega}."""
        dl, dr = self.digits[left], self.digits[right]
        omegas = np.arange(self.q)[None, :, None]
        return ((dl[:, None, :] == omegas).astype(np.int8) - (dr[:, None, :] == omegas).astype(np.int8))

    def witness(self, omega: int, sign: int, subset: int, value: float) -> AdversaryWitness:
        I = tuple(self.keep[j] for j in range(len(self.keep)) if self.subsets[subset, j])
        return AdversaryWitness(I=I, omega=int(omega), sign=int(sign), value=float(value))

    def functional_values(self, left: np.ndarray, right: np.ndarray, mass: np.ndarray) -> np.ndarray:
        """Adversary values, shape (q, 2, 2^n' - 1), signs ordered (+1, -1), already divided by n."""
        patterns = self.patterns(left, right).reshape(len(mass), -1)
        unique, inverse = np.unique(patterns, axis=0, return_inverse=True)
        weights = np.bincount(inverse.reshape(-1), weights=mass, minlength=len(unique))
        unique = unique.reshape(len(unique), self.q, len(self.keep)).astype(np.float64)
        n_sub = len(self.subsets)
        values = np.zeros((self.q, 2, n_sub))
        step = max(1, _CHUNK // n_sub)
        for start in range(0, len(unique), step):
            block, w = unique[start:start + step], weights[start:start + step]
            for omega in range(self.q):
                h = block[:, omega, :] @ self.subsets.T
                values[omega, 0] += np.maximum(h, 0).T @ w
                values[omega, 1] += np.maximum(-h, 0).T @ w
        return values / self.n

    def best(self, values: np.ndarray) -> AdversaryWitness:
        omega, s, subset = np.unravel_index(int(np.argmax(values)), values.shape)
        return self.witness(omega, 1 if s == 0 else -1, subset, values[omega, s, subset])


def _evaluate(reduced: _Reduced, coupling: Coupling) -> AdversaryWitness:
    return reduced.best(reduced.functional_values(coupling.left, coupling.right, coupling.mass))


def _solve_exact(reduced: _Reduced, pair_budget: int, functional_budget: int,
                 entry_budget: int) -> Tuple[AdversaryWitness, Coupling]:
    a, b = reduced.mu.support(), reduced.nu.support()
    n_pairs = len(a) * len(b)
    check_budget(n_pairs, pair_budget, "cut-metric pair")
    check_budget(reduced.family_size, functional_budget, "cut-metric functional")
    check_budget(n_pairs * reduced.family_size, entry_budget, "cut-metric LP")
    left, right = np.repeat(a, len(b)), np.tile(b, len(a))
    patterns = reduced.patterns(left, right).reshape(n_pairs, -1)
    unique, inverse = np.unique(patterns, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    unique = unique.reshape(len(unique), reduced.q, len(reduced.keep)).astype(np.float64)

    blocks = []
    for omega in range(reduced.q):
        h = unique[:, omega, :] @ reduced.subsets.T
        for sign in (1, -1):
            coeff = np.maximum(sign * h, 0).T / reduced.n
            blocks.append(sp.csr_matrix(coeff)[:, inverse])
    a_ub = sp.hstack([sp.vstack(blocks), -sp.csr_matrix(np.ones((reduced.family_size, 1)))]).tocsr()
    b_ub = np.zeros(reduced.family_size)

    rows = np.concatenate([np.repeat(np.arange(len(a)), len(b)), len(a) + np.tile(np.arange(len(b)), len(a))])
    cols = np.concatenate([np.arange(n_pairs), np.arange(n_pairs)])
    a_eq = sp.csr_matrix((np.ones(2 * n_pairs), (rows, cols)), shape=(len(a) + len(b), n_pairs + 1))
    b_eq = np.concatenate([reduced.mu.probs[a], reduced.nu.probs[b]])
    c = np.zeros(n_pairs + 1)
    c[-1] = 1.0
    logger.debug(f"Cut-metric LP: {n_pairs} pair variables, {reduced.family_size} adversary rows")
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method='highs-ds',
                  options={'primal_feasibility_tolerance': 1e-10, 'dual_feasibility_tolerance': 1e-10})
    if res.status != 0:
        raise ValueError(f"Cut-metric LP failed: {res.message}")
    coupling = Coupling(left, right, np.maximum(res.x[:-1], 0.0))
    return _evaluate(reduced, coupling), coupling


def _candidate_adversaries(reduced: _Reduced, upper: AdversaryWitness) -> List[Tuple[int, int, int]]:
    """(omega, sign, subset row) triples for lower mode."""
    n_sub = len(reduced.subsets)
    if reduced.family_size <= LOWER_FAMILY_LIMIT:
        return [(omega, sign, s) for omega in range(reduced.q) for sign in (1, -1) for s in range(n_sub)]
    candidates = [(omega, sign, n_sub - 1) for omega in range(reduced.q) for sign in (1, -1)]
    mask = [j for j, i in enumerate(reduced.keep) if i in set(upper.I)]
    row = sum(1 << j for j in mask) - 1
    if row >= 0:
        candidates.append((upper.omega, upper.sign, row))
    return candidates


def _adversary_rows(reduced: _Reduced, adversaries) -> List[Tuple[int, int, int]]:
    rows = []
    for I, omega, sign in adversaries:
        bits = [j for j, i in enumerate(reduced.keep) if i in set(I)]
        if bits:
            rows.append((int(omega), int(sign), sum(1 << j for j in bits) - 1))
    return rows


def _solve_lower(reduced: _Reduced, rows: List[Tuple[int, int, int]]) -> AdversaryWitness:
    a, b = reduced.mu.support(), reduced.nu.support()
    wa = reduced.mu.probs[a] / reduced.mu.probs[a].sum()
    wb = reduced.nu.probs[b] / reduced.nu.probs[b].sum()
    left, right = np.repeat(a, len(b)), np.tile(b, len(a))
    patterns = reduced.patterns(left, right).astype(np.float64)
    best = AdversaryWitness(I=(), omega=0, sign=1, value=0.0)
    for omega, sign, row in rows:
        cost = np.maximum(sign * (patterns[:, omega, :] @ reduced.subsets[row]), 0).reshape(len(a), len(b))
        value = float(ot.emd2(wa, wb, cost, numItermax=1_000_000)) / reduced.n
        if value > best.value:
            best = reduced.witness(omega, sign, row, value)
    return best


def cut_distance(
        mu: DenseMeasure,
        nu: DenseMeasure,
        mode: str = "exact",
        coupling: Optional[Coupling] = None,
        adversaries: Optional[Sequence[Tuple[Sequence[int], int, int]]] = None,
        fallback: bool = False,
        pair_budget: int = DEFAULT_PAIR_BUDGET,
        functional_budget: int = DEFAULT_FUNCTIONAL_BUDGET,
        entry_budget: int = DEFAULT_LP_ENTRY_BUDGET,
) -> CutResult:
    """
    Cut distance in the requested mode, with the witness adversary.

    With fallback=True an over-budget exact request degrades to upper mode and
    the result is flagged.
    """
    if mode not in ("exact", "upper", "lower"):
        raise ValueError(f"Unknown cut-metric mode {mode}")
    if coupling is not None:
        coupling.check_marginals(mu, nu)
    reduced = _Reduced(mu, nu)
    if not reduced.keep:
        return CutResult(value=0.0, mode=mode, witness=None, coupling=coupling)

    if mode == "exact":
        try:
            witness, local = _solve_exact(reduced, pair_budget, functional_budget, entry_budget)
            return CutResult(value=witness.value, mode="exact", witness=witness, coupling=reduced.lift_coupling(local))
        except BudgetExceededError as e:
            if not fallback:
                raise
            logger.warning(f"{e}; falling back to upper mode")
            result = cut_distance(mu, nu, mode="upper")
            result.fallback = True
            return result

    if mode == "upper":
        if coupling is not None:
            witness = _evaluate(reduced, _localize(reduced, coupling))
            return CutResult(value=witness.value, mode="upper", witness=witness, coupling=coupling)
        best = None
        for build in (diagonal_coupling, independent_coupling):
            local = build(reduced.mu, reduced.nu)
            witness = _evaluate(reduced, local)
            if best is None or witness.value < best[0].value:
                best = (witness, local)
        return CutResult(value=best[0].value, mode="upper", witness=best[0], coupling=reduced.lift_coupling(best[1]))

    if adversaries is not None:
        rows = _adversary_rows(reduced, adversaries)
    else:
        upper = cut_distance(mu, nu, mode="upper")
        rows = _candidate_adversaries(reduced, upper.witness)
    witness = _solve_lower(reduced, rows)
    return CutResult(value=witness.value, mode="lower", witness=witness)


def _localize(reduced: _Reduced, coupling: Coupling) -> Coupling:
    """Map full configuration indices onto the kept coordinates."""
    def project(index):
        local = np.zeros(len(index), dtype=np.int64)
        for i in reduced.keep:
            local = local * reduced.q + (index // reduced.q ** (reduced.n - 1 - i)) % reduced.q
        return local
    return Coupling(project(coupling.left), project(coupling.right), coupling.mass)


def product_measure(marginals: Sequence[np.ndarray], q: Optional[int] = None) -> DenseMeasure:
    """The product of per-variable distributions, variable 0 most significant."""
    marginals = [np.asarray(m, dtype=np.float64) for m in marginals]
    if not marginals:
        raise ValueError("Product measure needs at least one marginal")
    q = q or len(marginals[0])
    probs = np.ones(1)
    for m in marginals:
        if len(m) != q:
            raise ValueError(f"Marginal of length {len(m)} on a spin domain of size {q}")
        probs = np.multiply.outer(probs, m).reshape(-1)
    return DenseMeasure(len(marginals), q, probs)


def product_of_marginals(mu: DenseMeasure) -> DenseMeasure:
    """bar mu = product of the single-variable marginals of mu."""
    return product_measure([marginal(mu, [i]).probs for i in range(mu.n)], mu.q)


def mixture(weights: Sequence[float], components: Sequence[DenseMeasure]) -> DenseMeasure:
    weights = np.asarray(weights, dtype=np.float64)
    if len(weights) != len(components) or not components:
        raise ValueError("Mixture needs one weight per component")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-10:
        raise ValueError(f"weight vector not normalized: sum {weights.sum()}")
    n, q = components[0].n, components[0].q
    probs = np.zeros(q ** n)
    for w, component in zip(weights, components):
        if (component.n, component.q) != (n, q):
            raise ValueError("Mixture components must live on the same cube")
        probs += w * component.probs
    return DenseMeasure(n, q, probs)


def tensor_product(mu: DenseMeasure, nu: DenseMeasure) -> DenseMeasure:
    """mu x nu on n_mu + n_nu coordinates, mu's coordinates first."""
    if mu.q != nu.q:
        raise ValueError("Tensor product needs a common spin domain")
    return DenseMeasure(mu.n + nu.n, mu.q, np.outer(mu.probs, nu.probs).reshape(-1))


def product_and_mixture(parts) -> DenseMeasure:
    """
    Product of marginals when parts is a list of 1-d distributions,
    mixture when parts is a list of (weight, DenseMeasure) pairs.
    """
    parts = list(parts)
    if parts and isinstance(parts[0], tuple):
        return mixture([w for w, _ in parts], [m for _, m in parts])
    return product_measure(parts)


def _tv_ground(a, b) -> float:
    return float(0.5 * np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)).sum())


def wasserstein_d1(
        P: Sequence[Tuple[object, float]],
        Q: Sequence[Tuple[object, float]],
        ground: Optional[Callable[[object, object], float]] = None,
) -> float:
    """Exact optimal-transport distance between two finite weighted atom lists."""
    ground = ground or _tv_ground
    wp = np.array([w for _, w in P], dtype=np.float64)
    wq = np.array([w for _, w in Q], dtype=np.float64)
    for w in (wp, wq):
        if len(w) == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("unnormalized atom weights")
    cost = np.array([[ground(a, b) for b, _ in Q] for a, _ in P], dtype=np.float64)
    return float(ot.emd2(wp / wp.sum(), wq / wq.sum(), cost, numItermax=1_000_000))
