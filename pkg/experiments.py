# -*- coding: utf-8 -*-
"""
@description: Experiment configuration, the experiment registry and the
seeded runner that turns per-seed measurements into report files.

Every experiment maps (config, seed) to a SeedResult of long-format cells.
Seeds are independent; results are merged in seed order, so the emitted
files depend only on the config and the seed list.
"""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from belief_propagation import bp_iterate, canonical_residual, potts_bp_residual
from cavities import bethe_deviation, enumerate_cavities, potts_bethe_suite
from cut_metric import product_of_marginals
from factor_graph import Constraint, FactorGraph, induced_subgraph
from gibbs import (
    DEFAULT_BUDGET,
    BudgetExceededError,
    ConditionalGibbs,
    SubcubeEvent,
    ZeroNormalizerError,
    gibbs_table,
)
from messages import message_metric
from observables import continuity_probe, overlap_distribution
from pinning import decompose, mixture_check, retain_states, run_pinning, sample_plan, symmetry_score
from random_models import ModelSpec, model_spec_from_dict, sample_acyclic_graph, sample_graph, substream

__all__ = [
    'ExperimentConfig',
    'Experiment',
    'SeedResult',
    'CELL_COLUMNS',
    'register_experiment',
    'get_experiment',
    'list_experiments',
    'parse_int_list',
    'summarize',
    'run_experiment',
    'emit_report',
]

CELL_COLUMNS = ["experiment", "seed", "n", "theta", "state", "mass", "l", "r", "quantity", "value", "mode", "status"]
OVERLAP_COLUMNS = ["seed", "atom", "omega", "omega_prime", "value", "weight"]


def parse_int_list(text: Optional[str]) -> List[int]:
    """'a..b' (inclusive), 'a,b,c' or a single integer."""
    if text is None or str(text).strip() == "":
        return []
    text = str(text).strip()
    if ".." in text:
        lo, hi = (int(part) for part in text.split(".."))
        if hi < lo:
            raise ValueError(f"Empty range {text}")
        return list(range(lo, hi + 1))
    return [int(part) for part in text.split(",") if part.strip()]


@dataclass
class ExperimentConfig:
    """
    Arguments of one experiment run. JSON config files use the same field
    names; command-line values override the file.
    """

    name: str = field(default="sweep", metadata={"help": "Experiment to run, see list_experiments()"})
    model: str = field(default="potts", metadata={"help": "Weight family: potts or ksat"})
    n: int = field(default=10, metadata={"help": "Number of variables"})
    q: int = field(default=2, metadata={"help": "Spin domain size (Potts only; k-SAT is binary)"})
    k: int = field(default=2, metadata={"help": "Constraint arity (k-SAT only; Potts is pairwise)"})
    beta: float = field(default=1.0, metadata={"help": "Inverse temperature"})
    d: Optional[float] = field(default=2.0, metadata={"help": "Average degree, m ~ Po(dn/k)"})
    m: Optional[int] = field(default=None, metadata={"help": "Fixed constraint count; overrides d when set"})
    condition_acyclic: bool = field(default=False, metadata={"help": "Condition the graph on being acyclic"})
    epsilon: float = field(default=0.25, metadata={"help": "Target accuracy, in (0, 1/2)"})
    ell: int = field(default=3, metadata={"help": "Largest cavity size l"})
    max_states: int = field(default=8, metadata={"help": "State budget L of the retention rule"})
    mass_floor: Optional[float] = field(
        default=None, metadata={"help": "Smallest retained state mass, default epsilon / 2^theta"})
    full_cube: bool = field(default=False, metadata={"help": "Use S = full cube instead of pinning states"})
    seeds: str = field(default="0..9", metadata={"help": "Seeds as a..b or a,b,c"})
    thetas: Optional[str] = field(default=None, metadata={"help": "Theta values for the pin sweep, e.g. 1,2,4"})
    theta_exponent: float = field(default=10.0, metadata={"help": "Exponent c of the theta bound"})
    sizes: str = field(default="8,10,12", metadata={"help": "Values of n for the potts size sweep"})
    radii: str = field(default="1,2", metadata={"help": "Neighbourhood depths r of the Potts suite, e.g. 1,2"})
    bethe_tolerance: float = field(
        default=0.05, metadata={"help": "Potts suite: a seed passes when every neighbourhood score stays below this"})
    symmetry_order: int = field(default=3, metadata={"help": "Largest order k of the symmetry scores next to cutm"})
    cutm_mode: str = field(default="upper", metadata={"help": "Cut-metric mode in reports: exact or upper"})
    cavity_limit: int = field(default=1000, metadata={"help": "Exhaustive cavity enumeration limit"})
    exact_budget: int = field(default=DEFAULT_BUDGET, metadata={"help": "Enumeration budget q^n"})
    bp_damping: float = field(default=0.0, metadata={"help": "BP damping in [0, 1)"})
    bp_max_iters: int = field(default=200, metadata={"help": "BP iteration cap"})
    bp_tol: float = field(default=1e-10, metadata={"help": "BP residual tolerance"})
    coupling_samples: int = field(default=200, metadata={"help": "Draws per seed of the cavity coupling check"})
    enable_coupling_check: bool = field(default=False, metadata={"help": "Allow the coupling experiment"})
    num_workers: int = field(default=1, metadata={"help": "Worker processes over seeds"})
    output_dir: str = field(default="outputs", metadata={"help": "Report directory", "aliases": ["--out"]})

    def __post_init__(self):
        if self.model not in ("potts", "ksat"):
            raise ValueError(f"model must be potts or ksat, got {self.model}")
        if self.m is not None:
            self.d = None
        if self.d is None and self.m is None:
            raise ValueError("One of d or m must be set")
        if not 0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if self.cutm_mode not in ("exact", "upper"):
            raise ValueError(f"cutm_mode must be exact or upper, got {self.cutm_mode}")
        for name in ("ell", "max_states", "cavity_limit", "exact_budget", "bp_max_iters", "coupling_samples",
                     "num_workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not parse_int_list(self.radii) or min(parse_int_list(self.radii)) < 0:
            raise ValueError(f"radii must be non-negative integers, got {self.radii}")
        if self.symmetry_order < 2:
            raise ValueError(f"symmetry_order must be >= 2, got {self.symmetry_order}")
        if not parse_int_list(self.seeds):
            raise ValueError("At least one seed is required")

    @property
    def seed_list(self) -> List[int]:
        return parse_int_list(self.seeds)

    def model_spec(self, seed: int, n: Optional[int] = None) -> ModelSpec:
        return model_spec_from_dict({
            "model": self.model, "n": self.n if n is None else n, "q": self.q,
            "k": 2 if self.model == "potts" else self.k, "beta": self.beta,
            "d": self.d, "m": self.m, "seed": seed,
        })

    def report_dict(self) -> Dict:
        """Fields that determine the numbers; worker count and output path do not."""
        data = asdict(self)
        data.pop("num_workers")
        data.pop("output_dir")
        return data


@dataclass
class SeedResult:
    seed: int
    status: str = "ok"
    cells: List[Dict] = field(default_factory=list)
    messages: Optional[List[Dict]] = None
    overlaps: List[Dict] = field(default_factory=list)
    witness: Optional[Dict] = None
    extra: Dict = field(default_factory=dict)


@dataclass
class Experiment:
    name: str
    description: str
    run_seed: Callable[[ExperimentConfig, int], SeedResult]
    # config flag that must be true before the experiment runs
    requires_flag: Optional[str] = None


# A global registry for all experiments
experiments: Dict[str, Experiment] = {}


def register_experiment(experiment: Experiment):
    """Register a new experiment."""
    experiments[experiment.name] = experiment


def get_experiment(name: str) -> Experiment:
    """Get an experiment by name."""
    if name not in experiments:
        raise ValueError(f"Unknown experiment {name}, expected one of {list_experiments()}")
    return experiments[name]


def list_experiments() -> List[str]:
    return sorted(experiments)


class _Cells:
    """Row builder that turns budget and normalizer failures into cell statuses."""

    def __init__(self, experiment: str, seed: int, n: int):
        self.rows: List[Dict] = []
        self.base = {"experiment": experiment, "seed": seed, "n": n}

    def add(self, quantity: str, value, mode: str = "exact", status: str = "ok", **keys):
        row = {col: None for col in CELL_COLUMNS}
        row.update(self.base)
        row.update(keys)
        row.update({"quantity": quantity, "value": value, "mode": mode, "status": status})
        self.rows.append(row)

    def guarded(self, quantity: str, compute: Callable[[], Tuple[Optional[float], str]], **keys):
        try:
            value, mode = compute()
        except BudgetExceededError as e:
            logger.warning(f"{quantity}: {e}")
            self.add(quantity, None, mode="", status="budget_exceeded", **keys)
            return
        except ZeroNormalizerError as e:
            logger.warning(f"{quantity}: {e}")
            self.add(quantity, None, mode="", status="zero_normalizer", **keys)
            return
        self.add(quantity, value, mode=mode, status="ok" if value is not None else "empty", **keys)


def _sample_instance(config: ExperimentConfig, seed: int, n: Optional[int] = None) -> FactorGraph:
    spec = config.model_spec(seed, n)
    return sample_acyclic_graph(spec) if config.condition_acyclic else sample_graph(spec)


def _state_label(event: Optional[SubcubeEvent]) -> str:
    if event is None or not event.I:
        return "full"
    return ";".join(f"{i}={s}" for i, s in zip(event.I, event.sigma))


def _states(config: ExperimentConfig, mu, seed: int) -> Tuple[List[Tuple[Optional[SubcubeEvent], float]], Optional[int]]:
    """S = full cube, or the retained subcube states of one pinning draw."""
    if config.full_cube:
        return [(None, 1.0)], None
    plan = sample_plan(mu, config.epsilon, seed, c=config.theta_exponent)
    decomposition = decompose(mu, plan.I)
    kept, covered = retain_states(decomposition, config.epsilon, config.max_states, config.mass_floor)
    logger.debug(f"Seed {seed}: theta={plan.theta}, kept {len(kept)} states covering {covered:.4f}")
    return [(SubcubeEvent(plan.I, s.sigma), s.mass) for s in kept], plan.theta


def _bethe_cells(cells: _Cells, graph: FactorGraph, config: ExperimentConfig, oracle: ConditionalGibbs,
                 event, seed: int, **keys):
    for l in range(1, min(config.ell, graph.n) + 1):
        for r in range(1, l + 1):
            def compute(l=l, r=r):
                result = bethe_deviation(graph, l, r, event, config.cavity_limit, seed, oracle, config.exact_budget)
                return result.deviation, "sampled" if result.sampled else "exact"
            cells.guarded("bethe_deviation", compute, l=l, r=r, **keys)


def _run_guarded(config: ExperimentConfig, seed: int, body: Callable[[_Cells, SeedResult], None],
                 n: Optional[int] = None) -> SeedResult:
    result = SeedResult(seed=seed)
    cells = _Cells(config.name, seed, config.n if n is None else n)
    try:
        body(cells, result)
    except BudgetExceededError as e:
        logger.warning(f"Seed {seed}: {e}")
        result.status = "budget_exceeded"
    except ZeroNormalizerError as e:
        logger.warning(f"Seed {seed}: {e}")
        result.status = "zero_normalizer"
    result.cells = cells.rows
    return result


def _run_pin(config: ExperimentConfig, seed: int) -> SeedResult:
    thetas = parse_int_list(config.thetas) or [None]

    def body(cells: _Cells, result: SeedResult):
        graph = _sample_instance(config, seed)
        mu = gibbs_table(graph, budget=config.exact_budget).mu
        for theta in thetas:
            pinned = run_pinning(mu, config.epsilon, seed, mode=config.cutm_mode, theta=theta,
                                 c=config.theta_exponent)
            report = pinned.report
            keys = {"theta": report["theta"]}
            cells.add("sampled_state_cutm", report["sampled_cutm"], report["sampled_cutm_mode"], **keys)
            cells.add("avg_state_cutm", report["avg_state_cutm"], config.cutm_mode, **keys)
            cells.add("mixture_cutm", report["mixture_cutm"], report["mixture_cutm_mode"], **keys)

    return _run_guarded(config, seed, body)


def _run_bethe(config: ExperimentConfig, seed: int) -> SeedResult:
    def body(cells: _Cells, result: SeedResult):
        graph = _sample_instance(config, seed)
        mu = gibbs_table(graph, budget=config.exact_budget).mu
        states, theta = _states(config, mu, seed)
        for event, mass in states:
            oracle = ConditionalGibbs(graph, event, config.exact_budget)
            _bethe_cells(cells, graph, config, oracle, event, seed, theta=theta, state=_state_label(event), mass=mass)

    return _run_guarded(config, seed, body)


def _run_bp(config: ExperimentConfig, seed: int) -> SeedResult:
    def body(cells: _Cells, result: SeedResult):
        graph = _sample_instance(config, seed)
        run = bp_iterate(graph, damping=config.bp_damping, max_iters=config.bp_max_iters, tol=config.bp_tol)
        cells.add("bp_residual", run.residual, "exact")
        cells.add("bp_iters", run.iters, "exact")
        result.messages = run.messages.to_json()
        canonical = ConditionalGibbs(graph, None, config.exact_budget).messages
        cells.add("bp_to_canonical", message_metric(run.messages, canonical), "exact")
        mu = gibbs_table(graph, budget=config.exact_budget).mu
        states, theta = _states(config, mu, seed)
        for event, mass in states:
            cells.guarded("canonical_residual",
                          lambda event=event: (canonical_residual(graph, event, budget=config.exact_budget), "exact"),
                          theta=theta, state=_state_label(event), mass=mass)

    return _run_guarded(config, seed, body)


def _run_cutm(config: ExperimentConfig, seed: int) -> SeedResult:
    def body(cells: _Cells, result: SeedResult):
        graph = _sample_instance(config, seed)
        mu = gibbs_table(graph, budget=config.exact_budget).mu
        probe = continuity_probe(mu, product_of_marginals(mu), mode=config.cutm_mode, budget=config.exact_budget)
        cells.add("cutm_to_product", probe.cutm, probe.cutm_mode)
        cells.add("observable_gap", probe.gap, "exact")
        cells.add("overlap_d1", probe.d1, "exact")
        result.witness = probe.cut.to_json()
        # small cutm to the product should come with small symmetry scores of every order
        cells.add("symmetry2", symmetry_score(mu) if mu.n >= 2 else 0.0, "exact")
        for order in range(3, min(config.symmetry_order, mu.n) + 1):
            cells.add(f"symmetry{order}", symmetry_score(mu, order=order), "exact")
        overlaps = overlap_distribution(mu, config.exact_budget)
        for atom, (matrix, weight) in enumerate(zip(overlaps.atoms, overlaps.weights)):
            for omega in range(mu.q):
                for omega_prime in range(mu.q):
                    result.overlaps.append({"seed": seed, "atom": atom, "omega": omega, "omega_prime": omega_prime,
                                            "value": float(matrix[omega, omega_prime]), "weight": float(weight)})

    return _run_guarded(config, seed, body)


def _run_potts(config: ExperimentConfig, seed: int) -> SeedResult:
    if config.model != "potts":
        raise ValueError("The potts experiment needs model=potts")
    cells_all: List[Dict] = []
    status = "ok"
    for n in parse_int_list(config.sizes):
        def body(cells: _Cells, result: SeedResult, n=n):
            graph = _sample_instance(config, seed, n)
            mu = gibbs_table(graph, budget=config.exact_budget).mu
            states, theta = _states(config, mu, seed)
            for event, mass in states:
                keys = {"theta": theta, "state": _state_label(event), "mass": mass}
                oracle = ConditionalGibbs(graph, event, config.exact_budget)
                for r in parse_int_list(config.radii):
                    suite = potts_bethe_suite(graph, config.beta, r, event, config.exact_budget)
                    cells.add("potts_score_a", suite["score_a"], "exact", r=r, **keys)
                    cells.add("potts_non_cavity", len(suite["non_cavity"]), "exact", r=r, **keys)
                cells.add("potts_score_b", suite["score_b"], "exact", **keys)
                cells.add("potts_bp_residual",
                          potts_bp_residual(graph, config.beta, event, config.exact_budget, oracle), "exact", **keys)

        part = _run_guarded(config, seed, body, n=n)
        cells_all.extend(part.cells)
        if part.status != "ok":
            status = part.status
    result = SeedResult(seed=seed, status=status, cells=cells_all)
    scores = [c["value"] for c in cells_all if c["quantity"] == "potts_score_a" and c["status"] == "ok"]
    if status == "ok" and scores:
        result.extra["bethe_pass"] = max(scores) < config.bethe_tolerance
    return result


def _run_sweep(config: ExperimentConfig, seed: int) -> SeedResult:
    def body(cells: _Cells, result: SeedResult):
        graph = _sample_instance(config, seed)
        mu = gibbs_table(graph, budget=config.exact_budget).mu
        states, theta = _states(config, mu, seed)
        covered = float(sum(mass for _, mass in states))
        cells.add("retained_mass", covered, "exact", theta=theta)
        cells.add("n_states", len(states), "exact", theta=theta)
        result.extra["covered"] = covered
        for event, mass in states:
            keys = {"theta": theta, "state": _state_label(event), "mass": mass}
            oracle = ConditionalGibbs(graph, event, config.exact_budget)
            cells.guarded("symmetry2", lambda: (symmetry_score(oracle.measure) if graph.n >= 2 else 0.0, "exact"),
                          **keys)
            _bethe_cells(cells, graph, config, oracle, event, seed, **keys)
            cells.guarded("canonical_residual",
                          lambda event=event: (canonical_residual(graph, event, budget=config.exact_budget), "exact"),
                          **keys)
        partition = [event for event, _ in states]
        if not partition:
            return
        report = mixture_check(mu, partition if partition[0] is not None else [SubcubeEvent((), ())],
                               config.epsilon, mode=config.cutm_mode)
        cells.add("mixture_cutm", report["mixture_cutm"], report["cutm_mode"], theta=theta)

    return _run_guarded(config, seed, body)


def _planted_boundary(config: ExperimentConfig, H: FactorGraph, rng: np.random.Generator) -> int:
    """|dU'| in the planted construction: Po(dn/k (1 - (l/n)^k)) outside constraints plus a copy of H."""
    spec = config.model_spec(0)
    n, l, k = config.n, H.n, spec.k
    lam = spec.d * n / k * (1.0 - (l / n) ** k)
    family = spec.family
    cdf = np.cumsum(family.P)
    constraints = [Constraint(tuple(n - l + x for x in c.neighbors), c.weight) for c in H.constraints]
    for _ in range(int(rng.poisson(lam))):
        while True:
            neighbors = tuple(int(x) for x in rng.integers(0, n, size=k))
            if not all(x >= n - l for x in neighbors):
                break
        j = min(int(np.searchsorted(cdf, rng.random(), side='right')), len(cdf) - 1)
        constraints.append(Constraint(neighbors, family.psis[j]))
    perm = rng.permutation(n)
    U = {int(perm[x]) for x in range(n - l, n)}
    return sum(1 for c in constraints
               if any(int(perm[x]) in U for x in c.neighbors) and any(int(perm[x]) not in U for x in c.neighbors))


def _run_coupling(config: ExperimentConfig, seed: int) -> SeedResult:
    """
    Boundary-size law of a uniform cavity of a random graph against the
    planted construction with the same internal graph.
    """
    if config.m is not None:
        raise ValueError("The coupling check needs the Poisson model (d set)")

    def body(cells: _Cells, result: SeedResult):
        l = min(config.ell, config.n)
        direct, planted = [], []
        for i in range(config.coupling_samples):
            rng = substream(seed, 7, i)
            graph = sample_graph(config.model_spec(int(rng.integers(2 ** 63))))
            listing = enumerate_cavities(graph, l, 1, config.cavity_limit, seed)
            if not listing.cavities:
                continue
            cavity = listing.cavities[int(rng.integers(len(listing.cavities)))]
            direct.append(len(cavity.boundary))
            H, _ = induced_subgraph(graph, cavity.U)
            planted.append(_planted_boundary(config, H, rng))
        if not direct:
            cells.add("coupling_tv", None, "sampled", status="empty", l=l, r=1)
            return
        top = max(max(direct), max(planted)) + 1
        p = np.bincount(direct, minlength=top) / len(direct)
        q = np.bincount(planted, minlength=top) / len(planted)
        cells.add("coupling_tv", float(0.5 * np.abs(p - q).sum()), "sampled", l=l, r=1)
        cells.add("coupling_draws", len(direct), "sampled", l=l, r=1)

    return _run_guarded(config, seed, body)


register_experiment(Experiment("pin", "Pinning decomposition: cut distances against theta", _run_pin))
register_experiment(Experiment("bethe", "Bethe-state deviations over all cavity sizes", _run_bethe))
register_experiment(Experiment("bp", "BP iteration and canonical-message residuals", _run_bp))
register_experiment(Experiment("cutm", "Cut distance, observables and overlaps against the product", _run_cutm))
register_experiment(Experiment("potts", "Potts neighbourhood suite over graph sizes", _run_potts))
register_experiment(Experiment("sweep", "Full per-state pipeline", _run_sweep))
register_experiment(Experiment("coupling", "Cavity coupling statistical check", _run_coupling,
                               requires_flag="enable_coupling_check"))


def _run_one(task: Tuple[str, ExperimentConfig, int]) -> SeedResult:
    name, config, seed = task
    return get_experiment(name).run_seed(config, seed)


def run_experiment(config: ExperimentConfig, seeds: Optional[Sequence[int]] = None) -> List[SeedResult]:
    """Run every seed, concurrently when num_workers > 1; results come back in seed order."""
    experiment = get_experiment(config.name)
    if experiment.requires_flag and not getattr(config, experiment.requires_flag):
        raise ValueError(f"Experiment {experiment.name} is disabled; set {experiment.requires_flag}")
    seeds = config.seed_list if seeds is None else list(seeds)
    logger.info(f"Running {experiment.name} ({experiment.description}) on {len(seeds)} seeds")
    tasks = [(experiment.name, config, seed) for seed in seeds]
    if config.num_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.num_workers) as pool:
            results = list(tqdm(pool.map(_run_one, tasks), total=len(tasks), desc=experiment.name))
    else:
        results = [_run_one(task) for task in tqdm(tasks, desc=experiment.name)]
    failed = sum(r.status != "ok" for r in results)
    if failed:
        logger.warning(f"{failed} of {len(results)} seeds did not complete")
    return results


def summarize(values: Sequence[float]) -> Dict:
    values = np.asarray(values, dtype=np.float64)
    if not len(values):
        return {"count": 0, "mean": None, "stderr": None, "median": None, "q1": None, "q3": None}
    stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    return {"count": int(len(values)), "mean": float(values.mean()), "stderr": stderr,
            "median": float(median), "q1": float(q1), "q3": float(q3)}


def _group_key(cell: Dict) -> Tuple:
    return tuple("" if cell[col] is None else cell[col] for col in ("quantity", "n", "theta", "l", "r"))


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def emit_report(results: Sequence[SeedResult], config: ExperimentConfig, output_dir: Optional[str] = None) -> Dict:
    """
    Write summary.json and cells.csv, plus messages.json, witnesses.json and overlaps.csv when
    the experiment produced them. Returns the written paths.
    """
    output_dir = output_dir or config.output_dir
    os.makedirs(output_dir, exist_ok=True)
    paths = {}

    cells = [cell for result in results for cell in result.cells]
    paths["cells"] = os.path.join(output_dir, "cells.csv")
    with open(paths["cells"], 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CELL_COLUMNS)
        for cell in cells:
            writer.writerow([_format(cell[col]) for col in CELL_COLUMNS])

    groups: Dict[Tuple, List[float]] = {}
    for cell in cells:
        if cell["status"] == "ok" and cell["value"] is not None:
            groups.setdefault(_group_key(cell), []).append(float(cell["value"]))
    status_counts: Dict[str, int] = {}
    for result in results:
        status_counts[result.status] = status_counts.get(result.status, 0) + 1
    summary = {
        "experiment": config.name,
        "config": config.report_dict(),
        "seeds": [result.seed for result in results],
        "status_counts": status_counts,
        "groups": [
            dict(zip(("quantity", "n", "theta", "l", "r"), key), **summarize(values))
            for key, values in sorted(groups.items(), key=lambda item: tuple(str(v) for v in item[0]))
        ],
    }
    covered = [result.extra["covered"] for result in results if "covered" in result.extra]
    if covered:
        summary["coverage_fraction"] = float(np.mean([c >= 1.0 - config.epsilon for c in covered]))
    passes = [result.extra["bethe_pass"] for result in results if "bethe_pass" in result.extra]
    if passes:
        summary["bethe_fraction"] = float(np.mean(passes))
    paths["summary"] = os.path.join(output_dir, "summary.json")
    with open(paths["summary"], 'w', encoding='utf-8') as f:
        json.dump(summary, f, sort_keys=True, indent=2)
        f.write("\n")

    messages = {str(result.seed): result.messages for result in results if result.messages is not None}
    if messages:
        paths["messages"] = os.path.join(output_dir, "messages.json")
        with open(paths["messages"], 'w', encoding='utf-8') as f:
            json.dump(messages, f, sort_keys=True)
            f.write("\n")

    witnesses = {str(result.seed): result.witness for result in results if result.witness is not None}
    if witnesses:
        paths["witnesses"] = os.path.join(output_dir, "witnesses.json")
        with open(paths["witnesses"], 'w', encoding='utf-8') as f:
            json.dump(witnesses, f, sort_keys=True)
            f.write("\n")

    overlaps = [row for result in results for row in result.overlaps]
    if overlaps:
        paths["overlaps"] = os.path.join(output_dir, "overlaps.csv")
        with open(paths["overlaps"], 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(OVERLAP_COLUMNS)
            for row in overlaps:
                writer.writerow([_format(row[col]) for col in OVERLAP_COLUMNS])
    logger.info(f"Wrote {len(cells)} cells for {len(results)} seeds to {output_dir}")
    return paths
