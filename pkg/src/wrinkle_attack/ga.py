"""Seeded genetic search over the gene box against a prediction oracle.

Every generation renders and scores the whole population (one oracle query
per candidate), keeps the top elites, breeds the rest by tournament
selection, uniform crossover, and reflected Gaussian mutation, and appends
fresh uniform immigrants. A stalled incumbent triggers reinitialization of
all non-elite members. The search stops when the query budget is spent.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .fitness import (FitnessConfig, adversarial_score, hierarchical_fitness,
                      normalize_adv, success_indicator)
from .genes import (GeneBox, ScaleMask, WrinkleGene, child_seed, gene_to_vector,
                    sample_gene, vector_to_gene)
from .image_io import Image
from .oracle import BudgetExhausted, Oracle, OracleError, QueryLedger, predict
from .perceptual import PerceptualConfig, perceptual_similarity
from .rng import Xoshiro256
from .warp import render_perturbation

# Substream indices of the master seed.
_INIT_STREAM = 1
_LOOP_STREAM = 2


class GAConfigError(Exception):
    pass


@dataclass(frozen=True)
class GAConfig:
    population: int = 8
    budget: int = 350
    elite: int = 1
    mutation_rate: float = 0.2
    immigrants: int = 1
    stagnation: int = 5
    tournament: int = 3
    seed: int = 0
    workers: int = 1
    improvement_tol: float = 1e-9

    def __post_init__(self):
        if self.population < 2:
            raise GAConfigError("population must be >= 2")
        if not 1 <= self.elite < self.population:
            raise GAConfigError("elite must satisfy 1 <= elite < population")
        if self.immigrants < 0:
            raise GAConfigError("immigrants must be >= 0")
        if self.elite + self.immigrants > self.population:
            raise GAConfigError("elite + immigrants must not exceed population")
        if self.budget < self.population:
            raise GAConfigError("budget must cover at least one full generation")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise GAConfigError("mutation rate must lie in [0, 1]")
        if self.stagnation < 1 or self.tournament < 1 or self.workers < 1:
            raise GAConfigError("stagnation, tournament, and workers must be >= 1")


@dataclass(frozen=True)
class EvaluatedCandidate:
    gene: WrinkleGene
    fitness: float
    s_ladv: float
    s_perc: float
    success: bool
    index: int  # stable position within its generation

    def rank_key(self) -> tuple:
        """Higher fitness first, then higher s_perc, then earlier position."""
        return (self.fitness, self.s_perc, -self.index)


@dataclass
class AttackResult:
    success: bool
    queries: int
    best_gene: WrinkleGene | None
    best_fitness: float
    s_ladv: float
    s_perc: float
    trace: list[float] = field(default_factory=list)
    restarts: int = 0
    aborted: bool = False
    error: str | None = None
    best_image: Image | None = None

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "queries": self.queries,
            "best_gene": self.best_gene.to_dict() if self.best_gene else None,
            "best_fitness": self.best_fitness,
            "s_ladv": self.s_ladv,
            "s_perc": self.s_perc,
            "trace": self.trace,
            "restarts": self.restarts,
            "aborted": self.aborted,
            "error": self.error,
        }


def init_population(cfg: GAConfig, box: GeneBox, mask: ScaleMask) -> list[WrinkleGene]:
    """Uniform draws inside the box; each gene gets a distinct derived seed."""
    rng = Xoshiro256(cfg.seed, stream=_INIT_STREAM)
    return [sample_gene(box, rng, cfg.seed, i, mask) for i in range(cfg.population)]


def evaluate(pop: list[WrinkleGene], x: Image, label: int, oracle: Oracle,
             ledger: QueryLedger, fit_cfg: FitnessConfig, perc_cfg: PerceptualConfig,
             workers: int = 1) -> list[EvaluatedCandidate]:
    """Render and score candidates in stable order, one query each.

    If the budget boundary falls inside the population, only the leading
    candidates that still fit are evaluated and the partial list is
    returned.
    """
    granted = ledger.grant(len(pop))
    if granted == 0:
        raise BudgetExhausted("budget exhausted before any evaluation")
    active = pop[:granted]

    def eval_one(item: tuple[int, WrinkleGene]) -> EvaluatedCandidate:
        idx, gene = item
        rendered = render_perturbation(x, gene)
        probs = predict(oracle, rendered, ledger)
        s_perc = perceptual_similarity(x, rendered, perc_cfg)
        s_ladv = normalize_adv(adversarial_score(probs, label, fit_cfg), fit_cfg)
        success = success_indicator(probs, label)
        fitness = hierarchical_fitness(s_ladv, s_perc, success, fit_cfg)
        return EvaluatedCandidate(gene, fitness, s_ladv, s_perc, success, idx)

    items = list(enumerate(active))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(eval_one, items))
    return [eval_one(it) for it in items]


def select(evaluated: list[EvaluatedCandidate], cfg: GAConfig,
           rng: Xoshiro256) -> list[EvaluatedCandidate]:
    """Tournament selection with replacement into a breeding pool.

    Within a tournament, ties on (fitness, s_perc) go to the entrant drawn
    first, so a fully tied population is sampled uniformly.
    """
    if not evaluated:
        raise GAConfigError("cannot select from an empty population")
    pool_size = cfg.population - cfg.elite - cfg.immigrants
    pool = []
    for _ in range(pool_size):
        entrants = [evaluated[rng.choice_index(len(evaluated))]
                    for _ in range(cfg.tournament)]
        pool.append(max(entrants, key=lambda c: (c.fitness, c.s_perc)))
    return pool


def crossover(parents: list[EvaluatedCandidate], cfg: GAConfig,
              rng: Xoshiro256) -> list[WrinkleGene]:
    """Uniform crossover over sequential pairs; one offspring per parent.

    Offspring center seeds deterministically mix both parent seeds;
    identical parents therefore reproduce themselves exactly.
    """
    if len(parents) < 2:
        raise GAConfigError("crossover needs at least two parents")
    children = []
    n = len(parents)
    for i in range(0, n, 2):
        pa = parents[i].gene
        pb = parents[(i + 1) % n].gene
        va, vb = gene_to_vector(pa), gene_to_vector(pb)
        seed = child_seed(pa.center_seed, pb.center_seed)
        for _ in range(min(2, n - len(children))):
            vec = [a if rng.uniform() < 0.5 else b for a, b in zip(va, vb)]
            children.append(vector_to_gene(vec, seed, pa.mask))
    return children[:n]


def _reflect(value: float, lo: float, hi: float) -> float:
    """Fold a value back into [lo, hi] by mirroring at the bounds."""
    width = hi - lo
    if width == 0:
        return lo
    t = (value - lo) % (2.0 * width)
    return lo + (width - abs(t - width))


def mutate(genes: list[WrinkleGene], cfg: GAConfig, box: GeneBox,
           rng: Xoshiro256) -> list[WrinkleGene]:
    """Coordinate-wise mutation: Gaussian-with-reflection for continuous
    coordinates (sigma = 10% of box width), uniform re-draw for integers,
    seed re-draw at the same rate."""
    out = []
    for gene in genes:
        vec = gene_to_vector(gene)
        for k, coord in enumerate(box.coords):
            if rng.uniform() >= cfg.mutation_rate:
                continue
            if coord.integer:
                vec[k] = float(rng.randint(int(coord.lo), int(coord.hi)))
            else:
                noise = rng.normal(0.1 * (coord.hi - coord.lo))
                vec[k] = _reflect(vec[k] + noise, coord.lo, coord.hi)
        seed = gene.center_seed
        if rng.uniform() < cfg.mutation_rate:
            seed = rng.next_u64()
        out.append(vector_to_gene(vec, seed, gene.mask))
    return out


def run_attack(x: Image, label: int, oracle: Oracle, cfg: GAConfig,
               fit_cfg: FitnessConfig, perc_cfg: PerceptualConfig,
               box: GeneBox, mask: ScaleMask = ScaleMask()) -> AttackResult:
    """Full budgeted genetic search; returns the best candidate ever seen."""
    ledger = QueryLedger(cfg.budget)
    rng = Xoshiro256(cfg.seed, stream=_LOOP_STREAM)
    seed_counter = cfg.population  # init_population used indices 0..N-1
    pop = init_population(cfg, box, mask)
    best: EvaluatedCandidate | None = None
    trace: list[float] = []
    stagnant = 0
    restarts = 0
    aborted = False
    error: str | None = None

    while ledger.grant(1) > 0:
        try:
            evaluated = evaluate(pop, x, label, oracle, ledger, fit_cfg, perc_cfg,
                                 workers=cfg.workers)
        except BudgetExhausted:
            break
        except OracleError as exc:
            aborted = True
            error = str(exc)
            break
        gen_best = max(evaluated, key=EvaluatedCandidate.rank_key)
        improved = best is None or gen_best.fitness > best.fitness + cfg.improvement_tol
        if best is None or gen_best.fitness > best.fitness:
            best = gen_best
        trace.append(best.fitness)
        if len(evaluated) < len(pop) or (ledger.remaining or 0) <= 0:
            break

        elites = sorted(evaluated, key=EvaluatedCandidate.rank_key, reverse=True)[:cfg.elite]
        stagnant = 0 if improved else stagnant + 1
        if stagnant >= cfg.stagnation:
            fresh = [sample_gene(box, rng, cfg.seed, seed_counter + i, mask)
                     for i in range(cfg.population - cfg.elite)]
            seed_counter += cfg.population - cfg.elite
            pop = [e.gene for e in elites] + fresh
            stagnant = 0
            restarts += 1
            continue
        parents = select(evaluated, cfg, rng)
        if len(parents) >= 2:
            children = mutate(crossover(parents, cfg, rng), cfg, box, rng)
        elif parents:  # breeding pool of one: no crossover partner
            children = mutate([p.gene for p in parents], cfg, box, rng)
        else:  # elites + immigrants fill the population
            children = []
        immigrants = [sample_gene(box, rng, cfg.seed, seed_counter + i, mask)
                      for i in range(cfg.immigrants)]
        seed_counter += cfg.immigrants
        pop = [e.gene for e in elites] + children + immigrants

    if best is None:
        return AttackResult(success=False, queries=ledger.count, best_gene=None,
                            best_fitness=0.0, s_ladv=0.0, s_perc=0.0, trace=trace,
                            restarts=restarts, aborted=aborted, error=error)
    return AttackResult(
        success=best.success,
        queries=ledger.count,
        best_gene=best.gene,
        best_fitness=best.fitness,
        s_ladv=best.s_ladv,
        s_perc=best.s_perc,
        trace=trace,
        restarts=restarts,
        aborted=aborted,
        error=error,
        best_image=render_perturbation(x, best.gene),
    )


def random_probe(x: Image, label: int, oracle: Oracle, seed: int,
                 fit_cfg: FitnessConfig, perc_cfg: PerceptualConfig,
                 box: GeneBox, mask: ScaleMask = ScaleMask()) -> AttackResult:
    """Unoptimized baseline: a single uniform gene draw and one query."""
    rng = Xoshiro256(seed, stream=_INIT_STREAM)
    gene = sample_gene(box, rng, seed, 0, mask)
    ledger = QueryLedger(1)
    try:
        (cand,) = evaluate([gene], x, label, oracle, ledger, fit_cfg, perc_cfg)
    except OracleError as exc:
        return AttackResult(success=False, queries=ledger.count, best_gene=None,
                            best_fitness=0.0, s_ladv=0.0, s_perc=0.0,
                            aborted=True, error=str(exc))
    return AttackResult(
        success=cand.success, queries=ledger.count, best_gene=gene,
        best_fitness=cand.fitness, s_ladv=cand.s_ladv, s_perc=cand.s_perc,
        trace=[cand.fitness], best_image=render_perturbation(x, gene),
    )
