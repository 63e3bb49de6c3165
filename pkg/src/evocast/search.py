"""Architecture search: fixed-length genome encoding, NSGA-II over three
objectives (validation RMSE, parameter count, depth — all minimized), and a
deduplicating evaluation cache.

Depth stands in for interpretability: ranking by the inverse of depth
descending is the same ordering as ranking by depth ascending, so the
objective is implemented directly as minimize-depth.
"""

from __future__ import annotations

import hashlib
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .nn.model import (DROPOUT_CHOICES, UNIT_CHOICES, LayerSpec, ModelSpec,
                       count_params)
from .nn.training import TrainConfig, train

log = logging.getLogger(__name__)

GENOME_SLOTS = 4
SLOT_TYPES = ("none", "lstm", "gru", "cnn", "attn", "dense")
TEMPORAL_SLOT_TYPES = ("lstm", "gru", "cnn", "attn")
_KIND_FOR_SLOT = {"lstm": "lstm", "gru": "gru", "cnn": "conv", "attn": "attn", "dense": "dense"}

# Scaled-space RMSE lives well under 1; a failed training gets this so the
# individual stays comparable but always dominated.
FAILURE_RMSE = 10.0


@dataclass(frozen=True)
class Slot:
    layer_type: str
    units_code: int
    dropout_code: int

    def __post_init__(self):
        if self.layer_type not in SLOT_TYPES:
            raise ValueError(f"bad layer type {self.layer_type!r}")
        if not 0 <= self.units_code < len(UNIT_CHOICES):
            raise ValueError(f"units_code out of range: {self.units_code}")
        if not 0 <= self.dropout_code < len(DROPOUT_CHOICES):
            raise ValueError(f"dropout_code out of range: {self.dropout_code}")


@dataclass(frozen=True)
class Genome:
    slots: tuple[Slot, Slot, Slot, Slot]

    def __post_init__(self):
        if len(self.slots) != GENOME_SLOTS:
            raise ValueError(f"genome must have exactly {GENOME_SLOTS} slots")

    def key(self) -> str:
        """Canonical cache key (repair first if the genome may be raw)."""
        parts = []
        for s in self.slots:
            if s.layer_type == "none":
                parts.append("-")
            else:
                parts.append(f"{s.layer_type}{UNIT_CHOICES[s.units_code]}"
                             f"d{DROPOUT_CHOICES[s.dropout_code]:.1f}")
        return "|".join(parts)

    def depth(self) -> int:
        return sum(1 for s in self.slots if s.layer_type != "none")


@dataclass(frozen=True)
class Objectives:
    val_rmse: float
    param_count: int
    depth: int

    def vector(self) -> tuple[float, float, float]:
        return (self.val_rmse, float(self.param_count), float(self.depth))


@dataclass
class Individual:
    genome: Genome
    objectives: Objectives | None = None
    rank: int | None = None
    crowding: float = 0.0


def repair(genome: Genome) -> Genome:
    """Canonicalize: drop-tail NONE slots, temporal before dense (stable),
    dead slots zeroed, never empty. Idempotent."""
    active = [s for s in genome.slots if s.layer_type != "none"]
    temporal = [s for s in active if s.layer_type in TEMPORAL_SLOT_TYPES]
    dense = [s for s in active if s.layer_type == "dense"]
    ordered = temporal + dense
    if not ordered:
        ordered = [Slot("gru", 0, 0)]
    none_slot = Slot("none", 0, 0)
    slots = tuple(ordered + [none_slot] * (GENOME_SLOTS - len(ordered)))
    return Genome(slots)


def random_genome(rng) -> Genome:
    """Uniform sample: slot 1 never NONE, slots 2-4 may be."""
    slots = []
    for i in range(GENOME_SLOTS):
        choices = SLOT_TYPES[1:] if i == 0 else SLOT_TYPES
        slots.append(Slot(
            layer_type=choices[rng.integers(len(choices))],
            units_code=int(rng.integers(len(UNIT_CHOICES))),
            dropout_code=int(rng.integers(len(DROPOUT_CHOICES))),
        ))
    return repair(Genome(tuple(slots)))


def decode_genome(genome: Genome) -> ModelSpec:
    """Canonical genome -> buildable spec (linear head implied)."""
    layers = []
    for s in genome.slots:
        if s.layer_type == "none":
            continue
        layers.append(LayerSpec(
            kind=_KIND_FOR_SLOT[s.layer_type],
            units=UNIT_CHOICES[s.units_code],
            dropout=DROPOUT_CHOICES[s.dropout_code],
        ))
    return ModelSpec(tuple(layers))


# ---------------------------------------------------------------------------
# Evaluation


@dataclass
class SearchBudget:
    """Per-candidate training budget during the search.

    Candidates train on a subsample of the pooled source-train windows with
    a trimmed epoch budget; chosen front members should be retrained with
    the full protocol afterwards. The small batch keeps the update count
    useful on subsampled data.
    """

    subsample: float = 0.10
    max_epochs: int = 20
    patience: int = 5
    batch_size: int = 32


class EvalCache:
    """Canonical genome key -> objectives, one training per key.

    Thread-safe: concurrent evaluators of the same key serialize on a
    per-key event; the first computes, the rest wait.
    """

    def __init__(self):
        self._store: dict[str, Objectives] = {}
        self._pending: dict[str, threading.Event] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._store)

    def keys(self):
        return list(self._store)

    def get_or_compute(self, key: str, compute) -> Objectives:
        while True:
            with self._lock:
                if key in self._store:
                    self.hits += 1
                    return self._store[key]
                event = self._pending.get(key)
                if event is None:
                    self._pending[key] = threading.Event()
                    self.misses += 1
                    break
            event.wait()
        try:
            value = compute()
            with self._lock:
                self._store[key] = value
        finally:
            with self._lock:
                self._pending.pop(key).set()
        return value


def _genome_seed(base_seed: int, key: str) -> int:
    digest = hashlib.sha256(f"{base_seed}:{key}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


def evaluate_genome(genome: Genome, search_train, search_val,
                    config: TrainConfig, cache: EvalCache,
                    budget: SearchBudget | None = None) -> Objectives:
    """Objectives for one genome; trains once per canonical form.

    The training seed derives from (config.seed, canonical key), so results
    are independent of evaluation order and of cache state.
    """
    genome = repair(genome)
    key = genome.key()
    budget = budget or SearchBudget()

    def compute() -> Objectives:
        spec = decode_genome(genome)
        params = count_params(spec)
        depth = genome.depth()
        seed = _genome_seed(config.seed, key)
        sub_rng = np.random.default_rng(seed)
        train_part = search_train.subsample(budget.subsample, sub_rng)
        cand_config = replace(config, seed=seed, max_epochs=budget.max_epochs,
                              patience=budget.patience, batch_size=budget.batch_size)
        try:
            model = train(spec, train_part, search_val, cand_config)
            val_rmse = float(model.train_meta["best_val_rmse"])
        except Exception:
            log.exception("training failed for genome %s; recording sentinel", key)
            val_rmse = FAILURE_RMSE
        return Objectives(val_rmse=val_rmse, param_count=params, depth=depth)

    return cache.get_or_compute(key, compute)


# ---------------------------------------------------------------------------
# NSGA-II machinery


def dominates(a, b) -> bool:
    """a dominates b: no worse on every objective, better on at least one."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def fast_non_dominated_sort(objectives) -> list[list[int]]:
    """Deb's O(M N^2) sort; returns fronts as index lists (front 0 first)."""
    F = np.asarray(objectives, dtype=np.float64)
    n = F.shape[0]
    if not np.isfinite(F).all():
        raise ValueError("objectives must be finite")
    dominated_by = [[] for _ in range(n)]
    domination_count = np.zeros(n, dtype=np.int64)
    for i in range(n):
        # vectorized pairwise dominance of i over all others
        le = np.all(F[i] <= F, axis=1)
        lt = np.any(F[i] < F, axis=1)
        dom = le & lt
        dom[i] = False
        dominated_by[i] = np.flatnonzero(dom).tolist()
        domination_count += dom
    fronts = []
    current = np.flatnonzero(domination_count == 0).tolist()
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    nxt.append(j)
        current = nxt
    return fronts


def crowding_distance(objectives) -> np.ndarray:
    """Per-front density estimate; boundary points get +inf, zero-range
    objectives contribute nothing."""
    F = np.asarray(objectives, dtype=np.float64)
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        span = F[order[-1], j] - F[order[0], j]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if span > 0:
            gaps = (F[order[2:], j] - F[order[:-2], j]) / span
            dist[order[1:-1]] += gaps
    return dist


def assign_rank_and_crowding(population: list[Individual]):
    vectors = [ind.objectives.vector() for ind in population]
    fronts = fast_non_dominated_sort(vectors)
    for rank, front in enumerate(fronts):
        sub = [vectors[i] for i in front]
        dists = crowding_distance(sub)
        for i, d in zip(front, dists):
            population[i].rank = rank
            population[i].crowding = float(d)
    return fronts


def _crowded_better(a: Individual, b: Individual, rng) -> Individual:
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a if rng.random() < 0.5 else b


def make_offspring(parents: list[Individual], rng,
                   crossover_prob: float = 0.9,
                   mutation_prob: float = 0.15) -> list[Genome]:
    """Binary tournament, uniform per-slot crossover, per-field mutation."""
    if not parents or len(parents) % 2:
        raise ValueError("parent population must be nonempty and of even size")

    def pick() -> Genome:
        i, j = rng.integers(len(parents)), rng.integers(len(parents))
        return _crowded_better(parents[i], parents[j], rng).genome

    offspring = []
    for _ in range(len(parents) // 2):
        p1, p2 = pick(), pick()
        if rng.random() < crossover_prob:
            s1, s2 = [], []
            for a, b in zip(p1.slots, p2.slots):
                if rng.random() < 0.5:
                    s1.append(a)
                    s2.append(b)
                else:
                    s1.append(b)
                    s2.append(a)
            c1, c2 = Genome(tuple(s1)), Genome(tuple(s2))
        else:
            c1, c2 = p1, p2
        offspring.append(repair(_mutate(c1, rng, mutation_prob)))
        offspring.append(repair(_mutate(c2, rng, mutation_prob)))
    return offspring


def _mutate(genome: Genome, rng, prob: float) -> Genome:
    slots = []
    for slot in genome.slots:
        layer_type = slot.layer_type
        units_code = slot.units_code
        dropout_code = slot.dropout_code
        if rng.random() < prob:
            layer_type = SLOT_TYPES[rng.integers(len(SLOT_TYPES))]
        if rng.random() < prob:
            units_code = int(rng.integers(len(UNIT_CHOICES)))
        if rng.random() < prob:
            dropout_code = int(rng.integers(len(DROPOUT_CHOICES)))
        slots.append(Slot(layer_type, units_code, dropout_code))
    return Genome(tuple(slots))


def _environmental_selection(population: list[Individual], size: int) -> list[Individual]:
    assign_rank_and_crowding(population)
    chosen = []
    by_rank: dict[int, list[Individual]] = {}
    for ind in population:
        by_rank.setdefault(ind.rank, []).append(ind)
    for rank in sorted(by_rank):
        front = by_rank[rank]
        if len(chosen) + len(front) <= size:
            chosen.extend(front)
        else:
            # crowding descending; RMSE breaks ties so the elitist guarantee
            # (best RMSE survives) holds even for tiny populations
            front.sort(key=lambda ind: (-ind.crowding, ind.objectives.val_rmse))
            chosen.extend(front[:size - len(chosen)])
            break
    return chosen


def evolve(search_train, search_val, config: TrainConfig,
           population_size: int = 20, generations: int = 10,
           budget: SearchBudget | None = None, workers: int = 1,
           progress=None):
    """Generational NSGA-II. Returns (population, cache, history).

    Unique trainings are bounded by population_size * (generations + 1);
    identical canonical genomes share one training via the cache.
    History holds one snapshot per generation: (genome key, objectives,
    rank) triples.
    """
    if population_size < 2 or population_size % 2:
        raise ValueError("population_size must be even and >= 2")
    rng = np.random.default_rng([config.seed, 0xA11E1E])
    cache = EvalCache()
    budget = budget or SearchBudget()

    def evaluate_all(genomes: list[Genome]) -> list[Individual]:
        def one(g: Genome) -> Individual:
            obj = evaluate_genome(g, search_train, search_val, config, cache, budget)
            return Individual(genome=repair(g), objectives=obj)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(one, genomes))
        return [one(g) for g in genomes]

    population = evaluate_all([random_genome(rng) for _ in range(population_size)])
    assign_rank_and_crowding(population)
    history = [_snapshot(0, population)]
    if progress:
        progress(0, population, cache)
    for gen in range(1, generations + 1):
        children = make_offspring(population, rng)
        offspring = evaluate_all(children)
        population = _environmental_selection(population + offspring, population_size)
        history.append(_snapshot(gen, population))
        if progress:
            progress(gen, population, cache)
    return population, cache, history


def _snapshot(generation: int, population: list[Individual]) -> dict:
    return {
        "generation": generation,
        "population": [
            {
                "genome": ind.genome.key(),
                "val_rmse": ind.objectives.val_rmse,
                "param_count": ind.objectives.param_count,
                "depth": ind.objectives.depth,
                "rank": ind.rank,
            }
            for ind in population
        ],
    }


def pareto_front(population: list[Individual]) -> list[Individual]:
    """Rank-0 subset, sorted by val RMSE for reporting."""
    vectors = [ind.objectives.vector() for ind in population]
    fronts = fast_non_dominated_sort(vectors)
    front = [population[i] for i in fronts[0]] if fronts else []
    return sorted(front, key=lambda ind: ind.objectives.val_rmse)
