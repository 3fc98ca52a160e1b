"""Experiment orchestration: evolution runs, incremental search, generalization."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import snes
from .arm import HELD_OUT_ANGLES, ArmConfig, evaluate, training_trials
from .encoding import (
    Genome,
    NetworkWeights,
    architecture,
    build_scheme,
    decode,
    even_lengths,
    grow_lengths,
    grow_vector,
    resize,
    resize_weights,
)

log = logging.getLogger(__name__)

DIRECT = "direct"
PAIRED_SCHEME = {"theta1": "psi1", "theta2": "psi3"}


@dataclass(frozen=True)
class IncrementalConfig:
    start: int = 10
    step: int = 10
    stagnation: int = 6
    stage_budget: int = 6000
    min_improvement: float = 1e-4
    max_stages: Optional[int] = None


@dataclass(frozen=True)
class ExperimentConfig:
    arch: str = "theta1"
    scheme: str = "psi1"
    coeffs: int = 20
    p: int = 10
    eval_budget: int = 6000
    runs: int = 1
    seed: int = 0
    sigma0: float = 1.0
    workers: int = 1
    log_base: str = "e"
    # scheme used to move direct networks into the frequency domain
    direct_scheme: Optional[str] = None
    physics: ArmConfig = field(default_factory=ArmConfig)
    incremental: IncrementalConfig = field(default_factory=IncrementalConfig)

    def __post_init__(self):
        architecture(self.arch, self.p)
        if self.scheme != DIRECT:
            build_scheme(self.scheme, self.arch, self.p)
            if self.coeffs < 1:
                raise ValueError("coeffs must be >= 1 for an indirect encoding")
        if self.eval_budget < 1 or self.runs < 1 or self.workers < 1:
            raise ValueError("budget, runs and workers must be positive")
        if self.log_base not in snes.LOGS:
            raise ValueError(f"log_base must be one of {sorted(snes.LOGS)}")

    @property
    def mode(self) -> str:
        return architecture(self.arch, self.p).action_mode

    @property
    def frequency_scheme(self) -> str:
        if self.scheme != DIRECT:
            return self.scheme
        return self.direct_scheme or PAIRED_SCHEME[self.arch]

    def run_seed(self, run_index: int) -> int:
        return self.seed + run_index

    def to_dict(self) -> dict:
        d = asdict(self)
        d["physics"] = self.physics.to_dict()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "physics" in data and not isinstance(data["physics"], ArmConfig):
            data["physics"] = ArmConfig.from_dict(data["physics"])
        if "incremental" in data and not isinstance(data["incremental"], IncrementalConfig):
            data["incremental"] = IncrementalConfig(**data["incremental"])
        return cls(**data)


class Problem:
    """Maps search vectors to networks and fitness values for one config."""

    def __init__(self, config: ExperimentConfig, evaluator: Optional[Callable] = None):
        self.config = config
        self.arch = architecture(config.arch, config.p)
        self.scheme = None if config.scheme == DIRECT else build_scheme(config.scheme, config.arch, config.p)
        self.trials = training_trials(config.p, config.physics)
        self.lengths = None if self.scheme is None else even_lengths(config.coeffs, self.scheme.capacities)
        self._evaluator = evaluator

    @property
    def dim(self) -> int:
        return self.arch.weight_count if self.scheme is None else sum(self.lengths)

    def weights(self, vector) -> NetworkWeights:
        if self.scheme is None:
            return NetworkWeights.from_flat(vector, self.arch)
        return decode(Genome(vector, self.lengths), self.scheme)

    def fitness(self, vector) -> float:
        w = self.weights(vector)
        if self._evaluator is not None:
            return float(self._evaluator(w))
        return safe_evaluate(w, self.config.mode, self.config.p, self.trials, self.config.physics)


def safe_evaluate(weights, mode, p, trials, physics, closest=False) -> float:
    """Like :func:`arm.evaluate` but a diverging trial scores 0."""
    scores = []
    for tr in trials:
        try:
            scores.append(evaluate(weights, mode, p, [tr], physics, closest))
        except FloatingPointError:
            log.warning("simulation diverged; trial scored 0")
            scores.append(0.0)
    return float(np.mean(scores))


_WORKER_PROBLEM: Optional[Problem] = None


def _init_worker(config_dict, lengths):
    global _WORKER_PROBLEM
    _WORKER_PROBLEM = Problem(ExperimentConfig.from_dict(config_dict))
    _WORKER_PROBLEM.lengths = lengths


def _worker_fitness(vector):
    return _WORKER_PROBLEM.fitness(vector)


class _Evaluator:
    """Evaluates a population serially or on a process pool (order kept)."""

    def __init__(self, problem: Problem, workers: int):
        self.problem = problem
        self.workers = workers
        self._pool = None
        self._pool_lengths = None

    def __call__(self, population) -> np.ndarray:
        if self.workers <= 1 or self.problem._evaluator is not None:
            return np.array([self.problem.fitness(x) for x in population])
        if self._pool is None or self._pool_lengths != self.problem.lengths:
            self.close()
            self._pool = ProcessPoolExecutor(
                self.workers, initializer=_init_worker,
                initargs=(self.problem.config.to_dict(), self.problem.lengths),
            )
            self._pool_lengths = self.problem.lengths
        chunk = max(1, len(population) // (4 * self.workers))
        return np.array(list(self._pool.map(_worker_fitness, list(population), chunksize=chunk)))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None


def weights_checksum(weights: NetworkWeights) -> str:
    return hashlib.sha256(np.ascontiguousarray(weights.flat(), dtype="<f8").tobytes()).hexdigest()


@dataclass
class RunRecord:
    config: dict
    run_index: int
    seed: int
    generations: list = field(default_factory=list)
    evaluations: int = 0
    best_fitness: float = -math.inf
    best_vector: list = field(default_factory=list)
    chromosome_lengths: Optional[list] = None
    weights_sha256: str = ""
    stages: list = field(default_factory=list)
    best_coefficients: Optional[int] = None
    wall_time: float = 0.0

    # -- persistence: one JSON object per line ---------------------------
    def header_line(self) -> str:
        return json.dumps({"type": "config", "run_index": self.run_index, "seed": self.seed,
                           "config": self.config}, sort_keys=True)

    @staticmethod
    def generation_line(gen: dict) -> str:
        return json.dumps({"type": "generation", **gen}, sort_keys=True)

    def result_line(self, include_timing: bool = True) -> str:
        out = {
            "type": "result", "evaluations": self.evaluations, "best_fitness": self.best_fitness,
            "best_vector": self.best_vector, "chromosome_lengths": self.chromosome_lengths,
            "weights_sha256": self.weights_sha256, "stages": self.stages,
            "best_coefficients": self.best_coefficients,
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return json.dumps(out, sort_keys=True)

    def to_lines(self, include_timing: bool = True) -> list[str]:
        return ([self.header_line()] + [self.generation_line(g) for g in self.generations]
                + [self.result_line(include_timing)])

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.to_lines()) + "\n")

    @classmethod
    def load(cls, path) -> "RunRecord":
        lines = [json.loads(ln) for ln in Path(path).read_text().splitlines() if ln.strip()]
        head = lines[0]
        rec = cls(head["config"], head["run_index"], head["seed"])
        rec.generations = [{k: v for k, v in ln.items() if k != "type"}
                           for ln in lines if ln["type"] == "generation"]
        result = [ln for ln in lines if ln["type"] == "result"]
        if not result:
            raise ValueError(f"{path}: run record has no result (incomplete run)")
        r = result[-1]
        for key in ("evaluations", "best_fitness", "best_vector", "chromosome_lengths",
                     "weights_sha256", "stages", "best_coefficients"):
            setattr(rec, key, r[key])
        rec.wall_time = r.get("wall_time", 0.0)
        return rec

    # -- helpers -----------------------------------------------------------
    @property
    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig.from_dict(self.config)

    def best_weights(self) -> NetworkWeights:
        cfg = self.experiment
        if cfg.scheme == DIRECT:
            return NetworkWeights.from_flat(self.best_vector, architecture(cfg.arch, cfg.p))
        return decode(self.best_genome(), build_scheme(cfg.scheme, cfg.arch, cfg.p))

    def best_genome(self) -> Genome:
        if self.chromosome_lengths is None:
            raise ValueError("direct-encoding runs have no genome")
        return Genome(self.best_vector, self.chromosome_lengths)

    def best_curve(self) -> tuple[np.ndarray, np.ndarray]:
        ev = np.array([g["evaluations"] for g in self.generations])
        best = np.array([g["best"] for g in self.generations])
        return ev, best


class _Stream:
    """Writes generation lines as they happen so failed runs leave a trace."""

    def __init__(self, path, record: RunRecord):
        self.fh = None if path is None else open(path, "w")
        if self.fh:
            self.fh.write(record.header_line() + "\n")
            self.fh.flush()

    def generation(self, gen: dict):
        if self.fh:
            self.fh.write(RunRecord.generation_line(gen) + "\n")
            self.fh.flush()

    def close(self, record: Optional[RunRecord], error: Optional[BaseException] = None):
        if not self.fh:
            return
        if error is not None:
            self.fh.write(json.dumps({"type": "error", "message": repr(error)}) + "\n")
        elif record is not None:
            self.fh.write(record.result_line() + "\n")
        self.fh.close()


def _generation_loop(problem, dist, evaluator, budget, record, stream, best, generation):
    """Run whole generations until ``budget`` more evaluations are spent."""
    used = 0
    while used < budget:
        population, z = snes.ask(dist)
        fit = evaluator(population)
        used += len(fit)
        record.evaluations += len(fit)
        j = int(np.argmax(fit))
        if fit[j] > best[0]:
            best[0], best[1] = float(fit[j]), population[j].copy()
        gen = {"generation": generation, "evaluations": record.evaluations, "best": best[0],
               "generation_best": float(fit[j]), "coefficients": problem.dim}
        record.generations.append(gen)
        stream.generation(gen)
        generation += 1
        dist = snes.tell(dist, z, fit)
    return dist, generation


def _finish(record: RunRecord, problem: Problem, best, t0):
    record.best_fitness = best[0]
    record.best_vector = [float(v) for v in best[1]]
    record.chromosome_lengths = None if problem.lengths is None else list(problem.lengths)
    record.weights_sha256 = weights_checksum(problem.weights(best[1]))
    record.wall_time = time.perf_counter() - t0


def run_evolution(config: ExperimentConfig, run_index: int = 0, out=None,
                  evaluator: Optional[Callable] = None) -> RunRecord:
    """One SNES run with a fixed encoding until the evaluation budget is spent."""
    t0 = time.perf_counter()
    problem = Problem(config, evaluator)
    seed = config.run_seed(run_index)
    logfn = snes.LOGS[config.log_base]
    dist = snes.make_distribution(np.zeros(problem.dim), config.sigma0, seed, log=logfn)
    record = RunRecord(config.to_dict(), run_index, seed)
    stream = _Stream(out, record)
    pool = _Evaluator(problem, config.workers)
    best = [-math.inf, dist.mu.copy()]
    try:
        _generation_loop(problem, dist, pool, config.eval_budget, record, stream, best, 0)
        _finish(record, problem, best, t0)
    except BaseException as exc:
        stream.close(None, exc)
        raise
    finally:
        pool.close()
    stream.close(record)
    return record


def run_incremental(config: ExperimentConfig, run_index: int = 0, out=None,
                    evaluator: Optional[Callable] = None) -> RunRecord:
    """Grow the genome by ``step`` coefficients after every stage.

    Stops once ``stagnation`` consecutive additions fail to raise the
    best-so-far fitness by ``min_improvement``, when every chromosome is
    full, or after ``max_stages`` stages.
    """
    if config.scheme == DIRECT:
        raise ValueError("incremental search needs an indirect encoding")
    inc = config.incremental
    t0 = time.perf_counter()
    problem = Problem(replace(config, coeffs=inc.start), evaluator)
    caps = problem.scheme.capacities
    seed = config.run_seed(run_index)
    logfn = snes.LOGS[config.log_base]
    dist = snes.make_distribution(np.zeros(problem.dim), config.sigma0, seed, log=logfn)
    record = RunRecord(config.to_dict(), run_index, seed)
    stream = _Stream(out, record)
    pool = _Evaluator(problem, config.workers)
    best = [-math.inf, dist.mu.copy()]
    best_lengths = problem.lengths
    stagnant, generation, stage = 0, 0, 0
    try:
        while True:
            before = best[0]
            dist, generation = _generation_loop(problem, dist, pool, inc.stage_budget, record,
                                                stream, best, generation)
            improved = best[0] - before >= inc.min_improvement
            if improved:
                best_lengths = problem.lengths
            if stage > 0:
                stagnant = 0 if improved else stagnant + 1
            record.stages.append({"stage": stage, "coefficients": problem.dim, "best": best[0],
                                  "evaluations": record.evaluations, "stagnant": stagnant})
            stage += 1
            room = sum(caps) - problem.dim
            if stagnant >= inc.stagnation or room == 0 or (inc.max_stages and stage >= inc.max_stages):
                break
            old = problem.lengths
            new = grow_lengths(old, caps, min(inc.step, room))
            # best vector is stored at the length it was found with
            best_vec_lengths = old if len(best[1]) == sum(old) else None
            mu = grow_vector(dist.mu, old, new, 0.0)
            sigma = grow_vector(dist.sigma, old, new, config.sigma0)
            if best_vec_lengths is not None:
                best[1] = grow_vector(best[1], old, new, 0.0)
            problem.lengths = new
            dist = snes.resized(dist, mu, sigma, logfn)
        _finish(record, problem, best, t0)
        record.best_coefficients = sum(best_lengths)
    except BaseException as exc:
        stream.close(None, exc)
        raise
    finally:
        pool.close()
    stream.close(record)
    return record


# generalization -----------------------------------------------------------


def summarize(scores) -> dict:
    s = np.asarray(scores, dtype=float)
    q1, med, q3 = np.percentile(s, [25, 50, 75])
    return {"n": int(s.size), "median": float(med), "q1": float(q1), "q3": float(q3),
            "min": float(s.min()), "max": float(s.max())}


def _label(cfg: ExperimentConfig) -> str:
    return DIRECT if cfg.scheme == DIRECT else f"{cfg.scheme} C={cfg.coeffs}"


def test_generalization_positions(records, config: Optional[ExperimentConfig] = None,
                                  angles=HELD_OUT_ANGLES) -> dict:
    """Re-score each run's best network from held-out starting angles.

    Returns ``{"rows": [...], "summary": {label: stats}}``; a run's score
    is the mean over ``angles``.
    """
    rows, groups = [], {}
    for rec in records:
        cfg = config or rec.experiment
        trials = training_trials(cfg.p, cfg.physics, angles)
        score = safe_evaluate(rec.best_weights(), cfg.mode, cfg.p, trials, cfg.physics)
        label = _label(rec.experiment)
        rows.append({"label": label, "run": rec.run_index, "score": score})
        groups.setdefault(label, []).append(score)
    return {"rows": rows, "summary": {k: summarize(v) for k, v in groups.items()}}


test_generalization_positions.__test__ = False  # not a pytest test


def resized_network(rec: RunRecord, new_p: int) -> tuple[NetworkWeights, ExperimentConfig]:
    """A run's best network re-generated for an arm of ``new_p`` compartments."""
    cfg = rec.experiment
    scheme = build_scheme(cfg.frequency_scheme, cfg.arch, cfg.p)
    if cfg.scheme == DIRECT:
        weights = resize_weights(rec.best_weights(), scheme, new_p)
    else:
        weights = resize(rec.best_genome(), scheme, new_p)
    return weights, replace(cfg, p=new_p)


def length_scores(rec: RunRecord, p_values) -> dict:
    out = {}
    for p in p_values:
        weights, cfg = resized_network(rec, p)
        trials = training_trials(p, cfg.physics)
        out[p] = safe_evaluate(weights, cfg.mode, p, trials, cfg.physics, closest=True)
    return out


def test_generalization_lengths(indirect_records, direct_records, p_values=range(3, 21)) -> dict:
    """Median score difference (indirect - direct) for every (C, p) cell.

    Trial horizons follow the physics config (linear in p); scoring uses
    the closest approach of the tip.
    """
    p_values = list(p_values)
    direct = [length_scores(r, p_values) for r in direct_records]
    rows, by_c = [], {}
    for rec in indirect_records:
        c = rec.experiment.coeffs
        scores = length_scores(rec, p_values)
        by_c.setdefault(c, []).append(scores)
        rows += [{"label": _label(rec.experiment), "run": rec.run_index, "p": p, "score": s}
                 for p, s in scores.items()]
    rows += [{"label": DIRECT, "run": r.run_index, "p": p, "score": s}
             for r, scores in zip(direct_records, direct) for p, s in scores.items()]
    surface = {}
    for c, runs in sorted(by_c.items()):
        for p in p_values:
            ind = float(np.median([r[p] for r in runs]))
            dirm = float(np.median([r[p] for r in direct])) if direct else 0.0
            surface[(c, p)] = ind - dirm
    return {"rows": rows, "surface": surface}


test_generalization_lengths.__test__ = False
