"""Dimensionality reduction and genetic feature-subset search.

Two optimizers act on extracted feature tables:

* CovariancePca: eigendecomposition of the feature covariance matrix
  (no variable standardization) keeping the fewest leading components
  whose eigenvalues reach the requested fraction of total variance.

* ga_select / GeneticFeatureSelector: a generational genetic algorithm
  over raw-feature bit masks.  Fitness of a mask is the classification
  success of a Gaussian naive Bayes model trained on the PCA-reduced
  masked features, so the selector optimizes exactly the quantity the
  surrounding experiment reports.  Chromosomes index raw features, not
  principal components; selected-feature counts therefore stay
  comparable across runs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .bayes import GaussianNaiveBayes
from .errors import DataError, EstimationError
from .validation import as_feature_matrix, check_consistent_length


class CovariancePca(BaseEstimator, TransformerMixin):
    """PCA on the covariance matrix with variance-retention selection.

    Keeps the smallest number of components whose cumulative eigenvalue
    fraction reaches ``threshold``.  When there are more features than
    samples the decomposition runs on the Gram matrix instead, which
    yields the same nonzero spectrum at a fraction of the cost.

    Attributes set by fit:
        mean_               training feature means
        components_         (k, d) orthonormal rows, eigenvalue-descending
        eigenvalues_        retained eigenvalues (sample covariance, ddof=1)
        retained_variance_  fraction of total variance kept
        n_components_       k
    """

    def __init__(self, threshold: float = 0.95):
        self.threshold = threshold

    def fit(self, X, y=None) -> "CovariancePca":
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        X = as_feature_matrix(X)
        n, d = X.shape
        if n < 2:
            raise DataError(f"PCA needs at least 2 training rows, got {n}")

        mean = X.mean(axis=0)
        centered = X - mean
        total_variance = float(np.sum(centered * centered)) / (n - 1)
        if total_variance <= 0.0:
            raise EstimationError("training data has zero variance in every feature")

        if d <= n:
            cov = (centered.T @ centered) / (n - 1)
            eigenvalues, vectors = np.linalg.eigh(cov)
            order = np.argsort(eigenvalues)[::-1]
            eigenvalues = np.maximum(eigenvalues[order], 0.0)
            components = vectors[:, order].T
        else:
            gram = (centered @ centered.T) / (n - 1)
            eigenvalues, vectors = np.linalg.eigh(gram)
            order = np.argsort(eigenvalues)[::-1]
            eigenvalues = np.maximum(eigenvalues[order], 0.0)
            positive = eigenvalues > total_variance * 1e-12
            eigenvalues = eigenvalues[positive]
            u = vectors[:, order][:, positive]
            components = (centered.T @ u).T / np.sqrt(eigenvalues * (n - 1))[:, None]

        cumulative = np.cumsum(eigenvalues) / total_variance
        reached = np.nonzero(cumulative >= self.threshold)[0]
        k = int(reached[0]) + 1 if reached.size else len(eigenvalues)

        components = components[:k]
        # Deterministic sign: the largest-magnitude entry of each row is positive.
        anchor = np.argmax(np.abs(components), axis=1)
        signs = np.sign(components[np.arange(k), anchor])
        signs[signs == 0] = 1.0
        components *= signs[:, None]

        self.mean_ = mean
        self.components_ = components
        self.eigenvalues_ = eigenvalues[:k]
        self.retained_variance_ = float(cumulative[k - 1])
        self.n_components_ = k
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "components_"):
            raise NotFittedError("this CovariancePca instance is not fitted yet")
        X = as_feature_matrix(X)
        if X.shape[1] != self.mean_.shape[0]:
            raise ValueError(
                f"model expects {self.mean_.shape[0]} features, got {X.shape[1]}"
            )
        return (X - self.mean_) @ self.components_.T


@dataclass(frozen=True)
class GaConfig:
    """Genetic-algorithm hyperparameters.

    The search stops once the population-mean fitness, smoothed over 3
    generations, changes by less than ``plateau_tol`` (absolute), or
    after ``max_generations``.
    """

    population_size: int = 50
    mutation_rate: float = 0.01
    elitism: int = 2
    plateau_tol: float = 1e-5
    max_generations: int = 200
    tournament_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be even and >= 2")
        if not 0.0 < self.mutation_rate < 1.0:
            raise ValueError("mutation_rate must be in (0, 1)")
        if not 0 <= self.elitism < self.population_size:
            raise ValueError("elitism must be in [0, population_size)")
        if self.plateau_tol <= 0.0:
            raise ValueError("plateau_tol must be positive")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")


@dataclass
class Chromosome:
    """A feature-subset candidate: bit mask plus its evaluated fitness."""

    mask: np.ndarray
    fitness: float | None = None

    def copy(self) -> "Chromosome":
        return Chromosome(mask=self.mask.copy(), fitness=self.fitness)


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    std_fitness: float
    best_ever_fitness: float


def _repair(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if not mask.any():
        mask[rng.integers(mask.size)] = True
    return mask


def _tournament(fitness: np.ndarray, rng: np.random.Generator, size: int) -> int:
    contenders = rng.integers(len(fitness), size=size)
    return int(contenders[np.argmax(fitness[contenders])])


def ga_select(X, y, fitness_eval, config: GaConfig) -> tuple[Chromosome, list[GenerationStats]]:
    """Evolve feature masks, returning the best-ever mask and history.

    ``fitness_eval(mask, X, y)`` must return a scalar score to maximize
    and be deterministic; evaluations are memoized per chromosome, so
    elite survivors are not re-scored.  The initial population holds
    uniform half-density masks plus the all-ones mask, which guarantees
    the full feature set is always a candidate.  Everything is driven by
    a PCG64 generator seeded from the config, so equal seeds reproduce
    identical histories.
    """
    X = as_feature_matrix(X)
    y = check_consistent_length(X, y)
    n_features = X.shape[1]
    if n_features < 2:
        raise DataError(f"feature selection needs >= 2 features, got {n_features}")

    rng = np.random.Generator(np.random.PCG64(config.seed))
    population = [
        Chromosome(_repair(rng.random(n_features) < 0.5, rng))
        for _ in range(config.population_size - 1)
    ]
    population.append(Chromosome(np.ones(n_features, dtype=bool)))

    best_ever: Chromosome | None = None
    history: list[GenerationStats] = []
    mean_trace: list[float] = []

    for generation in range(config.max_generations):
        for chromo in population:
            if chromo.fitness is None:
                try:
                    chromo.fitness = float(fitness_eval(chromo.mask, X, y))
                except Exception as exc:
                    raise EstimationError(
                        f"fitness evaluation failed at generation {generation}: {exc}"
                    ) from exc

        fitness = np.array([c.fitness for c in population])
        best_idx = int(np.argmax(fitness))
        if best_ever is None or fitness[best_idx] > best_ever.fitness:
            best_ever = population[best_idx].copy()

        mean_trace.append(float(fitness.mean()))
        history.append(
            GenerationStats(
                generation=generation,
                best_fitness=float(fitness[best_idx]),
                mean_fitness=mean_trace[-1],
                std_fitness=float(fitness.std()),
                best_ever_fitness=float(best_ever.fitness),
            )
        )

        if len(mean_trace) >= 4:
            smoothed_now = float(np.mean(mean_trace[-3:]))
            smoothed_prev = float(np.mean(mean_trace[-4:-1]))
            if abs(smoothed_now - smoothed_prev) < config.plateau_tol:
                break
        if generation == config.max_generations - 1:
            break

        ranked = sorted(range(len(population)), key=lambda i: (-fitness[i], i))
        next_population = [population[i].copy() for i in ranked[: config.elitism]]
        while len(next_population) < config.population_size:
            p1 = population[_tournament(fitness, rng, config.tournament_size)].mask
            p2 = population[_tournament(fitness, rng, config.tournament_size)].mask
            point = int(rng.integers(1, n_features))
            for child in (
                np.concatenate([p1[:point], p2[point:]]),
                np.concatenate([p2[:point], p1[point:]]),
            ):
                if len(next_population) >= config.population_size:
                    break
                child = child ^ (rng.random(n_features) < config.mutation_rate)
                next_population.append(Chromosome(_repair(child, rng)))
        population = next_population

    return best_ever, history


def ga_fitness(
    mask: np.ndarray,
    train_x: np.ndarray,
    train_y: np.ndarray,
    eval_x: np.ndarray,
    eval_y: np.ndarray,
    pca_threshold: float = 0.95,
) -> float:
    """Classification success of PCA + naive Bayes on a feature subset.

    The masked columns are PCA-reduced (fit on the training portion
    only), a Gaussian naive Bayes model is trained on the projections,
    and the returned score is its success ratio on the evaluation set.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("feature mask is empty")
    pca = CovariancePca(threshold=pca_threshold).fit(train_x[:, mask])
    model = GaussianNaiveBayes().fit(pca.transform(train_x[:, mask]), train_y)
    success, _ = model.evaluate(pca.transform(eval_x[:, mask]), eval_y)
    return success


def stratified_split(
    labels, fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split into (first, second) index arrays.

    Each class contributes round(fraction * n_c) samples to the first
    part, but never fewer than 2, so a Gaussian naive Bayes model can
    always be fitted on it.
    """
    labels = np.asarray(labels)
    first, second = [], []
    for c in np.unique(labels):
        idx = np.nonzero(labels == c)[0]
        idx = idx[rng.permutation(len(idx))]
        n_first = max(2, int(np.floor(fraction * len(idx) + 0.5)))
        first.extend(idx[:n_first])
        second.extend(idx[n_first:])
    return np.sort(np.array(first, dtype=int)), np.sort(np.array(second, dtype=int))


class GeneticFeatureSelector(BaseEstimator, TransformerMixin):
    """Estimator wrapper around ga_select with the PCA + NB fitness.

    fitness_mode 'inner' (default) scores masks on a stratified holdout
    carved from the training data, keeping the outer test fold unseen;
    'outer' scores directly on evaluation data passed to fit, matching
    a workflow that tunes against its reported test split.

    Attributes set by fit:
        support_     boolean mask over input features
        best_fitness_  fitness of the selected mask
        history_     per-generation statistics
    """

    def __init__(
        self,
        pca_threshold: float = 0.95,
        fitness_mode: str = "inner",
        inner_fraction: float = 0.75,
        population_size: int = 50,
        mutation_rate: float = 0.01,
        elitism: int = 2,
        plateau_tol: float = 1e-5,
        max_generations: int = 200,
        tournament_size: int = 3,
        seed: int = 0,
    ):
        self.pca_threshold = pca_threshold
        self.fitness_mode = fitness_mode
        self.inner_fraction = inner_fraction
        self.population_size = population_size
        self.mutation_rate = mutation_rate
        self.elitism = elitism
        self.plateau_tol = plateau_tol
        self.max_generations = max_generations
        self.tournament_size = tournament_size
        self.seed = seed

    def _config(self) -> GaConfig:
        return GaConfig(
            population_size=self.population_size,
            mutation_rate=self.mutation_rate,
            elitism=self.elitism,
            plateau_tol=self.plateau_tol,
            max_generations=self.max_generations,
            tournament_size=self.tournament_size,
            seed=self.seed,
        )

    def fit(self, X, y, eval_X=None, eval_y=None) -> "GeneticFeatureSelector":
        X = as_feature_matrix(X)
        y = check_consistent_length(X, y)

        if self.fitness_mode == "inner":
            rng = np.random.Generator(np.random.PCG64(self.seed))
            fit_idx, eval_idx = stratified_split(y, self.inner_fraction, rng)
            if eval_idx.size == 0:
                raise DataError("training set is too small for an inner holdout")
            fit_x, fit_y = X[fit_idx], y[fit_idx]
            ev_x, ev_y = X[eval_idx], y[eval_idx]
        elif self.fitness_mode == "outer":
            if eval_X is None or eval_y is None:
                raise ValueError("fitness_mode 'outer' requires eval_X and eval_y")
            fit_x, fit_y = X, y
            ev_x = as_feature_matrix(eval_X)
            ev_y = check_consistent_length(ev_x, eval_y)
        else:
            raise ValueError(f"unknown fitness_mode {self.fitness_mode!r}")

        def fitness(mask, _x, _y):
            return ga_fitness(mask, fit_x, fit_y, ev_x, ev_y, self.pca_threshold)

        best, history = ga_select(X, y, fitness, self._config())
        self.support_ = best.mask
        self.best_fitness_ = best.fitness
        self.history_ = history
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "support_"):
            raise NotFittedError("this GeneticFeatureSelector instance is not fitted yet")
        X = as_feature_matrix(X)
        return X[:, self.support_]
