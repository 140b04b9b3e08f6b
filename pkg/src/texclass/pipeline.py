"""Experiment orchestration: the 31-case sweep and its reports.

A sweep extracts the 520-value feature vector once per sample (cached
to disk), then for every requested source-selection case repeats a
seeded shuffle into 60/40 train/test folds and scores three stages:

    raw   naive Bayes on the selected raw features,
    pca   naive Bayes on covariance-PCA projections,
    ga    genetic mask search with PCA-embedded fitness, scored on the
          held-out test fold.

Per-permutation seeds derive from SeedSequence(base seed, case number,
permutation index, stream), so any case/permutation reproduces in
isolation and results are identical for any worker count.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .bayes import ConfusionMatrix, GaussianNaiveBayes
from .config import ExperimentConfig
from .dataset import ImageSample, SplitSpec, load_dataset, split_ids
from .errors import ConfigError, DataError, EstimationError, TexclassError
from .features import feature_vector, vector_feature_names
from .filters import SourceSelection
from .reduce import CovariancePca, ga_fitness, ga_select, stratified_split

RESULTS_FILE = "results.csv"
RESULTS_HEADER = [
    "case", "V", "E", "C", "G", "O",
    "mu0", "sd0", "mu_pca", "sd_pca", "mu_ga", "sd_ga", "nf0", "nf_ga",
]

# Streams for per-permutation seed derivation.
_STREAM_SPLIT = 0
_STREAM_GA = 1
_STREAM_INNER = 2


def derive_seed(base_seed: int, case: int, permutation: int, stream: int) -> int:
    """Stable 64-bit seed for one (case, permutation, stream) slot."""
    ss = np.random.SeedSequence([base_seed, case, permutation, stream])
    return int(ss.generate_state(1, np.uint64)[0])


# --------------------------------------------------------------------------- #
# Feature tables and the on-disk cache
# --------------------------------------------------------------------------- #
@dataclass
class FeatureTable:
    """Extracted features for a sample collection."""

    ids: list[str]
    labels: list[str]
    names: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n, d = self.values.shape
        if len(self.ids) != n or len(self.labels) != n or len(self.names) != d:
            raise ValueError("feature table fields have inconsistent sizes")

    def labels_by_id(self) -> dict[str, str]:
        return dict(zip(self.ids, self.labels))

    def select_sources(self, selection: SourceSelection) -> "FeatureTable":
        """Restrict columns to one case's sources, in canonical order."""
        wanted = vector_feature_names(selection)
        index = {name: i for i, name in enumerate(self.names)}
        missing = [n for n in wanted if n not in index]
        if missing:
            raise DataError(
                f"feature cache is missing {len(missing)} columns for case "
                f"{selection.case_number}, e.g. {missing[0]!r}"
            )
        cols = [index[n] for n in wanted]
        return FeatureTable(
            ids=self.ids,
            labels=self.labels,
            names=wanted,
            values=self.values[:, cols],
        )

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "label", *self.names])
            for i, (sid, label) in enumerate(zip(self.ids, self.labels)):
                writer.writerow(
                    [sid, label, *(repr(float(v)) for v in self.values[i])]
                )

    @classmethod
    def read_csv(cls, path) -> "FeatureTable":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"feature cache {path} does not exist")
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[:2] != ["id", "label"]:
                raise DataError(f"feature cache {path} must start with 'id,label'")
            names = header[2:]
            ids, labels, rows = [], [], []
            for row in reader:
                if len(row) != len(header):
                    raise DataError(f"feature cache {path} has a malformed row")
                ids.append(row[0])
                labels.append(row[1])
                rows.append([float(v) for v in row[2:]])
        if not ids:
            raise DataError(f"feature cache {path} is empty")
        return cls(ids=ids, labels=labels, names=names, values=np.array(rows))


def dataset_fingerprint(samples: list[ImageSample]) -> str:
    """Content hash of a sample collection (ids, labels, pixels)."""
    digest = hashlib.sha256()
    for s in sorted(samples, key=lambda s: s.id):
        digest.update(s.id.encode())
        digest.update(s.label.encode())
        digest.update(np.ascontiguousarray(s.pixels).tobytes())
    return digest.hexdigest()


def _extract_one(sample: ImageSample, config: ExperimentConfig) -> np.ndarray:
    vec = feature_vector(sample, SourceSelection.all_sources(), config.feature_config())
    return vec.values


def extract_features(
    samples: list[ImageSample], config: ExperimentConfig
) -> FeatureTable:
    """Extract all 520 features for every sample (parallel over samples)."""
    if not samples:
        raise DataError("no samples to extract features from")
    samples = sorted(samples, key=lambda s: s.id)
    names = vector_feature_names(SourceSelection.all_sources())
    rows = Parallel(n_jobs=config.workers)(
        delayed(_extract_one)(s, config) for s in samples
    )
    return FeatureTable(
        ids=[s.id for s in samples],
        labels=[s.label for s in samples],
        names=names,
        values=np.stack(rows),
    )


def _cache_meta(config: ExperimentConfig, fingerprint: str) -> dict:
    return {
        "fingerprint": fingerprint,
        "levels": config.levels,
        "filtered_levels": config.effective_filtered_levels,
        "tsallis_q": config.tsallis_q,
        "sato_k": config.sato_k,
        "gaussian_sigma": config.gaussian_sigma,
        "canny_sigma": config.canny_sigma,
        "canny_low_ratio": config.canny_low_ratio,
        "canny_high_percentile": config.canny_high_percentile,
    }


def load_or_extract_features(
    samples: list[ImageSample], config: ExperimentConfig, cache_path
) -> FeatureTable:
    """Reuse the cached feature table when its extraction key matches."""
    cache_path = Path(cache_path)
    meta_path = cache_path.with_name(cache_path.name + ".meta.json")
    meta = _cache_meta(config, dataset_fingerprint(samples))
    if cache_path.is_file() and meta_path.is_file():
        try:
            if json.loads(meta_path.read_text()) == meta:
                return FeatureTable.read_csv(cache_path)
        except (json.JSONDecodeError, OSError):
            pass
    table = extract_features(samples, config)
    table.write_csv(cache_path)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return table


# --------------------------------------------------------------------------- #
# Case execution
# --------------------------------------------------------------------------- #
@dataclass
class CaseResult:
    """Aggregated statistics for one source-selection case."""

    case: int
    flags: tuple[bool, bool, bool, bool, bool]   # (V, E, C, G, O)
    stage_stats: dict[str, tuple[float, float]]  # stage -> (mean, std) success
    nf0: int
    nf_ga: float
    confusion: ConfusionMatrix | None = None
    selection_frequency: dict[str, float] | None = None


@dataclass
class _PermutationOutcome:
    successes: dict[str, float]
    classes: tuple[str, ...]
    confusion: np.ndarray
    mask: np.ndarray | None


def _evolve_mask(X_train, y_train, X_test, y_test, config, ga_seed, inner_seed):
    """Run the genetic search for one permutation's training fold."""
    if config.resolved_fitness_mode == "inner":
        rng = np.random.Generator(np.random.PCG64(inner_seed))
        fit_idx, eval_idx = stratified_split(y_train, config.ga_inner_fraction, rng)
        if eval_idx.size == 0:
            raise DataError("training fold is too small for an inner GA holdout")
        fit_x, fit_y = X_train[fit_idx], y_train[fit_idx]
        ev_x, ev_y = X_train[eval_idx], y_train[eval_idx]
    else:
        fit_x, fit_y, ev_x, ev_y = X_train, y_train, X_test, y_test

    def fitness(mask, _x, _y):
        return ga_fitness(mask, fit_x, fit_y, ev_x, ev_y, config.pca_threshold)

    best, _history = ga_select(X_train, y_train, fitness, config.ga_config(ga_seed))
    return best.mask


def _run_permutation(
    permutation: int,
    case: int,
    X: np.ndarray,
    y: np.ndarray,
    labels_by_id: dict[str, str],
    id_index: dict[str, int],
    stages: tuple[str, ...],
    config: ExperimentConfig,
    fixed_mask: np.ndarray | None,
) -> _PermutationOutcome:
    split_seed = derive_seed(config.seed, case, permutation, _STREAM_SPLIT)
    try:
        train_ids, test_ids = split_ids(
            labels_by_id, SplitSpec(seed=split_seed, train_fraction=config.train_fraction)
        )
        train_idx = np.array([id_index[i] for i in train_ids])
        test_idx = np.array([id_index[i] for i in test_ids])
        X_train, y_train = X[train_idx], y[train_idx]
        X_test, y_test = X[test_idx], y[test_idx]

        successes: dict[str, float] = {}
        final_stage = stages[-1]
        confusion = None
        classes: tuple[str, ...] = ()
        mask = None

        if "raw" in stages:
            model = GaussianNaiveBayes().fit(X_train, y_train)
            successes["raw"], conf = model.evaluate(X_test, y_test)
            if final_stage == "raw":
                confusion, classes = conf.counts, conf.classes

        if "pca" in stages:
            pca = CovariancePca(threshold=config.pca_threshold).fit(X_train)
            model = GaussianNaiveBayes().fit(pca.transform(X_train), y_train)
            successes["pca"], conf = model.evaluate(pca.transform(X_test), y_test)
            if final_stage == "pca":
                confusion, classes = conf.counts, conf.classes

        if "ga" in stages:
            if fixed_mask is not None:
                mask = fixed_mask
            else:
                mask = _evolve_mask(
                    X_train, y_train, X_test, y_test, config,
                    ga_seed=derive_seed(config.seed, case, permutation, _STREAM_GA),
                    inner_seed=derive_seed(config.seed, case, permutation, _STREAM_INNER),
                )
            pca = CovariancePca(threshold=config.pca_threshold).fit(X_train[:, mask])
            model = GaussianNaiveBayes().fit(pca.transform(X_train[:, mask]), y_train)
            successes["ga"], conf = model.evaluate(pca.transform(X_test[:, mask]), y_test)
            if final_stage == "ga":
                confusion, classes = conf.counts, conf.classes

        return _PermutationOutcome(
            successes=successes, classes=classes, confusion=confusion, mask=mask
        )
    except TexclassError as exc:
        raise type(exc)(
            f"case {case}, permutation {permutation} (split seed {split_seed}): {exc}"
        ) from exc


def run_case(
    table: FeatureTable, selection: SourceSelection, config: ExperimentConfig
) -> CaseResult:
    """Run every permutation of one case and aggregate its statistics."""
    sub = table.select_sources(selection)
    X = sub.values
    y = np.asarray(sub.labels)
    labels_by_id = sub.labels_by_id()
    id_index = {sid: i for i, sid in enumerate(sub.ids)}
    stages = config.ordered_stages()
    case = selection.case_number

    fixed_mask = None
    if "ga" in stages and config.ga_mask_mode == "fixed":
        outcome = _run_permutation(
            0, case, X, y, labels_by_id, id_index, ("ga",), config, None
        )
        fixed_mask = outcome.mask

    runner = delayed(_run_permutation)
    outcomes = Parallel(n_jobs=config.workers)(
        runner(p, case, X, y, labels_by_id, id_index, stages, config, fixed_mask)
        for p in range(config.permutations)
    )

    stage_stats = {}
    for stage in stages:
        values = np.array([o.successes[stage] for o in outcomes])
        stage_stats[stage] = (float(values.mean()), float(values.std()))

    confusion = None
    if outcomes[0].confusion is not None:
        counts = np.mean([o.confusion for o in outcomes], axis=0)
        confusion = ConfusionMatrix(classes=outcomes[0].classes, counts=counts)

    nf0 = X.shape[1]
    nf_ga = float(nf0)
    frequency = None
    if "ga" in stages:
        masks = np.stack([o.mask for o in outcomes])
        nf_ga = float(masks.sum(axis=1).mean())
        frequency = dict(zip(sub.names, masks.mean(axis=0)))

    return CaseResult(
        case=case,
        flags=selection.flags,
        stage_stats=stage_stats,
        nf0=nf0,
        nf_ga=nf_ga,
        confusion=confusion,
        selection_frequency=frequency,
    )


def run_experiment(config: ExperimentConfig) -> list[CaseResult]:
    """Execute the configured sweep and write all result files."""
    if not config.dataset:
        raise ConfigError("config is missing the 'dataset' key")
    samples = load_dataset(config.dataset)
    out_dir = Path(config.output)
    cache_path = Path(config.cache) if config.cache else out_dir / "features.csv"
    table = load_or_extract_features(samples, config, cache_path)

    results = [
        run_case(table, SourceSelection.from_case(case), config)
        for case in config.cases
    ]
    write_results(results, out_dir)
    return results


# --------------------------------------------------------------------------- #
# Result files
# --------------------------------------------------------------------------- #
def _fmt_pct(stats: tuple[float, float] | None, which: int) -> str:
    if stats is None:
        return ""
    return f"{100.0 * stats[which]:.2f}"


def write_results(results: list[CaseResult], out_dir) -> None:
    """Write the case table plus per-case confusion and frequency files.

    Success statistics are stored in percent with two decimals (the
    resolution of the report tables); confusion counts and selection
    frequencies keep full precision.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / RESULTS_FILE, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        for r in results:
            writer.writerow([
                r.case,
                *(int(f) for f in r.flags),
                _fmt_pct(r.stage_stats.get("raw"), 0),
                _fmt_pct(r.stage_stats.get("raw"), 1),
                _fmt_pct(r.stage_stats.get("pca"), 0),
                _fmt_pct(r.stage_stats.get("pca"), 1),
                _fmt_pct(r.stage_stats.get("ga"), 0),
                _fmt_pct(r.stage_stats.get("ga"), 1),
                r.nf0,
                f"{r.nf_ga:.2f}",
            ])

    for r in results:
        if r.confusion is not None:
            path = out_dir / f"case_{r.case:02d}_confusion.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["", *r.confusion.classes])
                for name, row in zip(r.confusion.classes, r.confusion.counts):
                    writer.writerow([name, *(repr(float(v)) for v in row)])
        if r.selection_frequency is not None:
            path = out_dir / f"case_{r.case:02d}_frequencies.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["feature", "frequency"])
                for name, freq in r.selection_frequency.items():
                    writer.writerow([name, repr(float(freq))])


def _parse_pct(cell: str) -> tuple[float, float] | None:
    return float(cell) / 100.0 if cell else None


def read_results(results_dir) -> list[CaseResult]:
    """Parse result files back into CaseResult values (at file precision)."""
    results_dir = Path(results_dir)
    table_path = results_dir / RESULTS_FILE
    if not table_path.is_file():
        raise ConfigError(f"no {RESULTS_FILE} in {results_dir}")

    results = []
    with open(table_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULTS_HEADER:
            raise DataError(f"{table_path} has unexpected header {header}")
        for row in reader:
            record = dict(zip(RESULTS_HEADER, row))
            case = int(record["case"])
            stage_stats = {}
            for stage, mu_key, sd_key in (
                ("raw", "mu0", "sd0"), ("pca", "mu_pca", "sd_pca"), ("ga", "mu_ga", "sd_ga"),
            ):
                mu = _parse_pct(record[mu_key])
                sd = _parse_pct(record[sd_key])
                if mu is not None:
                    stage_stats[stage] = (mu, sd)
            result = CaseResult(
                case=case,
                flags=tuple(bool(int(record[k])) for k in ("V", "E", "C", "G", "O")),
                stage_stats=stage_stats,
                nf0=int(record["nf0"]),
                nf_ga=float(record["nf_ga"]),
            )
            conf_path = results_dir / f"case_{case:02d}_confusion.csv"
            if conf_path.is_file():
                with open(conf_path, newline="") as cf:
                    rows = list(csv.reader(cf))
                classes = tuple(rows[0][1:])
                counts = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
                result.confusion = ConfusionMatrix(classes=classes, counts=counts)
            freq_path = results_dir / f"case_{case:02d}_frequencies.csv"
            if freq_path.is_file():
                with open(freq_path, newline="") as ff:
                    reader2 = csv.reader(ff)
                    next(reader2)
                    result.selection_frequency = {
                        name: float(freq) for name, freq in reader2
                    }
            results.append(result)
    return results


# --------------------------------------------------------------------------- #
# Reports
# --------------------------------------------------------------------------- #
CORRELATION_ORDER = ("original", "variance", "entropy", "canny", "gaussian")

_FLAG_INDEX = {"variance": 0, "entropy": 1, "canny": 2, "gaussian": 3, "original": 4}


def filter_correlations(
    results: list[CaseResult], stage: str = "raw"
) -> list[tuple[str, float]]:
    """Pearson correlation of each source's inclusion with case success."""
    usable = [r for r in results if stage in r.stage_stats]
    if len(usable) < 3:
        raise EstimationError(
            f"need at least 3 cases with stage {stage!r}, got {len(usable)}"
        )
    success = np.array([r.stage_stats[stage][0] for r in usable])
    if success.std() == 0.0:
        raise EstimationError("success column is constant; correlation undefined")

    report = []
    for source in CORRELATION_ORDER:
        flags = np.array([float(r.flags[_FLAG_INDEX[source]]) for r in usable])
        if flags.std() == 0.0:
            raise EstimationError(
                f"source {source!r} has a constant inclusion flag across cases"
            )
        r = float(np.corrcoef(flags, success)[0, 1])
        report.append((source, r))
    return report


def feature_group(name: str) -> str:
    """Feature-type group of a canonical name (strips source/variant)."""
    return name.rsplit(".", 1)[-1]


def relevance_report(results: list[CaseResult]) -> list[tuple[str, float]]:
    """Feature groups ranked by mean GA selection frequency."""
    groups: dict[str, list[float]] = {}
    for r in results:
        if r.selection_frequency is None:
            continue
        for name, freq in r.selection_frequency.items():
            groups.setdefault(feature_group(name), []).append(freq)
    if not groups:
        raise DataError("no case carries GA selection frequencies")
    ranked = [(g, float(np.mean(v))) for g, v in groups.items()]
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked
