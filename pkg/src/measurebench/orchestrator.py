"""Experiment lifecycle: configuration, enumeration, execution, storage.

The workspace is a plain directory tree: one JSON record per test under
``tests/``, content-addressed artifacts under ``cache/``, report files
under ``reports/``. Records are published atomically (write-temp-then-
rename), so a killed run can always be resumed.
"""

from __future__ import annotations

import json
import os
import queue
import tempfile
import threading
import time
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import data as data_mod
from . import transforms as transforms_mod
from .datatypes import (
    DatasetRole,
    TestSpec,
    TestStatus,
    TimeSeriesDataset,
)
from .embedding import make_embedder, scale_unit
from .measures import MeasureError, MeasureInput
from .registry import (
    ExpectedBehaviorTable,
    DatasetTraits,
    RegistryError,
    UNSUPPORTED_EMBEDDERS,
    UNSUPPORTED_MEASURES,
    applicable,
    build_measure_registry,
    build_transform_registry,
    canonical_transform_id,
)

DEFAULT_KAPPA_STEPS = 11
DEFAULT_TIME_LIMIT_MINUTES = 120.0
TIME_LIMIT_GRACE = 1.05  # hard watchdog fires at limit * grace

_IGNORED_CONFIG_KEYS = ("use_database", "rebuild_image", "compare_results_to")


class ConfigError(ValueError):
    pass


class WorkspaceLockedError(RuntimeError):
    pass


class TimeLimitExceeded(RuntimeError):
    pass


def kappa_grid_of(steps: int) -> tuple:
    if steps < 2:
        raise ConfigError("kappa grid needs at least 2 steps")
    return tuple(np.round(np.linspace(0.0, 1.0, steps), 9))


@dataclass
class ExperimentConfig:
    name: str
    datasets: List[str]
    dataset_specs: Dict[str, data_mod.DatasetSpec]
    transformations: List[tuple]
    embedders: List[str]
    measures: List[str]
    seeds: List[int]
    data_feeds: List[str] = field(default_factory=list)
    use_cache: bool = True
    record_runtime: bool = True
    restart_failed: bool = False
    test_time_limit: float = DEFAULT_TIME_LIMIT_MINUTES  # minutes
    workers: int = 1
    kappa_grid: tuple = kappa_grid_of(DEFAULT_KAPPA_STEPS)


def _normalize_workers(raw) -> int:
    if raw is None:
        return 1
    if isinstance(raw, int):
        if raw < 1:
            raise ConfigError("workers must be >= 1")
        return raw
    if isinstance(raw, dict):  # container-pool style spec: count the entries
        count = sum(len(v) for v in raw.values() if isinstance(v, list))
        warnings.warn(
            "container-style 'workers' mapping interpreted as "
            f"{max(count, 1)} local workers"
        )
        return max(count, 1)
    raise ConfigError(f"cannot interpret workers: {raw!r}")


def _normalize_chain(entry) -> tuple:
    chain = tuple(entry) if isinstance(entry, (list, tuple)) else (entry,)
    if not 1 <= len(chain) <= 2:
        raise ConfigError(f"transformation chain {chain} must hold 1 or 2 elements")
    return tuple(str(t) for t in chain)


def _default_dataset_specs() -> Dict[str, data_mod.DatasetSpec]:
    return {"sine": data_mod.DatasetSpec(name="sine", source="sine", has_labels=True)}


def parse_config(text_or_dict, base_dir: Optional[Path] = None) -> ExperimentConfig:
    """Parse and validate an experiment configuration (YAML text or dict)."""
    raw = yaml.safe_load(text_or_dict) if isinstance(text_or_dict, str) else dict(text_or_dict)
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    for key in _IGNORED_CONFIG_KEYS:
        if key in raw:
            warnings.warn(f"config key {key!r} has no local equivalent; ignored")

    specs = _default_dataset_specs()
    for name, entry in (raw.get("dataset_specs") or {}).items():
        entry = dict(entry or {})
        source = entry.get("file", entry.get("source", "sine"))
        if source != "sine" and base_dir is not None and not os.path.isabs(source):
            source = str(base_dir / source)
        specs[name] = data_mod.DatasetSpec(
            name=name,
            source=source,
            window_length=entry.get("window_length"),
            stride=entry.get("stride", 1),
            has_labels=bool(entry.get("has_labels", False)),
            sine_params=entry.get("sine", {}) or {},
        )

    datasets = raw.get("datasets", "ALL")
    if datasets == "ALL" or datasets == ["ALL"]:
        datasets = sorted(specs)
    datasets = [str(d) for d in datasets]
    for name in datasets:
        if name not in specs:
            raise ConfigError(f"dataset {name!r} has no dataset_specs entry")

    transform_registry = build_transform_registry()
    transformations = []
    for entry in raw.get("transformations", []):
        chain = _normalize_chain(entry)
        for t in chain:
            if canonical_transform_id(t) not in transform_registry:
                raise ConfigError(f"unknown transformation id {t!r}")
        transformations.append(chain)
    if not transformations:
        raise ConfigError("config lists no transformations")

    measure_registry = build_measure_registry()
    measures = []
    for m in raw.get("measures", []):
        m = str(m)
        if m in UNSUPPORTED_MEASURES:
            raise ConfigError(
                f"measure {m!r} is out of scope here: {UNSUPPORTED_MEASURES[m]}"
            )
        if m not in measure_registry:
            raise ConfigError(f"unknown measure id {m!r}")
        measures.append(m)
    if not measures:
        raise ConfigError("config lists no measures")

    embedders = [str(e) for e in raw.get("embedders", ["concat"])]
    for e in embedders:
        if e in UNSUPPORTED_EMBEDDERS:
            raise ConfigError(f"embedder {e!r} unavailable: {UNSUPPORTED_EMBEDDERS[e]}")
        if e not in ("concat", "statfeat"):
            raise ConfigError(f"unknown embedder id {e!r}")

    seeds = [int(s) for s in raw.get("seeds", [])]
    if not seeds:
        raise ConfigError("config lists no seeds")

    steps = int(raw.get("kappa_steps", DEFAULT_KAPPA_STEPS))
    return ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        datasets=datasets,
        dataset_specs=specs,
        transformations=transformations,
        embedders=embedders,
        measures=measures,
        seeds=seeds,
        data_feeds=[str(f) for f in raw.get("data_feeds", [])],
        use_cache=bool(raw.get("use_cache", True)),
        record_runtime=bool(raw.get("record_runtime", True)),
        restart_failed=bool(raw.get("restart_failed", False)),
        test_time_limit=float(raw.get("test_time_limit", DEFAULT_TIME_LIMIT_MINUTES)),
        workers=_normalize_workers(raw.get("workers")),
        kappa_grid=kappa_grid_of(steps),
    )


# ---------------------------------------------------------------------------
# Workspace storage

def _atomic_write_json(path: Path, payload: dict) -> None:
    tmp = tempfile.NamedTemporaryFile(
        "w", dir=path.parent, prefix=path.name, suffix=".tmp", delete=False
    )
    try:
        json.dump(payload, tmp, sort_keys=True)
        tmp.flush()
        os.fsync(tmp.fileno())
    finally:
        tmp.close()
    os.replace(tmp.name, path)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class Workspace:
    """Filesystem store for one experiment: records, cache, reports, lock."""

    def __init__(self, root, name: str):
        self.root = Path(root) / name
        self.tests_dir = self.root / "tests"
        self.cache_dir = self.root / "cache"
        self.reports_dir = self.root / "reports"
        for d in (self.tests_dir, self.cache_dir, self.reports_dir):
            d.mkdir(parents=True, exist_ok=True)
        self._lock_path = self.root / "lock"
        self._io_lock = threading.Lock()

    # -- lock ---------------------------------------------------------------
    def acquire_lock(self) -> None:
        if self._lock_path.exists():
            try:
                pid = int(self._lock_path.read_text().strip())
            except ValueError:
                pid = -1
            if pid > 0 and _pid_alive(pid):
                raise WorkspaceLockedError(
                    f"workspace {self.root} locked by live process {pid}"
                )
        self._lock_path.write_text(str(os.getpid()))

    def release_lock(self) -> None:
        try:
            if self._lock_path.exists() and self._lock_path.read_text().strip() == str(os.getpid()):
                self._lock_path.unlink()
        except OSError:
            pass

    # -- records ------------------------------------------------------------
    def record_path(self, test_id: str) -> Path:
        return self.tests_dir / f"{test_id}.json"

    def write_record(self, record: dict) -> None:
        with self._io_lock:
            _atomic_write_json(self.record_path(record["test_id"]), record)

    def read_record(self, test_id: str) -> Optional[dict]:
        path = self.record_path(test_id)
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError:
            return None

    def all_records(self) -> List[dict]:
        out = []
        for path in sorted(self.tests_dir.glob("*.json")):
            try:
                out.append(json.loads(path.read_text()))
            except json.JSONDecodeError:
                continue
        return out

    # -- cache ----------------------------------------------------------------
    def cache_path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.npz"

    def cache_get(self, key: str) -> Optional[dict]:
        path = self.cache_path(key)
        if not path.exists():
            return None
        try:
            with np.load(path, allow_pickle=False) as handle:
                return {k: handle[k] for k in handle.files}
        except Exception:
            # corrupt entry: evict and treat as a miss
            try:
                path.unlink()
            except OSError:
                pass
            return None

    def cache_put(self, key: str, arrays: dict) -> None:
        path = self.cache_path(key)
        tmp = tempfile.NamedTemporaryFile(
            dir=path.parent, prefix=key, suffix=".tmp", delete=False
        )
        try:
            np.savez(tmp, **arrays)
            tmp.flush()
        finally:
            tmp.close()
        os.replace(tmp.name, path)


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


# ---------------------------------------------------------------------------
# Record schema helpers

def new_record(spec: TestSpec, status: TestStatus = TestStatus.TODO,
               reason: Optional[str] = None) -> dict:
    return {
        "test_id": spec.test_id(),
        "spec": spec.to_dict(),
        "status": status.value,
        "scores": [],
        "runtimes": [],
        "embed_runtimes": [],
        "cache_aided": [],
        "embed_cached": [],
        "extras": [],
        "failure_reason": reason,
        "started_at": None,
        "finished_at": None,
    }


def classify_failure(exc: BaseException, limit_minutes: float) -> str:
    if isinstance(exc, TimeLimitExceeded):
        return f"Time limit of {limit_minutes:g} minutes exceeded"
    if isinstance(exc, MemoryError):
        return "Memory limit exceeded"
    if isinstance(exc, MeasureError):
        return str(exc)
    return f"Runtime error: {type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# Experiment runtime state

class ExperimentState:
    """Immutable-after-init shared state: registries, datasets, splits."""

    def __init__(self, config: ExperimentConfig, workspace: Workspace):
        self.config = config
        self.workspace = workspace
        self.measures = build_measure_registry()
        self.transforms = build_transform_registry()
        self.behavior = ExpectedBehaviorTable()
        needs_held_out = any(
            self.measures.descriptor(m).needs_held_out for m in config.measures
        )
        self.split_policy = data_mod.SplitPolicy.for_requirements(needs_held_out)
        self.datasets: Dict[str, TimeSeriesDataset] = {}
        self.stats: Dict[str, data_mod.DatasetStats] = {}
        for name in config.datasets:
            ds, stats = data_mod.load_dataset(config.dataset_specs[name])
            ds.name = name
            self.datasets[name] = ds
            self.stats[name] = stats
        self._splits: Dict[Tuple[str, int], tuple] = {}
        self._split_lock = threading.Lock()
        self._embed_memo: Dict[str, "np.ndarray"] = {}
        self._memo_lock = threading.Lock()

    def traits(self, name: str) -> DatasetTraits:
        ds = self.datasets[name]
        return DatasetTraits(
            name=name,
            has_labels=ds.has_labels,
            channels=ds.channels,
            length=ds.length,
            n_classes=len(ds.class_histogram()),
            has_substitute=True,
            has_held_out=self.split_policy.n_parts >= 3,
        )

    def splits(self, dataset: str, seed: int):
        key = (dataset, seed)
        with self._split_lock:
            if key not in self._splits:
                self._splits[key] = data_mod.split(
                    self.datasets[dataset], self.split_policy, seed
                )
            return self._splits[key]


def enumerate_tests(config: ExperimentConfig, state: ExperimentState
                    ) -> Tuple[List[TestSpec], List[Tuple[TestSpec, str]]]:
    """Cartesian product filtered by applicability.

    Returns (runnable, skipped-with-reason); the order is deterministic.
    """
    runnable, skipped = [], []
    for dataset in config.datasets:
        traits = state.traits(dataset)
        for chain in config.transformations:
            for measure in config.measures:
                desc = state.measures.descriptor(measure)
                embedders = config.embedders if desc.needs_embedding else [None]
                for embedder in embedders:
                    for seed in config.seeds:
                        spec = TestSpec(
                            dataset=dataset,
                            transformation_chain=chain,
                            measure=measure,
                            embedder=embedder,
                            seed=seed,
                            kappa_grid=config.kappa_grid,
                        )
                        ok, reason = applicable(spec, traits, state.measures,
                                                state.transforms)
                        if ok:
                            runnable.append(spec)
                        else:
                            skipped.append((spec, reason))
    if not runnable and not skipped:
        raise ConfigError("experiment enumerates no tests")
    return runnable, skipped


# ---------------------------------------------------------------------------
# Per-test execution

class _Deadline:
    def __init__(self, limit_minutes: float):
        self.expires = time.perf_counter() + limit_minutes * 60.0

    def check(self):
        if time.perf_counter() > self.expires:
            raise TimeLimitExceeded()


def _transform_cache_key(spec: TestSpec, state: ExperimentState, kappa: float) -> str:
    base = state.datasets[spec.dataset]
    chain = "+".join(canonical_transform_id(t) for t in spec.transformation_chain)
    return f"t_{base.content_hash()}_{chain}_{kappa:g}_{spec.seed}"


def _transformed_dataset(spec: TestSpec, state: ExperimentState, kappa: float
                         ) -> Tuple[TimeSeriesDataset, bool]:
    """Transformation artifact for one kappa step; disk-cached when enabled."""
    workspace = state.workspace
    use_cache = state.config.use_cache
    key = _transform_cache_key(spec, state, kappa)
    if use_cache:
        hit = workspace.cache_get(key)
        if hit is not None:
            labels = hit.get("labels")
            return (
                TimeSeriesDataset(
                    values=hit["values"],
                    labels=labels if labels is not None and labels.size else None,
                    name=f"{spec.dataset}/synthetic",
                    role=DatasetRole.SYNTHETIC,
                ),
                True,
            )
    d_train, d_rs, _ = state.splits(spec.dataset, spec.seed)
    out = transforms_mod.apply_chain(
        spec.transformation_chain, d_train, d_rs, kappa, spec.seed
    )
    if use_cache:
        arrays = {"values": out.values}
        arrays["labels"] = out.labels if out.has_labels else np.empty(0, dtype=np.int64)
        workspace.cache_put(key, arrays)
    return out, False


def _embedding_for(state: ExperimentState, embedder_id: str,
                   train: TimeSeriesDataset, target: TimeSeriesDataset
                   ) -> Tuple[np.ndarray, bool, float]:
    """Embed `target` with an embedder fitted on `train`.

    Returns (vectors, cache_hit, seconds). Cached on disk by content hash
    and memoized in process.
    """
    key = f"e_{embedder_id}_{train.content_hash()}_{target.content_hash()}"
    with state._memo_lock:
        memo = state._embed_memo.get(key)
    if memo is not None:
        return memo, True, 0.0
    if state.config.use_cache:
        hit = state.workspace.cache_get(key)
        if hit is not None:
            vectors = hit["vectors"]
            with state._memo_lock:
                state._embed_memo[key] = vectors
            return vectors, True, 0.0
    start = time.perf_counter()
    embedder = make_embedder(embedder_id).fit(train)
    vectors = embedder.transform(target).vectors
    elapsed = time.perf_counter() - start
    if state.config.use_cache:
        state.workspace.cache_put(key, {"vectors": vectors})
    with state._memo_lock:
        state._embed_memo[key] = vectors
    return vectors, False, elapsed


def execute_test(spec: TestSpec, state: ExperimentState,
                 deadline: Optional[_Deadline] = None) -> dict:
    """Run the full modulation path of one test; returns the record dict."""
    from .datatypes import EmbeddedDataset

    record = new_record(spec, TestStatus.ONGOING)
    record["started_at"] = _now()
    desc = state.measures.descriptor(spec.measure)
    impl = state.measures.impl(spec.measure)
    d_train, d_rs, d_held = state.splits(spec.dataset, spec.seed)

    try:
        for kappa in spec.kappa_grid:
            if deadline is not None:
                deadline.check()
            d_synth, from_cache = _transformed_dataset(spec, state, kappa)
            embed_seconds = 0.0
            embed_cached = False
            m_train, m_synth, m_held = d_train, d_synth, d_held
            e_train = e_synth = e_held = None
            if desc.needs_scaling:
                m_train = scale_unit(d_train, d_train)
                m_synth = scale_unit(d_synth, d_train)
                if d_held is not None:
                    m_held = scale_unit(d_held, d_train)
            if desc.needs_embedding:
                vec_train, hit_t, sec_t = _embedding_for(
                    state, spec.embedder, d_train, d_train)
                vec_synth, hit_s, sec_s = _embedding_for(
                    state, spec.embedder, d_train, d_synth)
                e_train = EmbeddedDataset(vec_train, d_train.name, spec.embedder)
                e_synth = EmbeddedDataset(vec_synth, d_synth.name, spec.embedder)
                embed_seconds = sec_t + sec_s
                embed_cached = hit_t and hit_s
                if desc.needs_held_out and d_held is not None:
                    vec_held, hit_h, sec_h = _embedding_for(
                        state, spec.embedder, d_train, d_held)
                    e_held = EmbeddedDataset(vec_held, d_held.name, spec.embedder)
                    embed_seconds += sec_h
                    embed_cached = embed_cached and hit_h
            measure_input = MeasureInput(
                d_train=m_train, d_synth=m_synth, d_held_out=m_held,
                e_train=e_train, e_synth=e_synth, e_held_out=e_held,
                seed=spec.seed,
            )
            start = time.perf_counter()
            result = impl(measure_input)
            elapsed = time.perf_counter() - start
            if deadline is not None:
                deadline.check()
            value = result.value
            if isinstance(value, tuple):
                value = list(value)
            record["scores"].append(value)
            record["runtimes"].append(elapsed)
            record["embed_runtimes"].append(embed_seconds)
            record["cache_aided"].append(bool(from_cache))
            record["embed_cached"].append(bool(embed_cached))
            record["extras"].append(result.extras)
        record["status"] = TestStatus.SUCCESSFUL.value
    except transforms_mod.InapplicableError as exc:
        record["status"] = TestStatus.SKIPPED.value
        record["failure_reason"] = str(exc)
    except BaseException as exc:  # every failure is benchmark data
        record["status"] = TestStatus.FAILED.value
        record["failure_reason"] = classify_failure(exc, state.config.test_time_limit)
    record["finished_at"] = _now()
    return record


# ---------------------------------------------------------------------------
# Experiment driver

@dataclass
class RunSummary:
    total: int = 0
    successful: int = 0
    failed: int = 0
    skipped: int = 0

    def as_dict(self):
        return self.__dict__.copy()


def _run_single(spec: TestSpec, state: ExperimentState) -> dict:
    """Execute one test under the time limit with a hard watchdog."""
    workspace = state.workspace
    limit = state.config.test_time_limit
    ongoing = new_record(spec, TestStatus.ONGOING)
    ongoing["started_at"] = _now()
    workspace.write_record(ongoing)

    result_box: dict = {}
    abandoned = threading.Event()

    def work():
        rec = execute_test(spec, state, deadline=_Deadline(limit))
        if not abandoned.is_set():
            result_box["record"] = rec

    worker = threading.Thread(target=work, daemon=True)
    worker.start()
    worker.join(timeout=limit * 60.0 * TIME_LIMIT_GRACE)
    if "record" in result_box:
        record = result_box["record"]
    else:
        abandoned.set()
        record = new_record(spec, TestStatus.FAILED,
                            reason=f"Time limit of {limit:g} minutes exceeded")
        record["started_at"] = ongoing["started_at"]
        record["finished_at"] = _now()
    workspace.write_record(record)
    return record


def recover_records(workspace: Workspace, restart_failed: bool) -> Dict[str, str]:
    """Reset interrupted records; returns test_id -> status after recovery."""
    statuses = {}
    for record in workspace.all_records():
        status = record["status"]
        if status == TestStatus.ONGOING.value or (
            restart_failed and status == TestStatus.FAILED.value
        ):
            fresh = new_record(TestSpec.from_dict(record["spec"]), TestStatus.TODO)
            workspace.write_record(fresh)
            status = TestStatus.TODO.value
        statuses[record["test_id"]] = status
    return statuses


def run_experiment(config: ExperimentConfig, workspace_root,
                   mode: str = "sequential", workers: Optional[int] = None,
                   progress=None) -> Workspace:
    """Run (or resume) every enumerated test to a terminal status.

    mode is "sequential" or "parallel"; evaluation/report emission is a
    separate read-only step (see reporting.emit_reports).
    """
    if mode not in ("sequential", "parallel"):
        raise ConfigError(f"unknown mode {mode!r}")
    n_workers = workers if workers is not None else (config.workers if mode == "parallel" else 1)
    workspace = Workspace(workspace_root, config.name)
    workspace.acquire_lock()
    try:
        state = ExperimentState(config, workspace)
        runnable, skipped = enumerate_tests(config, state)

        statuses = recover_records(workspace, config.restart_failed)
        for spec, reason in skipped:
            if statuses.get(spec.test_id()) is None:
                workspace.write_record(
                    new_record(spec, TestStatus.SKIPPED,
                               reason=f"skipped (inapplicable): {reason}")
                )
        pending = []
        for spec in runnable:
            status = statuses.get(spec.test_id())
            if status in (TestStatus.SUCCESSFUL.value, TestStatus.FAILED.value,
                          TestStatus.SKIPPED.value):
                continue
            if status is None:
                workspace.write_record(new_record(spec, TestStatus.TODO))
            pending.append(spec)

        if mode == "sequential" or n_workers == 1:
            for spec in pending:
                record = _run_single(spec, state)
                if progress:
                    progress(record)
        else:
            work_queue: "queue.Queue" = queue.Queue()
            for spec in pending:
                work_queue.put(spec)
            errors: list = []

            def worker_loop():
                while True:
                    try:
                        spec = work_queue.get_nowait()
                    except queue.Empty:
                        return
                    try:
                        record = _run_single(spec, state)
                        if progress:
                            progress(record)
                    except BaseException as exc:  # worker crash: keep going
                        errors.append(exc)
                    finally:
                        work_queue.task_done()

            threads = [threading.Thread(target=worker_loop, daemon=True)
                       for _ in range(n_workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            if errors:
                raise errors[0]
        return workspace
    finally:
        workspace.release_lock()


def summarize(workspace: Workspace) -> RunSummary:
    summary = RunSummary()
    for record in workspace.all_records():
        summary.total += 1
        if record["status"] == TestStatus.SUCCESSFUL.value:
            summary.successful += 1
        elif record["status"] == TestStatus.FAILED.value:
            summary.failed += 1
        elif record["status"] == TestStatus.SKIPPED.value:
            summary.skipped += 1
    return summary
