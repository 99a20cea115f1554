"""Experiment configuration, execution and export.

Config files are INI-style (``configparser``)::

    [experiment]
    horizon = 250
    replicates = 20
    base_seed = 0

    [graph]
    spec = ba:n=500,m=3,seed=0

    [reward]
    kind = sparse          # or: latent
    k = 5
    seed = 0
    noise = 0.01
    unit_interval = false
    # latent rewards: items = <path to vector file>, user = 0.3 -0.1 ...

    [policy:spectral]
    kind = spectral_ucb    # lin_ucb | spectral_eliminator | linear_eliminator
    lambda = 0.01
    delta = 0.001
    r_noise = 0.01
    c_bound = auto         # true norm of the reward; log_t; or a number
    basis_size = 0         # 0 keeps every eigenvector
    lazy = false
    dimension = effective  # or: ambient

Replicate ``i`` is labelled ``base_seed + i`` in the traces. Its random
stream is ``SeedSequence(base_seed, spawn_key=(i,))``, i.e. the ``i``-th
child of ``SeedSequence(base_seed)``; every policy of a replicate sees the
same stream.
"""
from __future__ import annotations

import configparser
import csv
import io
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .env import (
    NoiseModel,
    RegretTrace,
    fmt12,
    gen_sparse_smooth_reward,
    latent_reward_model,
    load_latent_vectors,
    model_lambda_norm,
    round12,
    to_unit_interval,
)
from .errors import ConfigError, InvalidArgument, SpectralBanditsError
from .graph import (
    gen_barabasi_albert,
    gen_erdos_renyi,
    gen_lattice,
    knn_graph,
    laplacian,
    load_edge_list,
)
from .policies import (
    EliminatorConfig,
    UcbConfig,
    run_spectral_eliminator,
    run_spectral_ucb,
)
from .spectral import (
    eigendecompose,
    effective_dimension,
    flat_spectrum,
    regularize,
    truncate_basis,
)

SUMMARY_HEADER = ("policy", "replicates", "mean_final_regret", "std_final_regret", "mean_runtime_ms")
EFFDIM_HEADER = ("T", "d")
POLICY_KINDS = ("spectral_ucb", "lin_ucb", "spectral_eliminator", "linear_eliminator")
DEFAULT_LAMBDA = {
    "spectral_ucb": 0.01,
    "lin_ucb": 1.0,
    "spectral_eliminator": 0.01,
    "linear_eliminator": 1.0,
}
JOBS_ENV = "SPECTRAL_BANDITS_JOBS"


class StageError(SpectralBanditsError):
    """A component failed while an experiment was being set up or run."""

    def __init__(self, stage, exc):
        self.stage = stage
        self.cause = exc
        super().__init__(f"{stage} stage failed: {exc}")


# -- graph specs --------------------------------------------------------------

_GRAPH_PARAMS = {
    "ba": {"n": int, "m": int, "seed": int},
    "er": {"n": int, "p": float, "seed": int},
    "lattice": {"side": int, "dims": int, "seed": int},
    "file": {"path": str},
    "knn": {"path": str, "k": int},
}
_GRAPH_REQUIRED = {
    "ba": ("n", "m"),
    "er": ("n", "p"),
    "lattice": ("side", "dims"),
    "file": ("path",),
    "knn": ("path", "k"),
}


@dataclass(frozen=True)
class GraphSpec:
    """A generator name plus parameters, written ``kind:key=value,...``."""

    kind: str
    params: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "GraphSpec":
        kind, _, rest = text.strip().partition(":")
        kind = kind.strip().lower()
        if kind not in _GRAPH_PARAMS:
            raise ConfigError(f"unknown graph kind {kind!r}; expected one of {sorted(_GRAPH_PARAMS)}")
        types = _GRAPH_PARAMS[kind]
        params = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in types:
                raise ConfigError(f"bad parameter {item!r} for graph kind {kind!r}")
            try:
                params[key] = types[key](value.strip())
            except ValueError:
                raise ConfigError(f"graph parameter {key}={value!r} is not a valid {types[key].__name__}") from None
        missing = [k for k in _GRAPH_REQUIRED[kind] if k not in params]
        if missing:
            raise ConfigError(f"graph kind {kind!r} needs {', '.join(missing)}")
        return cls(kind, tuple(sorted(params.items())))

    def __str__(self):
        body = ",".join(f"{k}={_fmt_value(v)}" for k, v in self.params)
        return f"{self.kind}:{body}"

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    def build(self, base_dir="."):
        p = dict(self.params)
        seed = p.get("seed", 0)
        if self.kind == "ba":
            return gen_barabasi_albert(p["n"], p["m"], seed)
        if self.kind == "er":
            return gen_erdos_renyi(p["n"], p["p"], seed)
        if self.kind == "lattice":
            return gen_lattice(p["side"], p["dims"], seed)
        path = os.path.join(base_dir, p["path"])
        if self.kind == "file":
            return load_edge_list(path)
        return knn_graph(load_latent_vectors(path), p["k"])


def _fmt_value(v):
    return repr(v) if isinstance(v, float) else str(v)


# -- experiment config --------------------------------------------------------

@dataclass(frozen=True)
class RewardSpec:
    kind: str = "sparse"
    k: int = 5
    seed: int = 0
    noise: float = 0.01
    unit_interval: bool = False
    items: str | None = None
    user: tuple | None = None


@dataclass(frozen=True)
class PolicySpec:
    """One policy of an experiment.

    ``c_bound`` is ``"auto"`` (the true norm of the reward under this
    policy's regularizer), ``"log_t"`` or a nonnegative number.
    """

    label: str
    kind: str
    lambda_reg: float
    delta: float = 0.001
    r_noise: float = 0.01
    c_bound: object = "auto"
    basis_size: int = 0
    lazy: bool = False
    dimension: str = "effective"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"policy {self.label!r}: unknown kind {self.kind!r}")
        if not self.label or any(c in self.label for c in " /\\,"):
            raise ConfigError(f"policy label {self.label!r} must be nonempty without spaces, commas or slashes")
        if not (self.lambda_reg > 0 and math.isfinite(self.lambda_reg)):
            raise ConfigError(f"policy {self.label!r}: lambda must be positive")
        if not 0 < self.delta < 1:
            raise ConfigError(f"policy {self.label!r}: delta must lie in (0, 1)")
        if self.r_noise < 0:
            raise ConfigError(f"policy {self.label!r}: r_noise must be >= 0")
        if isinstance(self.c_bound, str):
            if self.c_bound not in ("auto", "log_t"):
                raise ConfigError(f"policy {self.label!r}: c_bound must be auto, log_t or a number")
            if self.c_bound == "log_t" and self.kind.endswith("eliminator"):
                raise ConfigError(f"policy {self.label!r}: log_t applies to UCB policies only")
        elif not self.c_bound >= 0:
            raise ConfigError(f"policy {self.label!r}: c_bound must be >= 0")
        if self.basis_size < 0:
            raise ConfigError(f"policy {self.label!r}: basis_size must be >= 0")
        if self.dimension not in ("effective", "ambient"):
            raise ConfigError(f"policy {self.label!r}: dimension must be effective or ambient")

    @property
    def spectral(self) -> bool:
        return self.kind.startswith("spectral")


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSpec
    reward: RewardSpec = field(default_factory=RewardSpec)
    policies: tuple = ()
    horizon: int = 250
    replicates: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if self.base_seed < 0:
            raise ConfigError(f"base_seed must be >= 0, got {self.base_seed}")
        if not self.policies:
            raise ConfigError("at least one [policy:<label>] section is required")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigError("policy labels must be unique")
        r = self.reward
        if r.kind not in ("sparse", "latent"):
            raise ConfigError(f"reward kind must be sparse or latent, got {r.kind!r}")
        if r.kind == "sparse" and r.k < 1:
            raise ConfigError(f"reward k must be >= 1, got {r.k}")
        if r.kind == "latent" and (not r.items or not r.user):
            raise ConfigError("latent rewards need items and user")
        if not r.noise >= 0:
            raise ConfigError("reward noise must be >= 0")


def _get(section, key, conv, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"[{section.name}] missing {key}")
        return default
    raw = section[key]
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is invalid") from None


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _c_bound(text):
    text = text.strip()
    return text if text in ("auto", "log_t") else float(text)


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from None
    known = {"experiment", "graph", "reward"}
    for name in parser.sections():
        if name not in known and not name.startswith("policy:"):
            raise ConfigError(f"unknown section [{name}]")
    for name in ("experiment", "graph"):
        if name not in parser:
            raise ConfigError(f"missing [{name}] section")
    exp = parser["experiment"]
    graph = GraphSpec.parse(_get(parser["graph"], "spec", str))
    reward = RewardSpec()
    if "reward" in parser:
        sec = parser["reward"]
        user = sec.get("user")
        reward = RewardSpec(
            kind=_get(sec, "kind", str, "sparse"),
            k=_get(sec, "k", int, 5),
            seed=_get(sec, "seed", int, 0),
            noise=_get(sec, "noise", float, 0.01),
            unit_interval=_get(sec, "unit_interval", _bool, False),
            items=sec.get("items"),
            user=None if user is None else _get(sec, "user", lambda s: tuple(float(x) for x in s.split())),
        )
    policies = []
    for name in parser.sections():
        if not name.startswith("policy:"):
            continue
        sec = parser[name]
        kind = _get(sec, "kind", str)
        if kind not in POLICY_KINDS:
            raise ConfigError(f"[{name}] unknown kind {kind!r}")
        policies.append(
            PolicySpec(
                label=name.partition(":")[2].strip(),
                kind=kind,
                lambda_reg=_get(sec, "lambda", float, DEFAULT_LAMBDA[kind]),
                delta=_get(sec, "delta", float, 0.001),
                r_noise=_get(sec, "r_noise", float, 0.01),
                c_bound=_get(sec, "c_bound", _c_bound, "auto"),
                basis_size=_get(sec, "basis_size", int, 0),
                lazy=_get(sec, "lazy", _bool, False),
                dimension=_get(sec, "dimension", str, "effective"),
            )
        )
    return ExperimentConfig(
        graph=graph,
        reward=reward,
        policies=tuple(policies),
        horizon=_get(exp, "horizon", int),
        replicates=_get(exp, "replicates", int, 1),
        base_seed=_get(exp, "base_seed", int, 0),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def serialize_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser["experiment"] = {
        "horizon": str(cfg.horizon),
        "replicates": str(cfg.replicates),
        "base_seed": str(cfg.base_seed),
    }
    parser["graph"] = {"spec": str(cfg.graph)}
    r = cfg.reward
    reward = {
        "kind": r.kind,
        "k": str(r.k),
        "seed": str(r.seed),
        "noise": repr(r.noise),
        "unit_interval": str(r.unit_interval).lower(),
    }
    if r.items is not None:
        reward["items"] = r.items
    if r.user is not None:
        reward["user"] = " ".join(repr(x) for x in r.user)
    parser["reward"] = reward
    for p in cfg.policies:
        parser[f"policy:{p.label}"] = {
            "kind": p.kind,
            "lambda": repr(p.lambda_reg),
            "delta": repr(p.delta),
            "r_noise": repr(p.r_noise),
            "c_bound": p.c_bound if isinstance(p.c_bound, str) else repr(float(p.c_bound)),
            "basis_size": str(p.basis_size),
            "lazy": str(p.lazy).lower(),
            "dimension": p.dimension,
        }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# -- execution ----------------------------------------------------------------

def replicate_rng(base_seed: int, i: int):
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(i,)))


@dataclass
class _Context:
    """Everything a run needs; built once per experiment and shipped to workers."""

    basis: object
    model: object
    noise: NoiseModel
    horizon: int
    base_seed: int
    plans: dict


@dataclass(frozen=True)
class SummaryRow:
    policy: str
    replicates: int
    mean_final_regret: float
    std_final_regret: float
    mean_runtime_ms: float

    def cells(self):
        return (
            self.policy,
            str(self.replicates),
            fmt12(self.mean_final_regret),
            fmt12(self.std_final_regret),
            f"{self.mean_runtime_ms:.3f}",
        )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    traces: dict
    runtimes_ms: dict
    summary: list
    curves: dict
    meta: dict = field(default_factory=dict)


def _plan_policy(p: PolicySpec, basis, model, horizon):
    """Resolve basis, spectrum and run config for one policy."""
    b = basis if p.basis_size in (0, basis.dim) else truncate_basis(basis, min(p.basis_size, basis.dim))
    spec = regularize(b, p.lambda_reg) if p.spectral else flat_spectrum(b.dim, p.lambda_reg)
    c_bound = p.c_bound
    if c_bound == "auto":
        c_bound = model_lambda_norm(model, b, spec)
    if p.kind.endswith("eliminator"):
        cfg = EliminatorConfig.build(b.n, horizon, p.r_noise, p.delta, c_bound)
    elif c_bound == "log_t":
        cfg = UcbConfig.build(
            spec, horizon, p.r_noise, p.delta, lazy=p.lazy, c_schedule="log_t", dimension=p.dimension
        )
    else:
        cfg = UcbConfig.build(
            spec, horizon, p.r_noise, p.delta, float(c_bound), lazy=p.lazy, dimension=p.dimension
        )
    return b, spec, cfg


def _run_one(ctx: _Context, label: str, i: int):
    b, spec, cfg = ctx.plans[label]
    rng = replicate_rng(ctx.base_seed, i)
    seed = ctx.base_seed + i
    start = time.perf_counter()
    if isinstance(cfg, EliminatorConfig):
        trace = run_spectral_eliminator(b, spec, ctx.model, ctx.noise, cfg, rng, seed)
    else:
        trace = run_spectral_ucb(b, spec, ctx.model, ctx.noise, cfg, rng, seed)
    return trace, 1000.0 * (time.perf_counter() - start)


_WORKER_CTX = None


def _init_worker(ctx):
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _run_in_worker(task):
    return _run_one(_WORKER_CTX, *task)


def build_reward(cfg: ExperimentConfig, basis, base_dir="."):
    r = cfg.reward
    if r.kind == "sparse":
        model = gen_sparse_smooth_reward(basis, r.k, r.seed)
    else:
        items = load_latent_vectors(os.path.join(base_dir, r.items))
        if items.shape[0] != basis.n:
            raise InvalidArgument(f"{items.shape[0]} item vectors for a graph with {basis.n} nodes")
        model = latent_reward_model(basis, items, np.array(r.user))
    if r.unit_interval:
        model = to_unit_interval(model, basis)
    return model


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs=1, base_dir=".", plots=False) -> ExperimentResult:
    """Build graph, basis and reward once, then run every policy x replicate."""
    stage = "graph"
    try:
        graph = cfg.graph.build(base_dir)
        stage = "basis"
        sizes = [p.basis_size for p in cfg.policies]
        n_comp = None if 0 in sizes else min(max(sizes), graph.n)
        t0 = time.perf_counter()
        basis = eigendecompose(laplacian(graph), n_comp)
        decomp_ms = 1000.0 * (time.perf_counter() - t0)
        stage = "reward"
        model = build_reward(cfg, basis, base_dir)
        stage = "policy setup"
        plans = {p.label: _plan_policy(p, basis, model, cfg.horizon) for p in cfg.policies}
    except SpectralBanditsError as exc:
        raise StageError(stage, exc) from exc
    except OSError as exc:
        raise StageError(stage, exc) from exc

    ctx = _Context(basis, model, NoiseModel(cfg.reward.noise), cfg.horizon, cfg.base_seed, plans)
    tasks = [(p.label, i) for p in cfg.policies for i in range(cfg.replicates)]
    try:
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(ctx,)) as ex:
                results = list(ex.map(_run_in_worker, tasks))
        else:
            results = [_run_one(ctx, *task) for task in tasks]
    except SpectralBanditsError as exc:
        raise StageError("run", exc) from exc

    traces, runtimes = {}, {}
    for (label, _i), (trace, ms) in zip(tasks, results):
        traces.setdefault(label, []).append(trace)
        runtimes.setdefault(label, []).append(ms)
    summary = [summarize(label, traces[label], runtimes[label]) for label in traces]
    curves = {label: mean_curve(traces[label]) for label in traces}
    meta = {
        "n_nodes": graph.n,
        "n_edges": graph.n_edges,
        "decomposition_ms": decomp_ms,
        "best_node": model.best_node,
        "c_coeff": {k: getattr(v[2], "c_coeff", getattr(v[2], "beta", None)) for k, v in plans.items()},
    }
    result = ExperimentResult(cfg, traces, runtimes, summary, curves, meta)
    if out_dir is not None:
        write_outputs(result, out_dir, plots=plots)
    return result


def summarize(label, traces, runtimes_ms) -> SummaryRow:
    """Statistics of the 12-digit final regrets, as a reader of the traces sees them.

    The standard deviation is the sample one (``ddof=1``), 0 for one replicate.
    """
    finals = [round12(t.final_regret) for t in traces]
    std = statistics.stdev(finals) if len(finals) > 1 else 0.0
    return SummaryRow(label, len(finals), statistics.fmean(finals), std, statistics.fmean(runtimes_ms))


def mean_curve(traces) -> np.ndarray:
    return np.mean(np.array([[round12(x) for x in t.cum_regret] for t in traces]), axis=0)


def write_outputs(result: ExperimentResult, out_dir, plots=False) -> list:
    """Write traces, ``summary.csv``, ``curves.csv`` and the resolved config."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for label, traces in result.traces.items():
        for i, trace in enumerate(traces):
            path = os.path.join(out_dir, f"trace_{label}_{i}.csv")
            trace.to_csv(path)
            written.append(path)
    path = os.path.join(out_dir, "summary.csv")
    write_summary(result.summary, path)
    written.append(path)
    path = os.path.join(out_dir, "curves.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        labels = list(result.curves)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *labels])
        for t in range(result.config.horizon):
            w.writerow([t + 1, *(fmt12(result.curves[k][t]) for k in labels)])
    written.append(path)
    path = os.path.join(out_dir, "config.cfg")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(result.config))
    written.append(path)
    if plots:
        from .plotting import plot_regret_curves

        path = os.path.join(out_dir, "regret.png")
        plot_regret_curves(result.curves, path)
        written.append(path)
    return written


def write_summary(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(r.cells() for r in rows)


def read_summary(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != SUMMARY_HEADER:
            raise ConfigError(f"{path}: not a summary file (header {header!r})")
        rows = []
        for row in reader:
            try:
                rows.append(SummaryRow(row[0], int(row[1]), float(row[2]), float(row[3]), float(row[4])))
            except (ValueError, IndexError):
                raise ConfigError(f"{path}: malformed row {row!r}") from None
    return rows


def recompute_summary(out_dir, label, replicates) -> SummaryRow:
    """Summary of ``label`` rebuilt from its trace files (runtime left at 0)."""
    traces = [RegretTrace.from_csv(os.path.join(out_dir, f"trace_{label}_{i}.csv")) for i in range(replicates)]
    return summarize(label, traces, [0.0])


def ranking(rows) -> list:
    """Rows sorted by mean final regret, best first; ties keep config order."""
    return sorted(rows, key=lambda r: r.mean_final_regret)


# -- effective dimension ------------------------------------------------------

def effdim_report(graph_spec, lambda_reg=0.01, t_max=250, t_min=1, base_dir=".") -> list:
    """``(T, d)`` for every ``T`` in ``t_min..t_max``."""
    if isinstance(graph_spec, str):
        graph_spec = GraphSpec.parse(graph_spec)
    if not 1 <= t_min <= t_max:
        raise InvalidArgument(f"need 1 <= tmin <= tmax, got {t_min}, {t_max}")
    graph = graph_spec.build(base_dir)
    spec = regularize(eigendecompose(laplacian(graph)), lambda_reg)
    return [(t, effective_dimension(spec, t).d) for t in range(t_min, t_max + 1)]


def write_effdim(rows, sink) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EFFDIM_HEADER)
        w.writerows(rows)

    if hasattr(sink, "write"):
        emit(sink)
    else:
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            emit(fh)


def default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV)
    if raw is None or not raw.strip():
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise ConfigError(f"{JOBS_ENV}={raw!r} is not an integer") from None
    if jobs < 1:
        raise ConfigError(f"{JOBS_ENV} must be >= 1, got {jobs}")
    return jobs
