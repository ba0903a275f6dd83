"""Seeded experiment grids: exact decomposition accuracy, noisy
approximation stability, and the mixture-learning comparison against EM.

Trials run in a worker pool capped by the MOMENTMIX_THREADS environment
variable; per-trial seeds are derived from (base seed, trial index) so
results do not depend on execution order.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import gmm
from .decomposition import (
    approximate,
    choose_params,
    component_error,
    decompose,
    max_rank_quiet,
)
from .numerics import rng_from
from .tensor_store import (
    ComponentList,
    from_components,
    omega_keys,
    perturb,
)

DEFAULT_SEED = 2024


def _pool_size() -> int:
    try:
        return max(1, int(os.environ.get("MOMENTMIX_THREADS", "1")))
    except ValueError:
        return 1


def _map_trials(fn, args_list):
    workers = _pool_size()
    if workers == 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, args_list))


def random_components(d: int, r: int, seed: int) -> np.ndarray:
    """Real Gaussian component vectors, one row per component."""
    return rng_from(seed, "components").standard_normal((r, d))


def _decomp_trial(args):
    d, m, r, seed = args
    comps = random_components(d, r, seed)
    T = from_components(ComponentList(comps), m, omega_keys(d, m))
    params = choose_params(d - 1, m, r, seed=seed)
    try:
        dec = decompose(T, params)
    except Exception as exc:  # aggregate partial failures, keep the grid going
        return {"error": f"{type(exc).__name__}: {exc}"}
    return {
        "decomp_err": dec.diagnostics["decomp_err"],
        "vec_err_max": component_error(comps, dec.components, m),
    }


def run_table2(
    d: int = 15,
    orders: tuple[int, ...] = (3, 4, 5),
    trials: int = 20,
    seed: int = DEFAULT_SEED,
) -> list[dict]:
    rows = []
    for m in orders:
        r, _, _ = max_rank_quiet(d - 1, m)
        results = _map_trials(
            _decomp_trial, [(d, m, r, seed + i) for i in range(trials)]
        )
        rows.append(_summarize_decomp(d, m, r, results))
    return rows


def _summarize_decomp(d, m, r, results):
    errs = [x["decomp_err"] for x in results if "error" not in x]
    vecs = [x["vec_err_max"] for x in results if "error" not in x]
    failed = sum(1 for x in results if "error" in x)
    row = {"d": d, "m": m, "r": r, "trials": len(results), "failed": failed}
    if errs:
        row.update(
            {
                "min": float(np.min(errs)),
                "average": float(np.mean(errs)),
                "max": float(np.max(errs)),
                "vec_err_max": float(np.mean(vecs)),
            }
        )
    return row


def _approx_trial(args):
    d, m, r, epsilon, seed = args
    comps = random_components(d, r, seed)
    T = from_components(ComponentList(comps), m, omega_keys(d, m))
    T_hat = perturb(T, epsilon, seed)
    params = choose_params(d - 1, m, r, seed=seed)
    try:
        dec = approximate(T_hat, params, truth=T)
    except Exception as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}
    return {
        "abs_err": dec.diagnostics["abs_err"],
        "rel_err": dec.diagnostics["rel_err"],
    }


def run_table3(
    d: int = 15,
    orders: tuple[int, ...] = (3, 4),
    epsilons: tuple[float, ...] = (0.1, 0.01, 0.001),
    trials: int = 20,
    seed: int = DEFAULT_SEED,
) -> list[dict]:
    rows = []
    for m in orders:
        r, _, _ = max_rank_quiet(d - 1, m)
        for epsilon in epsilons:
            results = _map_trials(
                _approx_trial,
                [(d, m, r, epsilon, seed + i) for i in range(trials)],
            )
            rel = [x["rel_err"] for x in results if "error" not in x]
            ab = [x["abs_err"] for x in results if "error" not in x]
            row = {
                "d": d,
                "m": m,
                "r": r,
                "epsilon": epsilon,
                "trials": len(results),
                "failed": sum(1 for x in results if "error" in x),
            }
            if rel:
                row.update(
                    {
                        "rel_min": float(np.min(rel)),
                        "rel_average": float(np.mean(rel)),
                        "rel_max": float(np.max(rel)),
                        "abs_min": float(np.min(ab)),
                        "abs_average": float(np.mean(ab)),
                        "abs_max": float(np.max(ab)),
                    }
                )
            rows.append(row)
    return rows


def _gmm_trial(args):
    d, m, r, n_samples, seed = args
    model = gmm.random_model(d, r, seed)
    samples = gmm.sample_gmm(model, n_samples, seed)
    try:
        learned = gmm.learn(samples, r, m, seed=seed)
        acc_alg = gmm.accuracy(gmm.classify(learned, samples), samples.labels)
    except Exception as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}
    em = gmm.em_baseline(samples, r, seed=seed)
    acc_em = gmm.accuracy(gmm.classify(em, samples), samples.labels)
    return {"accuracy_alg": acc_alg, "accuracy_em": acc_em}


def run_table4(
    d: int = 15,
    m: int = 3,
    r: int | None = None,
    n_samples: int = 100_000,
    trials: int = 5,
    seed: int = DEFAULT_SEED,
) -> list[dict]:
    if r is None:
        r, _, _ = max_rank_quiet(d - 1, m)
    results = _map_trials(
        _gmm_trial, [(d, m, r, n_samples, seed + i) for i in range(trials)]
    )
    rows = []
    for i, x in enumerate(results):
        row = {"d": d, "m": m, "r": r, "trial": i}
        row.update(x)
        rows.append(row)
    ok = [x for x in results if "error" not in x]
    if ok:
        rows.append(
            {
                "d": d,
                "m": m,
                "r": r,
                "trial": "average",
                "accuracy_alg": float(np.mean([x["accuracy_alg"] for x in ok])),
                "accuracy_em": float(np.mean([x["accuracy_em"] for x in ok])),
            }
        )
    return rows


def format_rows(rows: list[dict], fmt: str) -> str:
    """Render result rows as markdown, CSV, or JSON."""
    if fmt == "json":
        import json

        return json.dumps(rows, indent=1)
    if not rows:
        return ""
    cols: list[str] = []
    for row in rows:
        for c in row:
            if c not in cols:
                cols.append(c)
    out = io.StringIO()
    if fmt == "md":
        out.write("| " + " | ".join(cols) + " |\n")
        out.write("|" + "|".join(["---"] * len(cols)) + "|\n")
        for row in rows:
            out.write(
                "| " + " | ".join(_cell(row.get(c, "")) for c in cols) + " |\n"
            )
    elif fmt == "csv":
        out.write(",".join(cols) + "\n")
        for row in rows:
            out.write(",".join(_cell(row.get(c, "")) for c in cols) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return out.getvalue()


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)
