"""Command-line interface: validation, batch recommendations, evaluation,
the HTTP service, and the kernel benchmark."""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from .errors import FsdiagError
from .recommenders import DEFAULT_RATIO, RecommendConfig, recommend_learners, recommend_shots
from .session import validate_session_inputs
from .solver import SelectionProblem, SolverConfig, solve_relaxed
from .store import load_manifest


def _load_config(path: str | None) -> RecommendConfig:
    if not path:
        return RecommendConfig()
    data = json.loads(Path(path).read_text())
    return RecommendConfig(
        solver=SolverConfig.from_dict(data),
        alpha_max_source=data.get("alpha_max_source", "d_matrix"),
    )


def _open_session(manifest_path: str, seed: int):
    manifest = load_manifest(manifest_path)
    return validate_session_inputs(manifest, base_seed=seed)


@click.group()
def main():
    """Diagnose and tune ensemble few-shot classifiers."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
def validate(manifest):
    """Validate a manifest and all files it references."""
    try:
        session = _open_session(manifest, 0)
    except FsdiagError as exc:
        click.echo(f"INVALID [{exc.code}]: {exc}", err=True)
        sys.exit(1)
    m = session.manifest
    click.echo(
        f"OK: {m.num_samples} samples, {m.num_classes} classes, "
        f"{len(m.learner_entries)} learners, {len(session.shots)} shots"
        + (", ground truth present" if session.bundle.ground_truth is not None else "")
    )


@main.command("recommend-learners")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--ratio", default=DEFAULT_RATIO, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def recommend_learners_cmd(manifest, seed, ratio, config_path):
    """Recommend a sparse learner subset."""
    session = _open_session(manifest, seed)
    rec = recommend_learners(session, ratio=ratio, seed=seed, config=_load_config(config_path))
    click.echo(
        json.dumps(
            {
                "selected_learner_ids": rec.selected_learner_ids,
                "objective": rec.objective,
                "diversity_before": rec.diversity_before,
                "diversity_after": rec.diversity_after,
                "cooperation_before": rec.cooperation_before,
                "cooperation_after": rec.cooperation_after,
                "seed": rec.seed,
                "converged": rec.converged,
            },
            indent=2,
        )
    )


@main.command("recommend-shots")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--budget", required=True, type=int)
@click.option("--ratio", default=DEFAULT_RATIO, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--learners", default="all", show_default=True,
              help="comma-separated learner ids to select, or 'all'")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def recommend_shots_cmd(manifest, budget, ratio, seed, learners, config_path):
    """Recommend shots to add/remove under a budget."""
    session = _open_session(manifest, seed)
    wanted = None if learners == "all" else set(learners.split(","))
    for state in session.learners:
        state.selected = wanted is None or state.learner_id in wanted
    rec = recommend_shots(session, budget=budget, ratio=ratio, seed=seed,
                          config=_load_config(config_path))
    click.echo(
        json.dumps(
            {
                "recommended": rec.recommended_sample_indices,
                "to_add": rec.to_add,
                "to_remove": rec.to_remove,
                "objective": rec.objective,
                "seed": rec.seed,
                "converged": rec.converged,
            },
            indent=2,
        )
    )


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--learners", default="all", show_default=True)
@click.option("--out", type=click.Path(), default=None, help="write predictions CSV")
def predict(manifest, seed, learners, out):
    """Ensemble predictions (and accuracy when ground truth is present)."""
    session = _open_session(manifest, seed)
    wanted = None if learners == "all" else set(learners.split(","))
    for state in session.learners:
        state.selected = wanted is None or state.learner_id in wanted
    probs = session.table().ensemble_probs()
    margins = session.table().ensemble_margins()
    args = probs.argmax(axis=1)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("sample,predicted_class,margin\n")
            for i in range(len(args)):
                fh.write(f"{i},{int(args[i])},{margins[i]:.6f}\n")
        click.echo(f"wrote {out}")
    acc = session.accuracy()
    summary = {"samples": int(len(args)), "mean_margin": float(margins.mean())}
    if acc is not None:
        summary["accuracy"] = acc
    click.echo(json.dumps(summary, indent=2))


@main.command("eval")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--trials", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--ratio", default=0.4, show_default=True, help="shot-recommendation sampling ratio")
@click.option("--budget", default=None, type=int, help="shot budget (default: initial count)")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def eval_cmd(manifest, trials, seed, ratio, budget, config_path):
    """Four-arm comparison: baseline, rec-learners, rec-shots, both."""
    from .evalharness import EvalProtocol, run_eval

    session = _open_session(manifest, seed)
    if session.bundle.ground_truth is None:
        click.echo("ERROR: evaluation requires ground truth", err=True)
        sys.exit(1)
    protocol = EvalProtocol(
        trials=trials,
        base_seed=seed,
        shot_ratio=ratio,
        shot_budget=budget,
        recommend=_load_config(config_path),
    )
    report = run_eval(session.bundle, protocol)
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command()
@click.option("--port", default=8017, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", type=click.Path(), default=None,
              help="directory of static UI assets to serve at /")
def serve(port, host, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(ui_dir=ui_dir), host=host, port=port)


@main.command("make-data")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--samples", default=500, show_default=True)
@click.option("--classes", default=5, show_default=True)
@click.option("--learners", default=24, show_default=True)
@click.option("--corrupted", default=6, show_default=True)
def make_data(out, seed, samples, classes, learners, corrupted):
    """Generate a synthetic dataset on disk (manifest + features + labels)."""
    from .synthetic import generate_pool, write_dataset

    pool = generate_pool(
        seed=seed,
        n_samples=samples,
        n_classes=classes,
        n_learners=learners,
        n_corrupted=corrupted,
    )
    path = write_dataset(pool, out)
    click.echo(f"wrote {path} (corrupted learners: {sorted(pool.corrupted_ids)}, "
               f"mislabeled shots at samples {pool.mislabeled_samples})")


@main.command()
@click.option("--sizes", default="100x200,400x400,1000x1000", show_default=True,
              help="comma-separated IxJ problem sizes")
@click.option("--iters", default=50, show_default=True)
def bench(sizes, iters):
    """Benchmark the compiled solver kernels against the NumPy fallback."""
    from . import kernels, kernels_numpy

    click.echo(f"active backend: {kernels.BACKEND}")
    if kernels.BACKEND == "numpy":
        click.echo("compiled extension not available; timing fallback only")
    header = f"{'size':>12} {'backend':>8} {'ms/iter':>10} {'speedup':>8}"
    click.echo(header)
    click.echo("-" * len(header))
    rng = np.random.default_rng(0)
    for spec in sizes.split(","):
        i_dim, j_dim = (int(x) for x in spec.lower().split("x"))
        d = rng.uniform(size=(i_dim, j_dim))
        w = rng.uniform(0, 0.2, size=i_dim)
        times = {}
        for name, impl in (("cython", kernels), ("numpy", kernels_numpy)):
            if name == "cython" and kernels.BACKEND != "cython":
                continue
            z = np.full((i_dim, j_dim), 1.0 / i_dim)
            c = z.copy()
            u = np.zeros((i_dim, j_dim))
            t = w.copy()
            impl.admm_step(d, z, c, u, t, 1.0)  # warm-up
            t0 = time.perf_counter()
            for _ in range(iters):
                impl.admm_step(d, z, c, u, t, 1.0)
            times[name] = (time.perf_counter() - t0) / iters * 1000
        for name, ms in times.items():
            speedup = times["numpy"] / ms if "numpy" in times and ms > 0 else 1.0
            click.echo(f"{spec:>12} {name:>8} {ms:>10.2f} {speedup:>7.1f}x")
    # End-to-end solve comparison on the largest size
    i_dim, j_dim = (int(x) for x in sizes.split(",")[-1].lower().split("x"))
    d = rng.uniform(size=(i_dim, j_dim))
    w = rng.uniform(0, 0.2, size=i_dim)
    prob = SelectionProblem(d, w)
    cfg = SolverConfig(max_iters=iters, tol=0.0)
    t0 = time.perf_counter()
    solve_relaxed(prob, cfg)
    click.echo(
        f"full solve {i_dim}x{j_dim}, {iters} iters ({kernels.BACKEND}): "
        f"{time.perf_counter() - t0:.2f}s"
    )


if __name__ == "__main__":
    main()
