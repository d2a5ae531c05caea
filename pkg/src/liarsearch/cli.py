"""Command-line front end.

Commands: bounds, search, sort, verify, oracle.  All outputs are
byte-deterministic for a fixed configuration; floats are serialized with 17
significant digits.  When an output directory is given, the report path
writes the delimited data and renders companion figures next to it.

Exit codes: 0 ok, 1 usage error, 2 invariant violation, 3 resource guard.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .errors import (
    DistributionError,
    DomainError,
    InvariantViolation,
    LiarSearchError,
    ResourceBudgetExceeded,
)
from .numerics import (
    OLOG_SHIFT,
    RADIUS_GROWTH_CONSTANT,
    RPRIME_GROWTH_CONSTANT,
    RPRIME_LINEAR_CONSTANT,
    UB_SLACK,
    ProbabilityVector,
    bounds_report,
    load_distribution,
)
from . import experiments as ex

SEARCH_COLUMNS = ("trial", "questions", "lies", "output_correct",
                  "max_depth", "jump_backs", "V")
SORT_COLUMNS = ("trial", "comparisons", "lies_used", "correct")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _load_dist(dist, gen) -> ProbabilityVector:
    if (dist is None) == (gen is None):
        raise click.UsageError("provide exactly one of --dist or --gen")
    return load_distribution(dist) if dist else ex.parse_gen(gen)


def _write_rows(out_dir: Path, stem: str, fmt: str, columns, rows) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out_dir / f"{stem}.json"
        payload = [dict(zip(columns, map(_fmt, row))) for row in rows]
        path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
        return path
    path = out_dir / f"{stem}.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows([[_fmt(v) for v in row] for row in rows])
    return path


@click.group()
def cli():
    """Distributional comparison search and sorting under adversarial lies."""


@cli.command()
@click.option("--dist", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Distribution JSON file.")
@click.option("--gen", default=None,
              help="Generator spec: uniform:N | dyadic:N | geometric:N,P.")
@click.option("-k", "k", type=int, default=0, show_default=True,
              help="Lie budget the bounds refer to.")
@click.option("--prior-file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Mismatched placement prior (reports the KL term).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
def bounds(dist, gen, k, prior_file, out_dir, fmt):
    """Print every entropy functional and cost bound for a distribution."""
    mu = _load_dist(dist, gen)
    eta = load_distribution(prior_file) if prior_file else None
    rep = bounds_report(mu, k, eta=eta)
    lines = [
        ("n", len(mu)),
        ("k", k),
        ("entropy", rep.entropy),
        ("h2", rep.h2),
        ("h3", rep.h3),
        ("lower_bound_raw", "undefined" if rep.lower_bound_raw is None
         else rep.lower_bound_raw),
        ("lower_bound_clamped", rep.lower_bound),
        ("ub_algo1", rep.ub_algo1),
        ("ub_algo2", rep.ub_algo2),
    ]
    if rep.kl_divergence is not None:
        lines.append(("kl_divergence", rep.kl_divergence))
    lines += [
        ("const_olog_shift", OLOG_SHIFT),
        ("const_ub_slack", UB_SLACK),
        ("const_radius_growth", RADIUS_GROWTH_CONSTANT),
        ("const_rprime_growth", RPRIME_GROWTH_CONSTANT),
        ("const_rprime_linear", RPRIME_LINEAR_CONSTANT),
    ]
    for name, value in lines:
        click.echo(f"{name} = {_fmt(value) if not isinstance(value, str) else value}")
    if out_dir:
        out = Path(out_dir)
        path = _write_rows(out, "bounds", fmt, ("name", "value"),
                           [(n, v) for n, v in lines])
        from .plotting import save_bounds_figure

        fig = save_bounds_figure(rep, k, out / "bounds.png",
                                 title=f"cost bounds, n={len(mu)}, k={k}")
        click.echo(f"wrote {path} and {fig}")


@cli.command()
@click.option("--dist", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--gen", default=None)
@click.option("--algo", type=click.Choice(["1", "2"]), default="2", show_default=True,
              help="1 = checkpointed search, 2 = backtracking search.")
@click.option("-k", "k", type=int, default=1, show_default=True)
@click.option("--adversary", default="truthful", show_default=True,
              help="truthful | schedule:1,5,9 | random-alpha[:seed=N]")
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--prior-file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Build the placement from this prior instead of mu.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
def search(dist, gen, algo, k, adversary, trials, seed, prior_file, workers,
           out_dir, fmt):
    """Run search trials against a configured adversary."""
    mu = _load_dist(dist, gen)
    eta = load_distribution(prior_file) if prior_file else None
    cfg = ex.SearchConfig(mu=mu, algo=algo, k=k, adversary=adversary,
                          trials=trials, seed=seed, eta=eta, workers=workers)
    rows, summary = ex.run_search_trials(cfg)
    click.echo(f"# algo={algo} k={k} adversary={adversary} trials={trials} "
               f"seed={seed} (trial seed = seed XOR trial)")
    click.echo(f"mean_questions = {_fmt(summary.mean_questions)}")
    click.echo(f"std_questions = {_fmt(summary.std_questions)}")
    click.echo(f"min = {summary.min_questions}  max = {summary.max_questions}")
    click.echo(f"mean_lies = {_fmt(summary.mean_lies)}")
    click.echo(f"all_correct = {summary.all_correct}")
    if not summary.all_correct:
        raise InvariantViolation("a trial produced a wrong output")
    if out_dir:
        out = Path(out_dir)
        data = [(r.trial, r.questions, r.lies, r.output_correct, r.max_depth,
                 r.jump_backs, r.verify_pairs) for r in rows]
        path = _write_rows(out, "search_trials", fmt, SEARCH_COLUMNS, data)
        rep = bounds_report(mu, k)
        from .plotting import save_histogram

        fig = save_histogram(
            [r.questions for r in rows], out / "search_questions.png",
            title=f"questions per trial (algo {algo}, k={k})",
            xlabel="questions",
            vlines={"H": rep.entropy, "lower bound": rep.lower_bound,
                    "mean": summary.mean_questions})
        click.echo(f"wrote {path} and {fig}")


@cli.command("sort")
@click.option("--n", "n", type=int, required=True, help="Number of items to sort.")
@click.option("-k", "k", type=int, default=1, show_default=True)
@click.option("--prior", default="uniform", show_default=True,
              help="uniform | mallows:Q (exact rational Q)")
@click.option("--adversary", default="random-schedule", show_default=True,
              help="truthful | schedule:... | random-schedule")
@click.option("--trials", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--inputs", type=click.Choice(["shuffle", "identity", "reverse",
                                             "prior"]),
              default="shuffle", show_default=True,
              help="How the true ordering of each trial is drawn.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
def sort_cmd(n, k, prior, adversary, trials, seed, inputs, workers, out_dir, fmt):
    """Run lie-resilient insertion-sort trials."""
    from .sorting import parse_prior, permutation_entropy

    cfg = ex.SortConfig(n=n, k=k, prior_spec=prior, adversary=adversary,
                        trials=trials, seed=seed, workers=workers, inputs=inputs)
    rows, summary = ex.run_sort_trials(cfg)
    h_pi = permutation_entropy(parse_prior(prior), n)
    click.echo(f"# sort n={n} k={k} prior={prior} adversary={adversary} "
               f"trials={trials} seed={seed}")
    click.echo(f"permutation_entropy = {_fmt(h_pi)}")
    click.echo(f"mean_comparisons = {_fmt(summary.mean_questions)}")
    click.echo(f"all_correct = {summary.all_correct}")
    if not summary.all_correct:
        raise InvariantViolation("a sort trial produced a wrong ordering")
    if out_dir:
        out = Path(out_dir)
        data = [(r.trial, r.comparisons, r.lies_used, r.correct) for r in rows]
        path = _write_rows(out, "sort_trials", fmt, SORT_COLUMNS, data)
        from .plotting import save_histogram

        fig = save_histogram(
            [r.comparisons for r in rows], out / "sort_comparisons.png",
            title=f"comparisons per sort (n={n}, k={k}, {prior})",
            xlabel="comparisons",
            vlines={"H(perm)": h_pi, "mean": summary.mean_questions})
        click.echo(f"wrote {path} and {fig}")


@cli.command()
@click.option("--dist", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--gen", default=None)
@click.option("--algo", type=click.Choice(["1", "2"]), default="2", show_default=True)
@click.option("-k", "k", type=int, default=1, show_default=True)
@click.option("--trials", "seeds", type=int, default=5, show_default=True,
              help="Number of placement seeds to sweep.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--fork-budget", type=int, default=ex.DEFAULT_STATE_BUDGET,
              show_default=True)
@click.option("--negative-control", is_flag=True,
              help="Weaken the verification gates; violations are expected.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
def verify(dist, gen, algo, k, seeds, seed, workers, fork_budget,
           negative_control, out_dir, fmt):
    """Exhaustive validity sweep over every lie placement.

    Exit status 2 when any branch outputs the wrong element or any promised
    guarantee fails (unless --negative-control, where violations mean the
    mutation was caught and the exit status is 0).
    """
    mu = _load_dist(dist, gen)
    seed_list = [ex.trial_seed(seed, t) for t in range(seeds)]
    report = ex.verify_sweep(algo, mu, k, seed_list, workers=workers,
                             state_budget=fork_budget,
                             negative_control=negative_control)
    ok = report.all_valid
    click.echo(f"# verify algo={algo} k={k} n={len(mu)} seeds={seeds}")
    click.echo(f"cases = {len(report.cases)}")
    click.echo(f"worst_case_questions = {report.worst_questions()}")
    click.echo(f"all_valid = {ok}")
    for v in report.violations[:20]:
        click.echo(f"violation: {v}")
    if out_dir:
        out = Path(out_dir)
        data = [(c.seed, c.x, c.max_questions, c.leaves, c.states,
                 c.valid and not c.violations) for c in report.cases]
        path = _write_rows(out, "verify_cases", fmt,
                           ("seed", "x", "max_questions", "leaves", "states", "valid"),
                           data)
        from .plotting import save_worstcase_figure

        fig = save_worstcase_figure(
            report.cases, out / "verify_worstcase.png",
            title=f"exhaustive worst case (algo {algo}, n={len(mu)}, k={k})")
        click.echo(f"wrote {path} and {fig}")
    if negative_control:
        if ok:
            raise InvariantViolation(
                "negative control produced no violations; the sweep is blind")
        click.echo("negative control caught the mutation, as expected")
    elif not ok:
        raise InvariantViolation(f"{len(report.violations)} violations")


@cli.command()
@click.option("--n", "n", type=int, required=True)
@click.option("--k", "k", type=int, required=True)
def oracle(n, k):
    """Brute-force optimum (arbitrary subset questions) and packing threshold."""
    from .oracle import optimal_worst_case, packing_threshold

    click.echo(f"optimal_worst_case = {optimal_worst_case(n, k)}")
    click.echo(f"packing_threshold = {packing_threshold(n, k)}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except (DistributionError, DomainError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except InvariantViolation as exc:
        click.echo(f"invariant violation: {exc}", err=True)
        return 2
    except ResourceBudgetExceeded as exc:
        click.echo(f"resource guard: {exc}", err=True)
        return 3
    except LiarSearchError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
