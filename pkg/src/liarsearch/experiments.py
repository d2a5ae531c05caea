"""Experiment orchestration: generators, trials, exhaustive sweeps, summaries.

Everything here is deterministic given its configuration: trial t derives
its seed as base_seed XOR t, and every random draw comes from a stream
keyed by such a seed.  The sweep helpers run the exhaustive adversary
explorer and check, per completed branch, every guarantee the search
algorithms promise; they are shared by the CLI verify command and the
acceptance suite.
"""

from __future__ import annotations

import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .adversary import (
    DEFAULT_STATE_BUDGET,
    comparison_truth,
    explore_memo,
    explore_tree,
    make_source,
)
from .backtrack import BacktrackSearch
from .checkpoint import CheckpointSearch, count_problematic
from .errors import DomainError, InvariantViolation, SearchNonTermination
from .kernels import CheckpointTables
from .numerics import ProbabilityVector, radius_r, radius_rprime
from .placement import Placement, build_placement

_M64 = (1 << 64) - 1
_ELEMENT_SALT = 0xD1B54A32D192ED03
_ADVERSARY_SALT = 0x9E3779B97F4A7C15


def trial_seed(base: int, trial: int) -> int:
    return (base ^ trial) & _M64


def parse_gen(spec: str) -> ProbabilityVector:
    """uniform:N | dyadic:N | geometric:N,P with P an exact rational."""
    try:
        kind, _, arg = spec.partition(":")
        if kind == "uniform":
            return ProbabilityVector.uniform(int(arg))
        if kind == "dyadic":
            return dyadic_vector(int(arg))
        if kind == "geometric":
            n_str, p_str = arg.split(",")
            return geometric_vector(int(n_str), Fraction(p_str))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"bad generator spec {spec!r}: {exc}")
    raise DomainError(f"unknown generator spec {spec!r}")


def dyadic_vector(n: int) -> ProbabilityVector:
    """(1/2, 1/4, ..., 1/2^(n-1), 1/2^(n-1))."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n == 1:
        return ProbabilityVector(["x1"], [Fraction(1)])
    probs = [Fraction(1, 1 << i) for i in range(1, n)]
    probs.append(Fraction(1, 1 << (n - 1)))
    return ProbabilityVector([f"x{i}" for i in range(1, n + 1)], probs)


def geometric_vector(n: int, p: Fraction) -> ProbabilityVector:
    """Truncated geometric: weights p*(1-p)^(i-1), renormalized exactly."""
    if not 0 < p < 1:
        raise DomainError("geometric parameter must be in (0, 1)")
    return ProbabilityVector.from_weights([p * (1 - p) ** i for i in range(n)])


def draw_element(mu: ProbabilityVector, rng: random.Random) -> int:
    """Draw a 1-based element index; cumulative compare against a 64-bit dyadic."""
    u = Fraction(rng.getrandbits(64), 1 << 64)
    acc = Fraction(0)
    for i, p in enumerate(mu.probs, start=1):
        acc += p
        if u < acc:
            return i
    return len(mu.probs)


# --- per-trial search runs --------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    mu: ProbabilityVector
    algo: str                 # "1" (checkpoint) or "2" (backtrack)
    k: int
    adversary: str
    trials: int
    seed: int
    eta: ProbabilityVector | None = None   # placement prior when != mu
    workers: int = 1


@dataclass(frozen=True)
class SearchRow:
    trial: int
    questions: int
    lies: int
    output_correct: bool
    max_depth: int
    jump_backs: int
    verify_pairs: int


@dataclass(frozen=True)
class Summary:
    mean_questions: float
    std_questions: float
    min_questions: int
    max_questions: int
    mean_lies: float
    all_correct: bool


def _make_runner(algo: str, placement: Placement, k: int):
    if algo == "1":
        return CheckpointSearch(placement, k)
    if algo == "2":
        return BacktrackSearch(placement, k)
    raise DomainError(f"unknown algorithm {algo!r} (use 1 or 2)")


def run_search_trial(cfg: SearchConfig, trial: int) -> SearchRow:
    tseed = trial_seed(cfg.seed, trial)
    placement = build_placement(cfg.eta if cfg.eta is not None else cfg.mu, tseed)
    x = draw_element(cfg.mu, random.Random(tseed ^ _ELEMENT_SALT))
    source = make_source(cfg.adversary, x, cfg.mu, cfg.k, tseed ^ _ADVERSARY_SALT)
    runner = _make_runner(cfg.algo, placement, cfg.k)
    while not runner.done:
        runner.advance(source.answer(runner.query()))
    rep = runner.report(lies_told=source.lies_used)
    return SearchRow(trial, rep.questions, rep.lies_told,
                     rep.output_index == x, rep.max_depth,
                     rep.jump_backs, rep.verify_pairs)


def _search_task(args):
    cfg, lo, hi = args
    return [run_search_trial(cfg, t) for t in range(lo, hi)]


def run_search_trials(cfg: SearchConfig) -> tuple[list[SearchRow], Summary]:
    rows = _parallel_rows(cfg, cfg.trials, _search_task)
    return rows, summarize_search(rows)


def summarize_search(rows: list[SearchRow]) -> Summary:
    if not rows:
        return Summary(0.0, 0.0, 0, 0, 0.0, True)
    qs = [r.questions for r in rows]
    return Summary(
        mean_questions=statistics.fmean(qs),
        std_questions=statistics.pstdev(qs) if len(qs) > 1 else 0.0,
        min_questions=min(qs),
        max_questions=max(qs),
        mean_lies=statistics.fmean(r.lies for r in rows),
        all_correct=all(r.output_correct for r in rows),
    )


def _parallel_rows(cfg, trials: int, task):
    if trials <= 0:
        return []
    workers = max(1, cfg.workers)
    if workers == 1 or trials < 4:
        return task((cfg, 0, trials))
    chunk = math.ceil(trials / workers)
    jobs = [(cfg, lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]
    rows: list = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(task, jobs):
            rows.extend(part)
    rows.sort(key=lambda r: r.trial)
    return rows


# --- per-trial sort runs -----------------------------------------------------

@dataclass(frozen=True)
class SortConfig:
    n: int
    k: int
    prior_spec: str
    adversary: str
    trials: int
    seed: int
    workers: int = 1
    inputs: str = "shuffle"    # shuffle | identity | reverse | prior
    input_prior: str | None = None   # prior for drawing inputs, defaults to prior_spec


@dataclass(frozen=True)
class SortRow:
    trial: int
    comparisons: int
    lies_used: int
    correct: bool


def _true_order_for(cfg: SortConfig, rng: random.Random) -> list[int]:
    from .sorting import parse_prior, sample_ordering

    items = list(range(1, cfg.n + 1))
    if cfg.inputs == "identity":
        return items
    if cfg.inputs == "reverse":
        return items[::-1]
    if cfg.inputs == "prior":
        source_prior = parse_prior(cfg.input_prior or cfg.prior_spec)
        return sample_ordering(source_prior, cfg.n, rng)
    rng.shuffle(items)
    return items


def run_sort_trial(cfg: SortConfig, trial: int) -> SortRow:
    from .adversary import AnswerSource, ScheduledSource, TruthfulSource
    from .sorting import noisy_insertion_sort, parse_prior, sort_truth

    tseed = trial_seed(cfg.seed, trial)
    prior = parse_prior(cfg.prior_spec)
    rng = random.Random(tseed ^ _ELEMENT_SALT)
    order = _true_order_for(cfg, rng)
    truth = sort_truth(order)
    if cfg.adversary == "truthful":
        source: AnswerSource = TruthfulSource(truth, budget=cfg.k)
    elif cfg.adversary.startswith("schedule:"):
        body = cfg.adversary.split(":", 1)[1]
        source = ScheduledSource(truth, [int(s) for s in body.split(",") if s],
                                 cfg.k)
    elif cfg.adversary == "random-schedule":
        # k lie positions among the first ~2n comparisons
        arng = random.Random(tseed ^ _ADVERSARY_SALT)
        horizon = max(2 * cfg.n, 4)
        positions = arng.sample(range(1, horizon + 1), min(cfg.k, horizon))
        source = ScheduledSource(truth, positions, cfg.k)
    else:
        raise DomainError(f"unsupported sort adversary {cfg.adversary!r}")
    result, comparisons = noisy_insertion_sort(cfg.n, cfg.k, prior, tseed, source)
    return SortRow(trial, comparisons, source.lies_used, result == order)


def _sort_task(args):
    cfg, lo, hi = args
    return [run_sort_trial(cfg, t) for t in range(lo, hi)]


def run_sort_trials(cfg: SortConfig) -> tuple[list[SortRow], Summary]:
    rows = _parallel_rows(cfg, cfg.trials, _sort_task)
    qs = [r.comparisons for r in rows]
    summary = Summary(
        mean_questions=statistics.fmean(qs) if qs else 0.0,
        std_questions=statistics.pstdev(qs) if len(qs) > 1 else 0.0,
        min_questions=min(qs) if qs else 0,
        max_questions=max(qs) if qs else 0,
        mean_lies=statistics.fmean(r.lies_used for r in rows) if rows else 0.0,
        all_correct=all(r.correct for r in rows),
    )
    return rows, summary


# --- exhaustive verification sweeps -----------------------------------------

@dataclass
class CaseResult:
    seed: int
    x: int
    max_questions: int
    leaves: int
    states: int
    valid: bool
    violations: list[str] = field(default_factory=list)


@dataclass
class SweepReport:
    cases: list[CaseResult]

    @property
    def all_valid(self) -> bool:
        return all(c.valid and not c.violations for c in self.cases)

    @property
    def violations(self) -> list[str]:
        out = []
        for c in self.cases:
            if not c.valid:
                out.append(f"seed={c.seed} x={c.x}: wrong output on some branch")
            out.extend(f"seed={c.seed} x={c.x}: {v}" for v in c.violations)
        return out

    def worst_questions(self) -> int:
        return max((c.max_questions for c in self.cases), default=0)


def _node_chain(anchor: int, cur: int) -> list[int]:
    span = cur.bit_length() - anchor.bit_length()
    return [cur >> j for j in range(span + 1)]


def _is_lie_node(placement: Placement, x: int, v: int) -> bool:
    parent = v >> 1
    boundary = placement.node_info(parent)[0]
    truthful = 1 if x >= boundary else 0
    return (v & 1) != truthful


def backtrack_problematic(placement: Placement, x: int, k: int, rprime=None):
    """True-path nodes whose next r'(d) path descendants all oppose them."""
    rprime = rprime if rprime is not None else (lambda j: radius_rprime(j, k))
    leaf = placement.leaf_node(x)
    depth = leaf.bit_length() - 1
    bits = [(leaf >> (depth - 1 - j)) & 1 for j in range(depth)]
    out = set()
    for d in range(1, depth + 1):
        r = rprime(d)
        if d + r > depth:
            continue
        mine = bits[d - 1]
        if all(bits[j - 1] != mine for j in range(d + 1, d + r + 1)):
            out.add(leaf >> (depth - d))
    return out


def verify_backtrack_case(mu: ProbabilityVector, k: int, seed: int, x: int, *,
                          state_budget: int = DEFAULT_STATE_BUDGET,
                          accept_eq: int | None = None,
                          fuel: int | None = None,
                          rprime=None, placement=None) -> CaseResult:
    """Exhaustively explore the backtracking search for one (theta, element).

    Checks per branch: correct output, V <= 3k+1, at most k jump-backs atop
    any node, exhaustive jump-back classification, and the question
    decomposition  total <= 2V + D + K'(r'(M)+1) + k * sum_prob (r'(d)+1).
    """
    if placement is None:
        placement = build_placement(mu, seed)
    rp = rprime if rprime is not None else (lambda j: radius_rprime(j, k))
    problematic = backtrack_problematic(placement, x, k, rp)
    prob_term = k * sum(rp(v.bit_length() - 1) + 1 for v in problematic)
    depth_x = placement.leaf_node(x).bit_length() - 1
    violations: list[str] = []
    seen = set()

    def on_leaf(st: BacktrackSearch, lies: int) -> None:
        if st.verify_pairs > 3 * k + 1:
            violations.append(f"V={st.verify_pairs} exceeds 3k+1={3 * k + 1}")
        bad = [v for v, c in st.jump_counts.items() if c > k]
        if bad:
            violations.append(f"node {bad[0]} suffered >{k} jump-backs")
        for entry in st.jump_log:
            if entry in seen:
                continue
            anchor, cur_before, reason, e_idx = entry
            if any(_is_lie_node(placement, x, v)
                   for v in _node_chain(anchor, cur_before)):
                continue  # deletes a lie
            if reason == "verify_fail" and e_idx == x:
                continue  # a lie inside the equality gate of the right element
            if reason == "radius" and anchor in problematic:
                continue  # honest suspicion at a problematic node
            violations.append(
                f"unclassifiable jump-back {entry} with {lies} lies")
        seen.update(st.jump_log)
        m = st.max_depth
        allowance = lies * (rp(m) + 1) if (lies and m >= 1) else 0
        bound = 2 * st.verify_pairs + depth_x + allowance + prob_term
        if st.questions > bound:
            violations.append(
                f"questions {st.questions} exceed decomposition bound {bound}"
                f" (V={st.verify_pairs}, K'={lies}, M={m})")

    try:
        res = explore_tree(
            lambda: BacktrackSearch(placement.clone(), k, rprime=rprime,
                                    accept_eq=accept_eq, fuel=fuel),
            comparison_truth(x), k, x, on_leaf=on_leaf,
            state_budget=state_budget)
    except SearchNonTermination as exc:
        violations.append(f"run did not terminate: {exc}")
        return CaseResult(seed, x, 0, 0, 0, False, violations)
    return CaseResult(seed, x, res.max_questions, res.leaves, res.states,
                      res.all_valid, violations)


def verify_checkpoint_case(mu: ProbabilityVector, k: int, seed: int, x: int, *,
                           state_budget: int = DEFAULT_STATE_BUDGET,
                           advance_matching: int | None = None,
                           fuel: int | None = None,
                           radius=None, use_jit: bool = True,
                           placement=None, tables=None) -> CaseResult:
    """Exhaustively explore the checkpointed search for one (theta, element).

    The checkpoint is asserted to stay on the true path at every explored
    state, and branch totals are checked against
    D + r(D) + F(2k+1) + F' + K'(r(D) + 2k+1).
    """
    if placement is None:
        placement = build_placement(mu, seed)
    rad = radius if radius is not None else (lambda d: radius_r(d, k))
    violations: list[str] = []
    leaf = placement.leaf_node(x)
    depth_x = leaf.bit_length() - 1
    true_nodes = [leaf >> (depth_x - d) for d in range(depth_x + 1)]
    f_count, f_prime = count_problematic(placement, x, k, radius=rad)
    r_d = rad(depth_x)
    budget0 = depth_x + r_d + f_count * (2 * k + 1) + f_prime
    allowance = r_d + 2 * k + 1
    standard = advance_matching is None and radius is None

    def on_state(st: CheckpointSearch, lies: int) -> None:
        if standard and (st.lv_depth > depth_x
                         or st.lv_node != true_nodes[st.lv_depth]):
            violations.append(
                f"checkpoint left the true path at depth {st.lv_depth}")
            raise InvariantViolation(violations[-1])

    complete = None
    if standard:
        if tables is None:
            tables = CheckpointTables(placement, k, radius=rad)

        def complete(st):
            dq, out, flags, _ = tables.complete(st, x, use_jit=use_jit)
            if flags:
                violations.append(f"completion flags {flags} (checkpoint off path)")
            return dq, out, 0

    try:
        res = explore_memo(
            lambda: CheckpointSearch(placement.clone(), k, radius=radius,
                                     advance_matching=advance_matching,
                                     fuel=fuel),
            comparison_truth(x), k, x,
            per_lie_allowance=allowance, state_budget=state_budget,
            on_state=on_state, complete=complete)
    except InvariantViolation:
        return CaseResult(seed, x, 0, 0, 0, False, violations)
    except SearchNonTermination as exc:
        violations.append(f"run did not terminate: {exc}")
        return CaseResult(seed, x, 0, 0, 0, False, violations)
    if standard and res.max_excess > budget0:
        violations.append(
            f"questions - K'*{allowance} reached {res.max_excess}, budget "
            f"{budget0} (D={depth_x}, r={r_d}, F={f_count}, F'={f_prime})")
    return CaseResult(seed, x, res.max_questions, res.leaves, res.states,
                      res.all_valid, violations)


def _sweep_task(args):
    algo, mu, k, seed, budget, negative = args
    placement = build_placement(mu, seed)
    tables = None
    if algo == "1" and not negative:
        tables = CheckpointTables(placement, k)
    out = []
    for x in range(1, len(mu) + 1):
        if algo == "1":
            out.append(verify_checkpoint_case(
                mu, k, seed, x, state_budget=budget,
                advance_matching=max(k - 1, 0) if negative else None,
                fuel=20_000 if negative else None,
                placement=placement, tables=tables))
        else:
            out.append(verify_backtrack_case(
                mu, k, seed, x, state_budget=budget,
                accept_eq=0 if negative else None, placement=placement))
    return out


def verify_sweep(algo: str, mu: ProbabilityVector, k: int, seeds, *,
                 workers: int = 1, state_budget: int = DEFAULT_STATE_BUDGET,
                 negative_control: bool = False) -> SweepReport:
    """Exhaustive validity sweep over all (seed, element, lie placement)."""
    tasks = [(algo, mu, k, seed, state_budget, negative_control)
             for seed in seeds]
    cases: list[CaseResult] = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_sweep_task, tasks):
                cases.extend(part)
    else:
        for t in tasks:
            cases.extend(_sweep_task(t))
    return SweepReport(cases)


def weighted_expected_worst(report: SweepReport, mu: ProbabilityVector,
                            seeds) -> float:
    """Mean over seeds of E_mu[per-theta worst-case questions]."""
    by_seed: dict[int, dict[int, int]] = {}
    for c in report.cases:
        by_seed.setdefault(c.seed, {})[c.x] = c.max_questions
    vals = []
    for seed in seeds:
        per = by_seed[seed]
        vals.append(sum(float(mu.prob(x)) * per[x] for x in per))
    return statistics.fmean(vals)
