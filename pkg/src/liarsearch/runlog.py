"""Run reports, transcripts, and the loop driving a runner with a source."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class RunReport:
    """Outcome and instrumentation counters of one search run."""

    output_label: str | None
    output_index: int | None
    questions: int
    lies_told: int
    majority_rounds: int = 0   # checkpoint search: 2k+1 re-vote blocks
    verify_pairs: int = 0      # backtrack search: equality pairs asked (V)
    jump_backs: int = 0
    max_depth: int = 0
    transcript: list[dict] | None = None


def run_with_source(runner, source, *, record: bool = False) -> RunReport:
    """Drive a runner state machine with an answer source until it halts.

    With ``record`` the per-question transcript is collected:
    ``{t, kind, boundary_index, answer_bit, lie, depth_current,
    depth_last_verified, event}`` plus standalone jump-back/verify events
    for the backtracking search.
    """
    transcript: list[dict] | None = [] if record else None
    t = 0
    while not runner.done:
        query = runner.query()
        before = source.lies_used
        bit = source.answer(query)
        lied = source.lies_used > before
        if record:
            t += 1
            entry = {
                "t": t,
                "kind": runner.phase_name(),
                "boundary_index": query,
                "answer_bit": bit,
                "lie": lied,
                "depth_current": runner.depth,
                "depth_last_verified": getattr(runner, "lv_depth", None),
                "event": None,
            }
        events = runner.advance(bit)
        if record:
            if events:
                entry["event"] = events[0].get("event")
                transcript.extend(events)
            transcript.append(entry)
    return runner.report(lies_told=source.lies_used, transcript=transcript)
