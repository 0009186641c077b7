"""Testbench loading, trial bookkeeping, and evaluation metrics.

A *trial* is one end-to-end pipeline run over one prompt; its outcome is the
code of the first stage that failed (EE, CS, SG, PC, L) or S for success.
Metrics aggregate trials per (level, model) partition: absolute outcome
rates, conditional rates normalized by stage attrition, pass@k success
estimates, and token/cost tables with t-distribution confidence intervals.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import yaml
from scipy import stats

OUTCOMES = ("EE", "CS", "SG", "PC", "L", "S")
STAGE_ORDER = ("EE", "CS", "SG", "PC", "L")

_LEVEL_BANDS = {1: (1, 1), 2: (1, 2), 3: (3, 15), 4: (16, 112)}


class BenchSchemaError(ValueError):
    pass


class EmptyPartition(ValueError):
    pass


class ReachedZero(ValueError):
    """Every trial failed before the requested stage; the rate is undefined."""


class InsufficientTrials(ValueError):
    pass


class IncompleteLevel(ValueError):
    """A level is missing prompts or trials relative to the reporting protocol."""


@dataclass(frozen=True)
class PromptCase:
    id: str
    text: str
    level: int
    components: int
    reference: str | None = None

    def __post_init__(self):
        if self.level not in _LEVEL_BANDS:
            raise BenchSchemaError(f"case {self.id}: level must be 1-4")
        lo, hi = _LEVEL_BANDS[self.level]
        if not lo <= self.components <= hi:
            raise BenchSchemaError(
                f"case {self.id}: {self.components} component(s) is outside the "
                f"level-{self.level} band [{lo}, {hi}]"
            )


@dataclass(frozen=True)
class TrialRecord:
    case_id: str
    level: int
    model: str
    trial: int  # 1..R
    outcome: str
    stage_usage: Mapping[str, Mapping[str, int]] = field(default_factory=dict)
    stage_seconds: Mapping[str, float] = field(default_factory=dict)
    label_source: str = "mechanical"  # mechanical | imported

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if self.label_source not in ("mechanical", "imported"):
            raise ValueError(f"unknown label_source {self.label_source!r}")

    def usage_total(self, field_name: str) -> int:
        return sum(int(u.get(field_name, 0)) for u in self.stage_usage.values())


def load_testbench(path: str | Path) -> list[PromptCase]:
    doc = yaml.safe_load(Path(path).read_text())
    if not isinstance(doc, dict) or not isinstance(doc.get("cases"), list):
        raise BenchSchemaError("testbench must be a mapping with a 'cases' list")
    cases = []
    for i, rc in enumerate(doc["cases"]):
        if not isinstance(rc, dict):
            raise BenchSchemaError(f"cases[{i}] must be a mapping")
        try:
            cases.append(
                PromptCase(
                    id=str(rc["id"]),
                    text=str(rc["text"]),
                    level=int(rc["level"]),
                    components=int(rc["components"]),
                    reference=rc.get("reference"),
                )
            )
        except KeyError as exc:
            raise BenchSchemaError(f"cases[{i}] missing field {exc}") from exc
    ids = [c.id for c in cases]
    if len(set(ids)) != len(ids):
        raise BenchSchemaError("case ids must be unique")
    return cases


def default_testbench_path() -> Path:
    return Path(__file__).resolve().parent / "data" / "testbench.yaml"


# --- trial execution --------------------------------------------------------------


def record_to_json(r: TrialRecord) -> str:
    return json.dumps(
        {
            "case_id": r.case_id,
            "level": r.level,
            "model": r.model,
            "trial": r.trial,
            "outcome": r.outcome,
            "stage_usage": {k: dict(v) for k, v in r.stage_usage.items()},
            "stage_seconds": dict(r.stage_seconds),
            "label_source": r.label_source,
        },
        sort_keys=True,
    )


def record_from_json(line: str) -> TrialRecord:
    doc = json.loads(line)
    return TrialRecord(
        case_id=doc["case_id"],
        level=int(doc["level"]),
        model=doc["model"],
        trial=int(doc["trial"]),
        outcome=doc["outcome"],
        stage_usage=doc.get("stage_usage", {}),
        stage_seconds=doc.get("stage_seconds", {}),
        label_source=doc.get("label_source", "mechanical"),
    )


def read_log(path: str | Path) -> list[TrialRecord]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(record_from_json(line))
    return out


def run_trials(
    cases: Sequence[PromptCase],
    runner: Callable[[PromptCase, int], TrialRecord],
    trials: int = 5,
    log_path: str | Path | None = None,
) -> list[TrialRecord]:
    """Run ``trials`` repetitions per case; append each record to the log.

    ``runner`` executes one pipeline trial and never raises — stage failures
    are encoded in the returned record's outcome.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    lock = threading.Lock()
    records: list[TrialRecord] = []
    log_file = Path(log_path) if log_path is not None else None
    for case in cases:
        for t in range(1, trials + 1):
            rec = runner(case, t)
            with lock:
                records.append(rec)
                if log_file is not None:
                    with log_file.open("a") as fh:
                        fh.write(record_to_json(rec) + "\n")
    return records


# --- selection helpers --------------------------------------------------------------


def _subset(
    records: Iterable[TrialRecord], model: str | None = None, level: int | None = None
) -> list[TrialRecord]:
    return [
        r
        for r in records
        if (model is None or r.model == model) and (level is None or r.level == level)
    ]


def _prior_stages(outcome: str) -> tuple[str, ...]:
    idx = OUTCOMES.index(outcome)
    return OUTCOMES[:idx]


# --- occurrence rates ------------------------------------------------------------------


def absolute_occurrence(
    records: Sequence[TrialRecord],
    outcome: str,
    model: str | None = None,
    level: int | None = None,
) -> float:
    """Share of all trials in the partition that ended with ``outcome``."""
    sub = _subset(records, model, level)
    if not sub:
        raise EmptyPartition(f"no trials for model={model!r} level={level!r}")
    return sum(1 for r in sub if r.outcome == outcome) / len(sub)


def conditional_occurrence(
    records: Sequence[TrialRecord],
    outcome: str,
    model: str | None = None,
    level: int | None = None,
) -> float:
    """Outcome rate among trials that survived every earlier stage."""
    sub = _subset(records, model, level)
    if not sub:
        raise EmptyPartition(f"no trials for model={model!r} level={level!r}")
    prior = set(_prior_stages(outcome))
    reached = sum(1 for r in sub if r.outcome not in prior)
    if reached == 0:
        raise ReachedZero(
            f"no trial reached stage {outcome} for model={model!r} level={level!r}"
        )
    return sum(1 for r in sub if r.outcome == outcome) / reached


def collapsed_outcome(outcomes: Sequence[str]) -> str:
    """The furthest outcome a case achieved across its trials."""
    return max(outcomes, key=OUTCOMES.index)


def collapsed_occurrence(
    records: Sequence[TrialRecord],
    outcome: str,
    model: str | None = None,
    level: int | None = None,
) -> float:
    """Share of cases whose best trial ends at ``outcome`` (the pass@5 view)."""
    sub = _subset(records, model, level)
    if not sub:
        raise EmptyPartition(f"no trials for model={model!r} level={level!r}")
    by_case: dict[str, list[str]] = {}
    for r in sub:
        by_case.setdefault(r.case_id, []).append(r.outcome)
    hits = sum(1 for outs in by_case.values() if collapsed_outcome(outs) == outcome)
    return hits / len(by_case)


def collapsed_conditional_occurrence(
    records: Sequence[TrialRecord],
    outcome: str,
    model: str | None = None,
    level: int | None = None,
) -> float:
    """Conditional rate over per-case collapsed outcomes."""
    sub = _subset(records, model, level)
    if not sub:
        raise EmptyPartition(f"no trials for model={model!r} level={level!r}")
    by_case: dict[str, list[str]] = {}
    for r in sub:
        by_case.setdefault(r.case_id, []).append(r.outcome)
    collapsed = [collapsed_outcome(outs) for outs in by_case.values()]
    prior = set(_prior_stages(outcome))
    reached = sum(1 for o in collapsed if o not in prior)
    if reached == 0:
        raise ReachedZero(f"no case reached stage {outcome}")
    return sum(1 for o in collapsed if o == outcome) / reached


# --- pass@k -----------------------------------------------------------------------------


def pass_at_k_case(n: int, c: int, k: int) -> float:
    """Unbiased any-success estimator for one case: 1 - C(n-c, k)/C(n, k)."""
    if k > n:
        raise InsufficientTrials(f"k={k} exceeds the {n} recorded trials")
    if c == 0:
        return 0.0
    if n - c < k:
        return 1.0
    return 1.0 - math.comb(n - c, k) / math.comb(n, k)


def pass_at_k(
    records: Sequence[TrialRecord],
    k: int,
    model: str | None = None,
    level: int | None = None,
) -> float:
    """Mean per-case success estimate at k draws."""
    sub = _subset(records, model, level)
    if not sub:
        raise EmptyPartition(f"no trials for model={model!r} level={level!r}")
    by_case: dict[str, list[str]] = {}
    for r in sub:
        by_case.setdefault(r.case_id, []).append(r.outcome)
    total = 0.0
    for outs in by_case.values():
        total += pass_at_k_case(len(outs), sum(1 for o in outs if o == "S"), k)
    return total / len(by_case)


# --- attrition -----------------------------------------------------------------------------


def attrition_report(
    records: Sequence[TrialRecord],
) -> dict[tuple[int, str], dict[str, int]]:
    """How many trials reached each stage, per (level, model)."""
    out: dict[tuple[int, str], dict[str, int]] = {}
    for r in records:
        key = (r.level, r.model)
        row = out.setdefault(key, {s: 0 for s in STAGE_ORDER})
        failed_at = OUTCOMES.index(r.outcome)
        for i, stage in enumerate(STAGE_ORDER):
            if i <= failed_at:
                row[stage] += 1
    return out


# --- token/cost reporting ---------------------------------------------------------------------


@dataclass(frozen=True)
class CostRow:
    level: int
    model: str
    n_prompts: int
    mean: Mapping[str, float]  # input/output/total tokens and cost ($/trial)
    half_width: Mapping[str, float]  # 95% CI half-widths, t with n_prompts-1 dof
    complete: bool


def load_prices(path: str | Path) -> dict[str, dict[str, float]]:
    doc = yaml.safe_load(Path(path).read_text())
    return {
        m: {"input": float(p["input"]), "output": float(p["output"])}
        for m, p in doc["prices"].items()
    }


def default_prices_path() -> Path:
    return Path(__file__).resolve().parent / "data" / "prices.yaml"


def trial_cost(record: TrialRecord, prices: Mapping[str, Mapping[str, float]]) -> float:
    p = prices[record.model]
    return (
        record.usage_total("input_tokens") * p["input"]
        + record.usage_total("output_tokens") * p["output"]
    ) / 1e6


def token_cost_table(
    records: Sequence[TrialRecord],
    prices: Mapping[str, Mapping[str, float]],
    trials: int = 5,
    prompts_per_level: int = 5,
    strict: bool = False,
) -> list[CostRow]:
    """Per-(level, model) token and cost means with 95% confidence intervals.

    The half-width pools per-prompt variances: s = sqrt(mean of variances),
    CI = t(0.975, n-1) * s / sqrt(n) over the n reporting prompts.
    """
    keys = sorted({(r.level, r.model) for r in records})
    rows = []
    for level, model in keys:
        sub = _subset(records, model, level)
        by_case: dict[str, list[TrialRecord]] = {}
        for r in sub:
            by_case.setdefault(r.case_id, []).append(r)
        complete = len(by_case) >= prompts_per_level and all(
            len(v) >= trials for v in by_case.values()
        )
        if not complete and strict:
            raise IncompleteLevel(
                f"level {level} / {model}: {len(by_case)} prompt(s), "
                f"trial counts {[len(v) for v in by_case.values()]}"
            )
        metrics = {
            "input_tokens": lambda r: float(r.usage_total("input_tokens")),
            "output_tokens": lambda r: float(r.usage_total("output_tokens")),
            "total_tokens": lambda r: float(r.usage_total("total_tokens")),
            "cost": lambda r: trial_cost(r, prices),
        }
        n = len(by_case)
        means: dict[str, float] = {}
        halves: dict[str, float] = {}
        tq = float(stats.t.ppf(0.975, n - 1)) if n > 1 else math.inf
        for name, fn in metrics.items():
            prompt_means = []
            prompt_vars = []
            for recs in by_case.values():
                vals = [fn(r) for r in recs]
                prompt_means.append(sum(vals) / len(vals))
                if len(vals) > 1:
                    mu = prompt_means[-1]
                    prompt_vars.append(sum((v - mu) ** 2 for v in vals) / (len(vals) - 1))
                else:
                    prompt_vars.append(0.0)
            means[name] = sum(prompt_means) / n
            pooled = math.sqrt(sum(prompt_vars) / n)
            halves[name] = tq * pooled / math.sqrt(n) if n > 1 else math.inf
        rows.append(CostRow(level, model, n, means, halves, complete))
    return rows


# --- synthetic logs for table cross-checks -------------------------------------------------------


def synthesize_trial_log(
    level: int,
    model: str,
    trial_counts: Mapping[str, int],
    case_counts: Mapping[str, int],
    trials: int = 5,
) -> list[TrialRecord]:
    """Build a trial log with exact per-outcome totals and per-case maxima.

    ``trial_counts`` fixes how many individual trials end at each outcome;
    ``case_counts`` fixes how many cases have each outcome as their furthest.
    Trials are distributed greedily: each case first receives one trial of
    its furthest outcome, then the highest remaining outcomes fill the cases
    with the highest ceilings (an outcome never lands on a case whose
    furthest outcome is earlier in the stage order).
    """
    n_cases = sum(case_counts.values())
    if sum(trial_counts.values()) != n_cases * trials:
        raise ValueError("trial_counts must sum to cases x trials")
    for o in list(trial_counts) + list(case_counts):
        if o not in OUTCOMES:
            raise ValueError(f"unknown outcome {o!r}")

    # cases sorted by furthest outcome, latest stage first
    furthest: list[str] = []
    for o in sorted(case_counts, key=OUTCOMES.index, reverse=True):
        furthest.extend([o] * case_counts[o])

    remaining = {o: trial_counts.get(o, 0) for o in OUTCOMES}
    slots: list[list[str]] = []
    for o in furthest:
        if remaining[o] <= 0:
            raise ValueError(f"trial_counts cannot cover a case peaking at {o}")
        remaining[o] -= 1
        slots.append([o])

    for o in sorted(remaining, key=OUTCOMES.index, reverse=True):
        count = remaining[o]
        for i, case_slots in enumerate(slots):
            while (
                count > 0
                and len(case_slots) < trials
                and OUTCOMES.index(furthest[i]) >= OUTCOMES.index(o)
            ):
                case_slots.append(o)
                count -= 1
        if count:
            raise ValueError(f"could not place {count} trial(s) of outcome {o}")

    records = []
    for i, case_slots in enumerate(slots):
        for t, outcome in enumerate(case_slots, start=1):
            records.append(
                TrialRecord(f"case_{level}_{i:03d}", level, model, t, outcome)
            )
    return records
