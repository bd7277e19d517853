"""Independent oracles and the exhaustive verification harness.

Nothing here executes protocol machinery to produce an expected value: the
oracle is a direct table lookup.  The harness runs a protocol over its whole
input domain, compares outputs to the oracle, and reports measured costs
against a predicted bound.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Mapping

from .core import (
    BudgetError, DEFAULT_BUDGET, DomainError, InputMatrix, Model,
    ProtocolSpec, Transcript, TruthTable, assert_pattern, bits_to_int,
    domain_size, enumerate_inputs, run_protocol,
)


def oracle_evaluate(f: TruthTable, x: InputMatrix) -> tuple[int, ...]:
    """Per-instance outputs by direct table lookup; no protocol code."""
    if x.k != f.k or x.n != f.n:
        raise DomainError("input shape does not match the truth table")
    results = []
    for row in x.rows:
        results.append(f.values[bits_to_int("".join(row))])
    return tuple(results)


def random_truth_table(k: int, n: int, seed: int,
                       max_bits: int = 24) -> TruthTable:
    """Deterministic pseudorandom table; same seed, same table."""
    if k * n > max_bits:
        raise BudgetError(f"2^{k * n} entries exceed the materialization guard")
    rng = random.Random(seed)
    return TruthTable(k, n, tuple(rng.randrange(2)
                                  for _ in range(1 << (k * n))))


@dataclass(frozen=True)
class Counterexample:
    input_index: int
    instance: int
    protocol_output: int
    expected: int
    rows: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class VerificationReport:
    protocol_name: str
    domain_size: int
    checked: int
    correct: bool
    counterexample: Counterexample | None
    measured_worst_case: int
    measured_worst_payload: int
    predicted_bound: int | None
    per_channel: Mapping[tuple[int, int], int]
    naive_baseline: int | None
    exhaustive: bool = True

    @property
    def savings_realized(self) -> bool:
        return (self.naive_baseline is not None
                and self.measured_worst_case < self.naive_baseline)

    def to_json(self) -> dict:
        data = {
            "protocol": self.protocol_name,
            "domain_size": self.domain_size,
            "checked": self.checked,
            "correct": self.correct,
            "measured_worst_case": self.measured_worst_case,
            "measured_worst_payload": self.measured_worst_payload,
            "predicted_bound": self.predicted_bound,
            "per_channel": {f"{a}->{b}": v
                            for (a, b), v in sorted(self.per_channel.items())},
            "naive_baseline": self.naive_baseline,
            "exhaustive": self.exhaustive,
        }
        if self.counterexample is not None:
            data["counterexample"] = {
                "input_index": self.counterexample.input_index,
                "instance": self.counterexample.instance,
                "protocol_output": self.counterexample.protocol_output,
                "expected": self.counterexample.expected,
                "rows": [list(r) for r in self.counterexample.rows],
            }
        return data

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)


@dataclass
class _Partial:
    """Mergeable accumulation over a contiguous slice of the domain."""
    checked: int = 0
    worst: int = 0
    worst_payload: int = 0
    channels: dict = field(default_factory=dict)
    counterexample: Counterexample | None = None

    def absorb(self, x: InputMatrix, t: Transcript,
               expected: tuple[int, ...]) -> bool:
        self.checked += 1
        self.worst = max(self.worst, t.total_bits)
        self.worst_payload = max(self.worst_payload, t.payload_bits())
        for key, bits in t.channel_totals().items():
            self.channels[key] = max(self.channels.get(key, 0), bits)
        for inst in range(1, x.ell + 1):
            if t.outputs[inst] != expected[inst - 1]:
                self.counterexample = Counterexample(
                    x.index, inst, t.outputs[inst], expected[inst - 1], x.rows)
                return False
        return True

    def merge(self, other: "_Partial") -> "_Partial":
        self.checked += other.checked
        self.worst = max(self.worst, other.worst)
        self.worst_payload = max(self.worst_payload, other.worst_payload)
        for key, bits in other.channels.items():
            self.channels[key] = max(self.channels.get(key, 0), bits)
        if self.counterexample is None:
            self.counterexample = other.counterexample
        return self


def verify_range(spec: ProtocolSpec, f: TruthTable,
                 lo: int, hi: int) -> _Partial:
    """Verify input indices [lo, hi); stops at the first counterexample."""
    part = _Partial()
    for idx in range(lo, hi):
        x = InputMatrix.from_index(idx, spec.k, spec.n, spec.ell)
        t = run_protocol(spec, x)
        if spec.pattern is not None:
            assert_pattern(spec, x, t)
        if not part.absorb(x, t, oracle_evaluate(f, x)):
            break
    return part


def exhaustive_verify(spec: ProtocolSpec, f: TruthTable,
                      predicted_bound: int | None = None,
                      naive_baseline: int | None = None,
                      budget: int = DEFAULT_BUDGET,
                      partitions: int = 1) -> VerificationReport:
    """Run the protocol on every input and compare against the oracle.

    ``partitions`` splits the domain into contiguous ranges merged
    associatively; the result is independent of the partition count.
    """
    if f.k != spec.k or f.n != spec.n:
        raise DomainError("truth table shape does not match the protocol")
    size = domain_size(spec.k, spec.n, spec.ell)
    if size > budget:
        raise BudgetError(
            f"exhaustive verification needs {size} runs, budget is {budget}")
    total = _Partial()
    step = -(-size // max(partitions, 1))
    for lo in range(0, size, step):
        total.merge(verify_range(spec, f, lo, min(lo + step, size)))
        if total.counterexample is not None:
            break
    return VerificationReport(
        protocol_name=spec.name,
        domain_size=size,
        checked=total.checked,
        correct=total.counterexample is None,
        counterexample=total.counterexample,
        measured_worst_case=total.worst,
        measured_worst_payload=total.worst_payload,
        predicted_bound=predicted_bound,
        per_channel=dict(total.channels),
        naive_baseline=naive_baseline,
    )


def sampled_verify(spec: ProtocolSpec, f: TruthTable, samples: int, seed: int,
                   predicted_bound: int | None = None,
                   naive_baseline: int | None = None) -> VerificationReport:
    """Seeded random sampling; the report is labeled non-exhaustive."""
    rng = random.Random(seed)
    size = domain_size(spec.k, spec.n, spec.ell)
    part = _Partial()
    for _ in range(samples):
        x = InputMatrix.from_index(rng.randrange(size), spec.k, spec.n,
                                   spec.ell)
        t = run_protocol(spec, x)
        if spec.pattern is not None:
            assert_pattern(spec, x, t)
        if not part.absorb(x, t, oracle_evaluate(f, x)):
            break
    return VerificationReport(
        protocol_name=spec.name, domain_size=size, checked=part.checked,
        correct=part.counterexample is None,
        counterexample=part.counterexample,
        measured_worst_case=part.worst,
        measured_worst_payload=part.worst_payload,
        predicted_bound=predicted_bound, per_channel=dict(part.channels),
        naive_baseline=naive_baseline, exhaustive=False)


def messages_at_position(spec: ProtocolSpec, pos: int,
                         budget: int = DEFAULT_BUDGET) -> frozenset[str]:
    """All distinct payloads a myopic chain emits at one position."""
    if spec.model is not Model.MYOPIC:
        raise DomainError("position messages are defined for myopic chains")
    if not (1 <= pos <= spec.k - 1):
        raise DomainError(f"position {pos} outside [1,{spec.k - 1}]")
    size = domain_size(spec.k, spec.n, spec.ell)
    if size > budget:
        raise BudgetError(f"enumerating {size} inputs exceeds budget {budget}")
    seen = set()
    for x in enumerate_inputs(spec.k, spec.n, spec.ell):
        payload = ""
        for r in run_protocol(spec, x).records:
            if r.round == pos:
                payload = r.payload
        seen.add(payload)
    return frozenset(seen)


def is_prefix_free(messages: frozenset[str]) -> bool:
    """No message a proper prefix of another; singleton and empty sets pass."""
    msgs = sorted(messages, key=len)
    for i, short in enumerate(msgs):
        for long in msgs[i + 1:]:
            if len(long) > len(short) and long.startswith(short):
                return False
    return True


def check_prefix_free(spec: ProtocolSpec, pos: int,
                      budget: int = DEFAULT_BUDGET) -> bool:
    """True iff the chain's position-``pos`` message set is prefix-free."""
    return is_prefix_free(messages_at_position(spec, pos, budget))


def check_view_legality(spec: ProtocolSpec, x: InputMatrix) -> None:
    """Bit-flip fuzzing: flipping a bit invisible to party p must not change
    what p sends, as long as p's perceived state is unchanged.

    For every party p and every input bit p cannot see, runs the protocol on
    the flipped input and compares p's outgoing messages round by round,
    stopping at the first round where p's inbox or the board (p's perceived
    state) diverges -- after that point changes are legitimate reactions.
    """
    base = run_protocol(spec, x)
    vis = spec.visibility()
    on_board = spec.model is Model.NOF_BOARD
    for p in range(1, spec.k + 1):
        invisible = [(i, j) for i in range(1, x.ell + 1)
                     for j in range(1, spec.k + 1)
                     if j != p and j not in vis.neighbors(p)] + \
                    [(i, p) for i in range(1, x.ell + 1)]
        for (i, j) in invisible:
            for bit in range(spec.n):
                rows = [list(r) for r in x.rows]
                word = rows[i - 1][j - 1]
                rows[i - 1][j - 1] = (word[:bit]
                                      + ("1" if word[bit] == "0" else "0")
                                      + word[bit + 1:])
                flipped = InputMatrix(x.ell, x.k, x.n,
                                      tuple(tuple(r) for r in rows))
                other = run_protocol(spec, flipped)
                for t in range(1, spec.rounds + 1):
                    def perceived(tr):
                        prior = tuple(r for r in tr.records if r.round < t)
                        if on_board:
                            return prior
                        return tuple(r for r in prior if r.recipient == p)
                    if perceived(base) != perceived(other):
                        break
                    sent_base = [r for r in base.records
                                 if r.round == t and r.sender == p]
                    sent_other = [r for r in other.records
                                  if r.round == t and r.sender == p]
                    if sent_base != sent_other:
                        raise DomainError(
                            f"{spec.name}: party {p} reacted to invisible "
                            f"bit ({i},{j},{bit}) in round {t}")
