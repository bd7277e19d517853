"""Protocol models, deterministic execution and cost accounting.

Three models are supported:

* ``NOF_BOARD``  -- k parties, each missing its own forehead input, writing
  bits on a shared board.
* ``NOF_GRAPH``  -- point-to-point channels; a restriction graph says which
  inputs each party sees.
* ``MYOPIC``     -- one-way chain ordered by a permutation; position i sees
  the predecessors' inputs and its successor's input.

Bit strings are plain ``str`` of '0'/'1', most-significant bit first.
Party and instance indices are 1-based.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Mapping, Sequence

BOARD = 0  # recipient id for shared-board writes

DEFAULT_BUDGET = 2 ** 24


class NofmuxError(Exception):
    """Base class for all workbench errors."""


class DomainError(NofmuxError):
    """Out-of-range index, shape mismatch, or violated precondition."""


class LegalityError(NofmuxError):
    """A rule tried to read an input its party cannot see, or sent an
    illegal message for its model."""


class DeterminismError(NofmuxError):
    """Two replays of the same protocol on the same input diverged."""


class ObliviousnessError(NofmuxError):
    """Realized message lengths do not match the declared pattern."""


class BudgetError(NofmuxError):
    """An exhaustive sweep would exceed the configured budget."""


class CertificateError(NofmuxError):
    """A combinatorial certificate failed validation."""


class RobustnessError(NofmuxError):
    """Protocols offered for combining do not share a communication pattern
    up to the claimed permutation."""


class SoundnessError(NofmuxError):
    """A compiled protocol's reconstruction step read an unavailable value
    or failed to decode; must never fire on a valid certificate."""


# ---------------------------------------------------------------------------
# bits
# ---------------------------------------------------------------------------

def int_to_bits(value: int, width: int) -> str:
    if value < 0 or value >= 1 << width:
        raise DomainError(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def bits_to_int(bits: str) -> int:
    return int(bits, 2) if bits else 0


def xor_bits(a: str, b: str) -> str:
    if len(a) != len(b):
        raise DomainError(f"xor of unequal lengths {len(a)} and {len(b)}")
    return "".join("1" if x != y else "0" for x, y in zip(a, b))


def _check_bits(payload: str) -> None:
    if any(c not in "01" for c in payload):
        raise DomainError(f"payload {payload!r} is not a bit string")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RestrictionGraph:
    """Directed simple graph over [k]; edge (i, j) means P_i sees x_j."""

    k: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.k < 2:
            raise DomainError("party count must be at least 2")
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        for i, j in self.edges:
            if i == j:
                raise DomainError(f"self-loop ({i},{i}) not allowed")
            if not (1 <= i <= self.k and 1 <= j <= self.k):
                raise DomainError(f"edge ({i},{j}) outside [1,{self.k}]")

    def neighbors(self, i: int) -> frozenset[int]:
        return frozenset(j for a, j in self.edges if a == i)

    def non_neighbors(self, i: int) -> frozenset[int]:
        return frozenset(range(1, self.k + 1)) - self.neighbors(i)

    @classmethod
    def complete(cls, k: int) -> "RestrictionGraph":
        return cls(k, frozenset((i, j) for i in range(1, k + 1)
                                for j in range(1, k + 1) if i != j))

    @classmethod
    def myopic(cls, order: Sequence[int]) -> "RestrictionGraph":
        """Visibility of a myopic chain: position i sees positions < i and i+1."""
        k = len(order)
        edges = set()
        for pos in range(1, k + 1):
            p = order[pos - 1]
            for prev in range(1, pos):
                edges.add((p, order[prev - 1]))
            if pos < k:
                edges.add((p, order[pos]))
        return cls(k, frozenset(edges))

    def to_json(self) -> dict:
        return {"k": self.k, "edges": sorted([i, j] for i, j in self.edges)}

    @classmethod
    def from_json(cls, data: Mapping) -> "RestrictionGraph":
        return cls(int(data["k"]),
                   frozenset((int(i), int(j)) for i, j in data["edges"]))


@dataclass(frozen=True)
class InputMatrix:
    """ell x k matrix of n-bit inputs; entry (i, j) sits on P_j's forehead
    in instance i."""

    ell: int
    k: int
    n: int
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if len(self.rows) != self.ell:
            raise DomainError("row count does not match instance count")
        for row in self.rows:
            if len(row) != self.k:
                raise DomainError("row width does not match party count")
            for entry in row:
                if len(entry) != self.n:
                    raise DomainError(f"entry {entry!r} is not {self.n} bits")
                _check_bits(entry)

    def x(self, instance: int, party: int) -> str:
        if not (1 <= instance <= self.ell and 1 <= party <= self.k):
            raise DomainError(f"index ({instance},{party}) out of range")
        return self.rows[instance - 1][party - 1]

    @property
    def index(self) -> int:
        """Concatenation x_{1,1}||...||x_{ell,k}, MSB first, as an integer."""
        return bits_to_int("".join(itertools.chain.from_iterable(self.rows)))

    @classmethod
    def from_index(cls, idx: int, k: int, n: int, ell: int = 1) -> "InputMatrix":
        flat = int_to_bits(idx, k * n * ell)
        rows = tuple(
            tuple(flat[(i * k + j) * n:(i * k + j + 1) * n] for j in range(k))
            for i in range(ell))
        return cls(ell, k, n, rows)

    @classmethod
    def single(cls, *inputs: str) -> "InputMatrix":
        """Single-instance matrix from the inputs x_1, ..., x_k."""
        if not inputs:
            raise DomainError("need at least one input")
        return cls(1, len(inputs), len(inputs[0]), (tuple(inputs),))


def domain_size(k: int, n: int, ell: int) -> int:
    return 1 << (k * n * ell)


def enumerate_inputs(k: int, n: int, ell: int = 1) -> Iterator[InputMatrix]:
    for idx in range(domain_size(k, n, ell)):
        yield InputMatrix.from_index(idx, k, n, ell)


@dataclass(frozen=True)
class TruthTable:
    """Explicit k-argument boolean function over n-bit inputs.

    ``values[v]`` is f at the argument tuple whose concatenation
    x_1||...||x_k, read MSB first, equals v.
    """

    k: int
    n: int
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.values) != 1 << (self.k * self.n):
            raise DomainError("truth table is not total")
        if any(v not in (0, 1) for v in self.values):
            raise DomainError("truth table entries must be bits")

    def evaluate(self, args: Sequence[str]) -> int:
        if len(args) != self.k or any(len(a) != self.n for a in args):
            raise DomainError("argument shape mismatch")
        return self.values[bits_to_int("".join(args))]

    @classmethod
    def from_function(cls, k: int, n: int,
                      fn: Callable[[tuple[str, ...]], int]) -> "TruthTable":
        args_iter = itertools.product(
            ["".join(bits) for bits in itertools.product("01", repeat=n)],
            repeat=k)
        return cls(k, n, tuple(int(fn(tuple(a))) for a in args_iter))

    @classmethod
    def eq(cls, k: int, n: int) -> "TruthTable":
        return cls.from_function(k, n, lambda a: int(len(set(a)) == 1))

    @classmethod
    def constant(cls, k: int, n: int, bit: int) -> "TruthTable":
        return cls(k, n, (int(bit),) * (1 << (k * n)))

    def to_json(self) -> dict:
        return {"k": self.k, "n": self.n, "values": list(self.values)}

    @classmethod
    def from_json(cls, data: Mapping) -> "TruthTable":
        return cls(int(data["k"]), int(data["n"]),
                   tuple(int(v) for v in data["values"]))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "TruthTable":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


class View:
    """The inputs one party sees in one instance.

    Reading a party that is not visible raises LegalityError, so a
    next-message rule physically cannot peek at its own forehead.
    """

    __slots__ = ("owner", "_visible")

    def __init__(self, owner: int, visible: Mapping[int, str]):
        if owner in visible:
            raise LegalityError(f"party {owner} cannot see its own forehead")
        self.owner = owner
        self._visible = dict(visible)

    def __getitem__(self, party: int) -> str:
        try:
            return self._visible[party]
        except KeyError:
            raise LegalityError(
                f"party {self.owner} cannot see x_{party}") from None

    def __contains__(self, party: int) -> bool:
        return party in self._visible

    def parties(self) -> frozenset[int]:
        return frozenset(self._visible)

    def items(self):
        return self._visible.items()

    def __eq__(self, other) -> bool:
        return (isinstance(other, View) and other.owner == self.owner
                and other._visible == self._visible)

    def __repr__(self) -> str:
        return f"View(owner={self.owner}, visible={self._visible!r})"


Views = Mapping[int, View]  # instance -> View, keyed 1..ell


@dataclass(frozen=True)
class MessageRecord:
    round: int
    sender: int
    recipient: int  # party id, or BOARD
    payload: str
    protocol: int | None = None  # source protocol index in compiled runs
    tag: str | None = None       # free framing metadata, never costed

    def __post_init__(self) -> None:
        _check_bits(self.payload)
        if self.recipient != BOARD and self.sender == self.recipient:
            raise DomainError("sender equals recipient")


@dataclass(frozen=True)
class Outgoing:
    """A message a rule wants to send this round."""
    recipient: int
    payload: str
    protocol: int | None = None
    tag: str | None = None


@dataclass
class CommPattern:
    """Input-independent message lengths: (round, sender, recipient) -> bits."""

    lengths: dict[tuple[int, int, int], int]
    rounds: int

    def __post_init__(self) -> None:
        self.lengths = {key: int(v) for key, v in self.lengths.items() if v}
        for (t, i, j), v in self.lengths.items():
            if t < 1 or t > self.rounds or v < 0:
                raise DomainError(f"bad pattern entry {(t, i, j)}: {v}")

    def length(self, t: int, i: int, j: int) -> int:
        return self.lengths.get((t, i, j), 0)

    def total_bits(self) -> int:
        return sum(self.lengths.values())

    def channel_bits(self, i: int, j: int) -> int:
        return sum(v for (t, a, b), v in self.lengths.items()
                   if a == i and b == j)

    def permuted(self, pi: "PermutationLike") -> "CommPattern":
        """LEN_pi(t, i, j) = LEN(t, pi^-1(i), pi^-1(j)); board stays board."""
        def relabel(p: int) -> int:
            return BOARD if p == BOARD else pi(p)
        return CommPattern(
            {(t, relabel(i), relabel(j)): v
             for (t, i, j), v in self.lengths.items()},
            self.rounds)

    def __eq__(self, other) -> bool:
        return (isinstance(other, CommPattern) and other.rounds == self.rounds
                and other.lengths == self.lengths)


class PermutationLike:
    """Anything callable on party ids; combinatorics.Permutation satisfies it."""

    def __call__(self, i: int) -> int:  # pragma: no cover - protocol stub
        raise NotImplementedError


class Model(Enum):
    NOF_BOARD = "nof-board"
    NOF_GRAPH = "nof-graph"
    MYOPIC = "myopic"


NextMessageRule = Callable[
    [int, int, Views, tuple[MessageRecord, ...], tuple[MessageRecord, ...] | None],
    Sequence[Outgoing]]
OutputRule = Callable[
    [Views, tuple[MessageRecord, ...], tuple[MessageRecord, ...] | None],
    Mapping[int, int]]


@dataclass(frozen=True)
class ProtocolSpec:
    """An executable deterministic protocol.

    ``next_message(party, round, views, inbox, board)`` returns the party's
    outgoing messages for that round; it is handed exactly the data the model
    lets the party read, so legality holds by construction.  ``output_rule``
    runs for ``output_party`` after the last round and yields one bit per
    instance.
    """

    name: str
    model: Model
    k: int
    n: int
    ell: int
    rounds: int
    next_message: NextMessageRule
    output_party: int
    output_rule: OutputRule
    graph: RestrictionGraph | None = None     # NOF_GRAPH only
    chain: tuple[int, ...] | None = None      # MYOPIC only: (pi(1),...,pi(k))
    pattern: CommPattern | None = None

    def __post_init__(self) -> None:
        if not (1 <= self.output_party <= self.k):
            raise DomainError("output party out of range")
        if self.model is Model.NOF_GRAPH and self.graph is None:
            raise DomainError("NOF_GRAPH protocol needs a restriction graph")
        if self.model is Model.MYOPIC:
            if self.chain is None or sorted(self.chain) != list(range(1, self.k + 1)):
                raise DomainError("MYOPIC protocol needs a chain permutation")

    def visibility(self) -> RestrictionGraph:
        """The effective who-sees-whom graph of this protocol's model."""
        if self.model is Model.NOF_BOARD:
            return RestrictionGraph.complete(self.k)
        if self.model is Model.MYOPIC:
            return RestrictionGraph.myopic(self.chain)
        return self.graph


@dataclass(frozen=True)
class Transcript:
    records: tuple[MessageRecord, ...]
    outputs: Mapping[int, int]
    total_bits: int

    def channel_totals(self) -> dict[tuple[int, int], int]:
        totals: dict[tuple[int, int], int] = {}
        for r in self.records:
            key = (r.sender, r.recipient)
            totals[key] = totals.get(key, 0) + len(r.payload)
        return totals

    def payload_bits(self) -> int:
        """Bits excluding output-distribution writes (records tagged out:*)."""
        return sum(len(r.payload) for r in self.records
                   if not (r.tag or "").startswith("out:"))


@dataclass(frozen=True)
class CostReport:
    worst_case_bits: int
    channel_matrix: Mapping[tuple[int, int], int]
    per_round: Mapping[int, int]
    domain_size: int


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def compute_view(graph: RestrictionGraph, x: InputMatrix,
                 instance: int, party: int) -> View:
    """What ``party`` sees of ``instance`` under the restriction graph."""
    if not (1 <= party <= graph.k):
        raise DomainError(f"party {party} out of range")
    if not (1 <= instance <= x.ell):
        raise DomainError(f"instance {instance} out of range")
    return View(party, {j: x.x(instance, j) for j in graph.neighbors(party)})


def _all_views(spec: ProtocolSpec, x: InputMatrix) -> dict[int, Views]:
    graph = spec.visibility()
    return {p: {i: compute_view(graph, x, i, p) for i in range(1, x.ell + 1)}
            for p in range(1, spec.k + 1)}


def _validate_outgoing(spec: ProtocolSpec, sender: int, rnd: int,
                       out: Outgoing) -> None:
    _check_bits(out.payload)
    if spec.model is Model.NOF_BOARD:
        if out.recipient != BOARD:
            raise LegalityError("board protocols may only write on the board")
        return
    if not (1 <= out.recipient <= spec.k):
        raise LegalityError(f"recipient {out.recipient} out of range")
    if out.recipient == sender:
        raise LegalityError("party cannot send to itself")
    if spec.model is Model.MYOPIC and out.payload:
        pos = spec.chain.index(sender) + 1 if sender in spec.chain else 0
        if pos != rnd or rnd >= spec.k or spec.chain[rnd] != out.recipient:
            raise LegalityError(
                f"myopic round {rnd}: only {spec.chain[rnd - 1]}->"
                f"{spec.chain[rnd] if rnd < spec.k else '?'} may carry bits")


def run_protocol(spec: ProtocolSpec, x: InputMatrix) -> Transcript:
    """Execute all rounds synchronously and collect the declared outputs.

    Messages sent in round t may depend only on rounds 1..t-1.  Within a
    round, records are ordered by (sender, protocol index, recipient).
    """
    if (x.k, x.n, x.ell) != (spec.k, spec.n, spec.ell):
        raise DomainError(
            f"input shape ({x.k},{x.n},{x.ell}) does not match protocol "
            f"({spec.k},{spec.n},{spec.ell})")
    views = _all_views(spec, x)
    on_board = spec.model is Model.NOF_BOARD
    records: list[MessageRecord] = []
    for t in range(1, spec.rounds + 1):
        prior = tuple(records)
        board = prior if on_board else None
        round_records: list[MessageRecord] = []
        for p in range(1, spec.k + 1):
            inbox = tuple(r for r in prior if r.recipient == p)
            for out in spec.next_message(p, t, views[p], inbox, board):
                _validate_outgoing(spec, p, t, out)
                round_records.append(MessageRecord(
                    t, p, out.recipient, out.payload, out.protocol, out.tag))
        round_records.sort(
            key=lambda r: (r.sender, r.protocol or 0, r.recipient))
        records.extend(round_records)
    final = tuple(records)
    board = final if on_board else None
    inbox = tuple(r for r in final if r.recipient == spec.output_party)
    outputs = dict(spec.output_rule(views[spec.output_party], inbox, board))
    if sorted(outputs) != list(range(1, spec.ell + 1)):
        raise DomainError("output rule must produce one bit per instance")
    for bit in outputs.values():
        if bit not in (0, 1):
            raise DomainError(f"output {bit!r} is not a bit")
    return Transcript(final, outputs,
                      sum(len(r.payload) for r in final))


def check_replay_determinism(spec: ProtocolSpec, x: InputMatrix) -> Transcript:
    """Run twice; raise DeterminismError if the transcripts differ."""
    first = run_protocol(spec, x)
    second = run_protocol(spec, x)
    if first != second:
        raise DeterminismError(
            f"protocol {spec.name} diverged on replay at input {x.index}")
    return first


def _realized_lengths(t: Transcript) -> dict[tuple[int, int, int], int]:
    realized: dict[tuple[int, int, int], int] = {}
    for r in t.records:
        key = (r.round, r.sender, r.recipient)
        realized[key] = realized.get(key, 0) + len(r.payload)
    return {k: v for k, v in realized.items() if v}


def assert_pattern(spec: ProtocolSpec, x: InputMatrix,
                   transcript: Transcript) -> None:
    if spec.pattern is None:
        raise ObliviousnessError(f"protocol {spec.name} declares no pattern")
    if _realized_lengths(transcript) != spec.pattern.lengths:
        raise ObliviousnessError(
            f"protocol {spec.name} violates its pattern on input "
            f"index {x.index}: realized {_realized_lengths(transcript)}")


def measure_cost(spec: ProtocolSpec, budget: int = DEFAULT_BUDGET) -> CostReport:
    """Worst-case bit cost and per-channel matrix over the full input domain.

    If the protocol declares a pattern, every input is checked against it.
    """
    size = domain_size(spec.k, spec.n, spec.ell)
    if size > budget:
        raise BudgetError(
            f"domain has {size} inputs, budget is {budget}; pass a larger "
            f"budget explicitly to proceed")
    worst = 0
    channels: dict[tuple[int, int], int] = {}
    per_round: dict[int, int] = {}
    for x in enumerate_inputs(spec.k, spec.n, spec.ell):
        t = run_protocol(spec, x)
        if spec.pattern is not None:
            assert_pattern(spec, x, t)
        worst = max(worst, t.total_bits)
        for key, bits in t.channel_totals().items():
            channels[key] = max(channels.get(key, 0), bits)
        rounds: dict[int, int] = {}
        for r in t.records:
            rounds[r.round] = rounds.get(r.round, 0) + len(r.payload)
        for rnd, bits in rounds.items():
            per_round[rnd] = max(per_round.get(rnd, 0), bits)
    return CostReport(worst, channels, per_round, size)


def check_symmetry(f: TruthTable, pi: Sequence[int] | None = None) -> bool:
    """True iff f(x) = f(x_pi(1), ..., x_pi(k)) for all inputs.

    ``pi`` is an image array over [k]; ``None`` quantifies over every
    permutation (full symmetry).
    """
    if pi is None:
        return all(check_symmetry(f, list(perm))
                   for perm in itertools.permutations(range(1, f.k + 1)))
    if sorted(pi) != list(range(1, f.k + 1)):
        raise DomainError(f"{pi} is not a permutation of [1,{f.k}]")
    words = ["".join(b) for b in itertools.product("01", repeat=f.n)]
    for args in itertools.product(words, repeat=f.k):
        permuted = tuple(args[pi[i] - 1] for i in range(f.k))
        if f.evaluate(args) != f.evaluate(permuted):
            return False
    return True


def board_outputs(board: Sequence[MessageRecord], ell: int) -> dict[int, int]:
    """Collect per-instance output bits from records tagged ``out:<i>``."""
    outputs: dict[int, int] = {}
    for r in board:
        if r.tag and r.tag.startswith("out:"):
            outputs[int(r.tag[4:])] = int(r.payload)
    if sorted(outputs) != list(range(1, ell + 1)):
        raise DomainError(f"board holds outputs for {sorted(outputs)}, "
                          f"expected instances 1..{ell}")
    return outputs
