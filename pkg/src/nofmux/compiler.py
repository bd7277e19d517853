"""Multiplexing transformations: permuted protocols, the general combiner,
the symmetric-function pipeline, and the myopic one-way combiner.

A compiled protocol is an ordinary NOF board protocol.  Each party honestly
reconstructs any message that was XOR-combined for it: it recomputes the
other combined messages from inputs it sees plus plainly-boarded history,
and strips them off the block.  A failed reconstruction raises
SoundnessError; it cannot happen when the certificate validates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .combinatorics import (
    BindingTriplet, FilteringTriplet, MatrixA, MultiplexTriplet, Permutation,
    build_matrix_a, filtering_to_multiplexing, is_multiplexing_set,
    is_repetitive_set,
)
from .core import (
    BOARD, BudgetError, CertificateError, CommPattern, DEFAULT_BUDGET,
    DomainError, InputMatrix, LegalityError, MessageRecord, Model,
    ObliviousnessError, Outgoing, ProtocolSpec, RestrictionGraph,
    RobustnessError, SoundnessError, TruthTable, View, check_symmetry,
    domain_size, run_protocol, xor_bits,
)
from .verifier import check_prefix_free


class Bound(NamedTuple):
    """Predicted worst-case bits: payload plus output distribution."""
    total: int
    payload: int


@dataclass(frozen=True)
class CompilationPlan:
    """Everything the combiners need, plus enough to predict the bound.

    ``path`` is one of t1 (general multiplexing), t2 (symmetric-function
    pipeline), t3 (myopic, possibly non-oblivious), c2 (myopic oblivious).
    """

    path: str
    ell: int
    perms: tuple[Permutation, ...]
    protocols: tuple[ProtocolSpec, ...]
    certificate: tuple
    graph: RestrictionGraph | None = None

    def __post_init__(self) -> None:
        if self.path not in ("t1", "t2", "t3", "c2"):
            raise DomainError(f"unknown theorem path {self.path!r}")
        if not (len(self.perms) == len(self.protocols) == self.ell):
            raise DomainError("plan needs one permutation and one protocol "
                              "per instance")


# ---------------------------------------------------------------------------
# permuted protocols and pattern robustness
# ---------------------------------------------------------------------------

def permute_protocol(spec: ProtocolSpec, pi: Permutation) -> ProtocolSpec:
    """pi(Q): party i plays pi^-1(i)'s role, so the message i -> j on x
    equals Q's message pi^-1(i) -> pi^-1(j) on pi^-1(x)."""
    if spec.model is not Model.NOF_GRAPH or spec.ell != 1:
        raise DomainError("only single-instance point-to-point protocols "
                          "can be permuted")
    if pi.k != spec.k:
        raise DomainError("permutation arity mismatch")
    from .combinatorics import permute_graph
    inv = pi.inverse()
    graph = permute_graph(spec.graph, pi)

    def original_state(orig, views, inbox):
        view = View(orig, {q: views[1][pi(q)]
                           for q in spec.graph.neighbors(orig)})
        sub_inbox = tuple(
            MessageRecord(r.round, inv(r.sender), orig, r.payload,
                          r.protocol, r.tag) for r in inbox)
        return {1: view}, sub_inbox

    def next_message(p, t, views, inbox, board):
        orig = inv(p)
        sub_views, sub_inbox = original_state(orig, views, inbox)
        return [Outgoing(pi(o.recipient), o.payload, o.protocol, o.tag)
                for o in spec.next_message(orig, t, sub_views, sub_inbox,
                                           None)]

    def output_rule(views, inbox, board):
        sub_views, sub_inbox = original_state(spec.output_party, views, inbox)
        return spec.output_rule(sub_views, sub_inbox, None)

    return ProtocolSpec(
        name=f"{spec.name}@{pi.image}", model=Model.NOF_GRAPH, k=spec.k,
        n=spec.n, ell=1, rounds=spec.rounds, next_message=next_message,
        output_party=pi(spec.output_party), output_rule=output_rule,
        graph=graph,
        pattern=None if spec.pattern is None else spec.pattern.permuted(pi))


def check_pattern_robust(base: ProtocolSpec, other: ProtocolSpec,
                         pi: Permutation) -> bool:
    """True iff the two declared patterns agree up to relabeling by pi."""
    if base.pattern is None or other.pattern is None:
        raise ObliviousnessError("pattern robustness needs declared patterns "
                                 "on both protocols")
    return other.pattern == base.pattern.permuted(pi)


# ---------------------------------------------------------------------------
# Theorem 1 path: combine point-to-point protocols on the board
# ---------------------------------------------------------------------------

def _plain_tag(recipient: int) -> str:
    return f"to:{recipient}"


class _MuxGroup(NamedTuple):
    index: int
    sender: int
    components: tuple[tuple[int, int], ...]  # (protocol, recipient)


def multiplex_combine(plan: CompilationPlan) -> ProtocolSpec:
    """Run all instance protocols round-synchronously on the board, writing
    each certified message group as a single XOR word."""
    if plan.path not in ("t1", "t2"):
        raise DomainError("multiplex_combine handles the t1/t2 paths")
    if plan.graph is None:
        raise DomainError("plan needs the base restriction graph")
    protos, perms, ell = plan.protocols, plan.perms, plan.ell
    if not perms[0].is_identity():
        raise DomainError("the first permutation must be the identity")
    k, n, rounds = protos[0].k, protos[0].n, protos[0].rounds
    for u, q in enumerate(protos, start=1):
        if q.model is not Model.NOF_GRAPH or q.ell != 1:
            raise DomainError(f"protocol {u} is not a single-instance "
                              "point-to-point protocol")
        if (q.k, q.n, q.rounds) != (k, n, rounds):
            raise DomainError(f"protocol {u} disagrees on shape")
        if not check_pattern_robust(protos[0], q, perms[u - 1]):
            raise RobustnessError(
                f"protocol {u} does not match the base pattern under "
                f"{perms[u - 1].image}")
    cert = tuple(plan.certificate)
    verdict = is_multiplexing_set(cert, perms, plan.graph)
    if not verdict:
        raise CertificateError(verdict.reason)

    groups = []
    consumed: dict[tuple[int, int, int], _MuxGroup] = {}
    for gi, t in enumerate(cert):
        comps = ((1, t.b),) + tuple((r, perms[r - 1](t.b))
                                    for r in sorted(t.R))
        group = _MuxGroup(gi, t.a, comps)
        groups.append(group)
        for (u, rcpt) in comps:
            consumed[(u, t.a, rcpt)] = group

    def sub_view(party, u, views):
        try:
            return View(party, {q: views[u][q]
                                for q in protos[u - 1].graph.neighbors(party)})
        except LegalityError as exc:
            raise SoundnessError(
                f"reconstruction needs an input hidden from the "
                f"demultiplexing party: {exc}") from exc

    def find_mux_record(board, gi, rnd):
        for r in board:
            if r.round == rnd and r.tag == f"mux:{gi}":
                return r
        return None

    def reconstruct(u, sender, recipient, rnd, board, views):
        """Recompute Q_u's round-``rnd`` message sender -> recipient from
        the demultiplexing party's knowledge."""
        view = sub_view(sender, u, views)
        history = gather_inbox(sender, u, rnd, board, views, allow_mux=False)
        outs = protos[u - 1].next_message(sender, rnd, {1: view}, history,
                                          None)
        for o in outs:
            if o.recipient == recipient:
                return o.payload
        return ""

    def gather_inbox(party, u, upto, board, views, allow_mux):
        """Messages ``party`` received in Q_u before round ``upto``,
        demultiplexing its own XOR blocks where allowed."""
        msgs = []
        for r in board:
            if r.round >= upto:
                continue
            if r.protocol == u and r.tag == _plain_tag(party):
                msgs.append(MessageRecord(r.round, r.sender, party,
                                          r.payload))
            elif r.tag and r.tag.startswith("mux:"):
                group = groups[int(r.tag[4:])]
                if (u, party) not in group.components:
                    continue
                if not allow_mux:
                    raise SoundnessError(
                        f"history of party {party} in protocol {u} was "
                        f"multiplexed; certificate should forbid this")
                acc = r.payload
                for (u2, rcpt2) in group.components:
                    if (u2, rcpt2) == (u, party):
                        continue
                    other = reconstruct(u2, group.sender, rcpt2, r.round,
                                        board, views)
                    if len(other) != len(r.payload):
                        raise SoundnessError(
                            "combined messages have unequal lengths")
                    acc = xor_bits(acc, other)
                msgs.append(MessageRecord(r.round, group.sender, party, acc))
        return tuple(msgs)

    output_round = rounds + 1

    def next_message(p, t, views, inbox, board):
        if t > rounds:
            outs = []
            for u in range(1, ell + 1):
                if protos[u - 1].output_party != p:
                    continue
                view = sub_view(p, u, views)
                history = gather_inbox(p, u, t, board, views, allow_mux=True)
                bits = protos[u - 1].output_rule({1: view}, history, None)
                outs.append(Outgoing(BOARD, str(bits[1]), protocol=u,
                                     tag=f"out:{u}"))
            return outs
        staged: dict[int, dict[tuple[int, int], str]] = {}
        results = []
        for u in range(1, ell + 1):
            view = sub_view(p, u, views)
            history = gather_inbox(p, u, t, board, views, allow_mux=True)
            for o in protos[u - 1].next_message(p, t, {1: view}, history,
                                                None):
                group = consumed.get((u, p, o.recipient))
                if group is None:
                    results.append(Outgoing(BOARD, o.payload, protocol=u,
                                            tag=_plain_tag(o.recipient)))
                else:
                    staged.setdefault(group.index, {})[(u, o.recipient)] = \
                        o.payload
        for gi, parts in sorted(staged.items()):
            group = groups[gi]
            payloads = [parts.get(c, "") for c in group.components]
            width = max(len(w) for w in payloads)
            if any(w and len(w) != width for w in payloads):
                raise SoundnessError("combined messages have unequal lengths")
            acc = "0" * width
            for w in payloads:
                acc = xor_bits(acc, w or "0" * width)
            if width:
                results.append(Outgoing(BOARD, acc, tag=f"mux:{gi}"))
        return results

    def output_rule(views, inbox, board):
        from .core import board_outputs
        return board_outputs(board, ell)

    lengths: dict[tuple[int, int, int], int] = {}
    for u, q in enumerate(protos, start=1):
        for (t, i, j), v in q.pattern.lengths.items():
            group = consumed.get((u, i, j))
            if group is not None and (u, j) != group.components[0]:
                continue  # counted once, at the base component
            key = (t, i, BOARD)
            lengths[key] = lengths.get(key, 0) + v
    for u, q in enumerate(protos, start=1):
        key = (output_round, q.output_party, BOARD)
        lengths[key] = lengths.get(key, 0) + 1

    return ProtocolSpec(
        name=f"mux-{plan.path}[{protos[0].name} x{ell}]",
        model=Model.NOF_BOARD, k=k, n=n, ell=ell, rounds=output_round,
        next_message=next_message, output_party=1, output_rule=output_rule,
        pattern=CommPattern(lengths, output_round))


def compile_symmetric(spec: ProtocolSpec, f: TruthTable,
                      graph: RestrictionGraph,
                      triplets: Sequence[FilteringTriplet], ell: int,
                      budget: int = DEFAULT_BUDGET,
                      ) -> tuple[ProtocolSpec, CompilationPlan, MatrixA]:
    """Symmetric-function pipeline: build the permutation matrix from the
    filtering set, permute the one base protocol, and combine."""
    if not check_symmetry(f):
        raise DomainError("the symmetric pipeline needs a fully symmetric "
                          "function; relabeled protocols would be incorrect")
    if spec.model is not Model.NOF_GRAPH or spec.ell != 1:
        raise DomainError("base protocol must be single-instance "
                          "point-to-point")
    size = domain_size(spec.k, spec.n, 1)
    if size > budget:
        raise BudgetError(f"verifying the base protocol needs {size} runs")
    for x in _single_inputs(spec.k, spec.n):
        got = run_protocol(spec, x).outputs[1]
        want = f.values[x.index]
        if got != want:
            raise DomainError(
                f"base protocol disagrees with f at input index {x.index}")
    matrix = build_matrix_a(graph, ell, triplets)
    protos = tuple(
        spec if row.is_identity() else permute_protocol(spec, row)
        for row in matrix.rows)
    cert = filtering_to_multiplexing(triplets, matrix)
    plan = CompilationPlan(path="t2", ell=ell, perms=matrix.rows,
                           protocols=protos, certificate=cert, graph=graph)
    return multiplex_combine(plan), plan, matrix


def _single_inputs(k: int, n: int):
    from .core import enumerate_inputs
    return enumerate_inputs(k, n, 1)


# ---------------------------------------------------------------------------
# Theorem 3 path: combine myopic chains
# ---------------------------------------------------------------------------

def myopic_combine(protocols: Sequence[ProtocolSpec],
                   perms: Sequence[Permutation],
                   triplets: Sequence[BindingTriplet],
                   budget: int = DEFAULT_BUDGET) -> ProtocolSpec:
    """Combine one-way chains on the board, XOR-writing the certified
    position messages zero-padded to the longest of their group.

    Chains need not be oblivious; recipients self-delimit their decoded
    message by prefix-freeness.
    """
    protos = tuple(protocols)
    perms = tuple(perms)
    ell = len(protos)
    if len(perms) != ell or ell == 0:
        raise DomainError("need one chain permutation per protocol")
    k, n = protos[0].k, protos[0].n
    for u, q in enumerate(protos, start=1):
        if q.model is not Model.MYOPIC or q.ell != 1:
            raise DomainError(f"protocol {u} is not a single-instance "
                              "myopic chain")
        if (q.k, q.n) != (k, n):
            raise DomainError(f"protocol {u} disagrees on shape")
        if q.chain != perms[u - 1].image:
            raise DomainError(f"protocol {u} does not follow permutation "
                              f"{perms[u - 1].image}")
    cert = tuple(triplets)
    verdict = is_repetitive_set(cert, perms)
    if not verdict:
        raise CertificateError(verdict.reason)
    for t in cert:
        for u in sorted(t.U):
            if not check_prefix_free(protos[u - 1], t.pos, budget):
                raise DomainError(
                    f"protocol {u} is not prefix-free at position {t.pos}")

    groups = []
    consumed: dict[tuple[int, int], _MuxGroup] = {}
    for gi, t in enumerate(cert):
        comps = tuple((u, perms[u - 1](t.pos + 1)) for u in sorted(t.U))
        group = _MuxGroup(gi, t.s, comps)
        groups.append(group)
        for u in t.U:
            consumed[(t.pos, u)] = group

    chain_rounds = k - 1
    words = ["".join(b) for b in itertools.product("01", repeat=n)]

    def chain_view(party, u, views, override=None):
        vis = protos[u - 1].visibility().neighbors(party)
        visible = {}
        for q in vis:
            if override is not None and q == override[0]:
                visible[q] = override[1]
            else:
                visible[q] = views[u][q]
        return View(party, visible)

    def position_of(party, u):
        return perms[u - 1].image.index(party) + 1

    def find_record(board, rnd, pred):
        for r in board:
            if r.round == rnd and pred(r):
                return r
        return None

    def sender_message(u, pos, board, views, override=None):
        """Recompute the chain-u message sent at position pos, seen from a
        party that knows the sender's view (modulo the override) and its
        plainly-boarded inbox."""
        sender = perms[u - 1](pos)
        try:
            view = chain_view(sender, u, views, override)
        except LegalityError as exc:
            raise SoundnessError(str(exc)) from exc
        history = chain_inbox(sender, u, pos, board, views, allow_mux=False)
        outs = protos[u - 1].next_message(sender, pos, {1: view}, history,
                                          None)
        return outs[0].payload if outs else ""

    def chain_inbox(party, u, upto, board, views, allow_mux):
        pos = position_of(party, u)
        rnd = pos - 1
        if rnd < 1 or rnd >= upto:
            return ()
        plain = find_record(
            board, rnd, lambda r: r.protocol == u and
            r.tag == _plain_tag(party))
        if plain is not None:
            return (MessageRecord(rnd, perms[u - 1](rnd), party,
                                  plain.payload),)
        group = consumed.get((rnd, u))
        if group is None:
            return ()
        if not allow_mux:
            raise SoundnessError(
                f"history of party {party} in chain {u} was multiplexed; "
                f"certificate should forbid this")
        block = find_record(board, rnd,
                            lambda r: r.tag == f"mux:{group.index}")
        if block is None:
            return ()
        payload = decode_block(party, u, rnd, group, block, board, views)
        return (MessageRecord(rnd, group.sender, party, payload),)

    def decode_block(party, u, pos, group, block, board, views):
        remainder = block.payload
        width = len(remainder)
        for (u2, rcpt2) in group.components:
            if u2 == u:
                continue
            other = sender_message(u2, pos, board, views)
            if len(other) > width:
                raise SoundnessError("combined message longer than block")
            remainder = xor_bits(remainder, other.ljust(width, "0"))
        candidates = {sender_message(u, pos, board, views,
                                     override=(party, w)) for w in words}
        matches = [c for c in candidates if remainder.startswith(c)]
        if len(matches) != 1:
            raise SoundnessError(
                f"prefix decoding found {len(matches)} candidates")
        own = matches[0]
        if remainder[len(own):].strip("0"):
            raise SoundnessError("nonzero bits past the decoded message")
        return own

    def next_message(p, t, views, inbox, board):
        if t > chain_rounds:
            outs = []
            for u in range(1, ell + 1):
                if perms[u - 1](k) != p:
                    continue
                view = chain_view(p, u, views)
                history = chain_inbox(p, u, t, board, views, allow_mux=True)
                bits = protos[u - 1].output_rule({1: view}, history, None)
                outs.append(Outgoing(BOARD, str(bits[1]), protocol=u,
                                     tag=f"out:{u}"))
            return outs
        staged: dict[int, dict[int, str]] = {}
        results = []
        for u in range(1, ell + 1):
            if perms[u - 1](t) != p:
                continue
            view = chain_view(p, u, views)
            history = chain_inbox(p, u, t, board, views, allow_mux=True)
            outs = protos[u - 1].next_message(p, t, {1: view}, history, None)
            payload = outs[0].payload if outs else ""
            group = consumed.get((t, u))
            if group is None:
                if payload:
                    results.append(Outgoing(BOARD, payload, protocol=u,
                                            tag=_plain_tag(perms[u - 1](t + 1))))
            else:
                staged.setdefault(group.index, {})[u] = payload
        for gi, parts in sorted(staged.items()):
            group = groups[gi]
            payloads = [parts.get(u, "") for (u, _) in group.components]
            width = max(len(w) for w in payloads)
            acc = "0" * width
            for w in payloads:
                acc = xor_bits(acc, w.ljust(width, "0"))
            if width:
                results.append(Outgoing(BOARD, acc, tag=f"mux:{gi}"))
        return results

    def output_rule(views, inbox, board):
        from .core import board_outputs
        return board_outputs(board, ell)

    return ProtocolSpec(
        name=f"mux-t3[{protos[0].name} x{ell}]", model=Model.NOF_BOARD,
        k=k, n=n, ell=ell, rounds=chain_rounds + 1,
        next_message=next_message, output_party=1, output_rule=output_rule)


# ---------------------------------------------------------------------------
# predicted bounds
# ---------------------------------------------------------------------------

def predicted_bound(plan: CompilationPlan,
                    budget: int = DEFAULT_BUDGET) -> Bound:
    """Closed-form worst-case bound for the plan's theorem path."""
    if plan.path in ("t1", "t2"):
        base = plan.protocols[0].pattern
        if base is None:
            raise ObliviousnessError("t1/t2 bounds need an oblivious base")
        savings = sum(len(t.R) * base.channel_bits(t.a, t.b)
                      for t in plan.certificate)
        payload = plan.ell * base.total_bits() - savings
        return Bound(payload + plan.ell, payload)
    if plan.path == "c2":
        return _corollary2_bound(plan)
    return _theorem3_bound(plan, budget)


def _corollary2_bound(plan: CompilationPlan) -> Bound:
    patterns = [q.pattern for q in plan.protocols]
    if any(p is None for p in patterns):
        raise ObliviousnessError("the c2 bound needs oblivious chains")
    k = plan.protocols[0].k
    per_position = [patterns[0].length(t, plan.perms[0](t),
                                       plan.perms[0](t + 1))
                    for t in range(1, k)]
    for u, q in enumerate(plan.protocols, start=1):
        pi = plan.perms[u - 1]
        got = [patterns[u - 1].length(t, pi(t), pi(t + 1))
               for t in range(1, k)]
        if got != per_position:
            raise RobustnessError(f"chain {u} has a different per-position "
                                  "pattern")
    savings = sum((len(t.U) - 1) * per_position[t.pos - 1]
                  for t in plan.certificate)
    payload = plan.ell * sum(per_position) - savings
    return Bound(payload + plan.ell, payload)


def _theorem3_bound(plan: CompilationPlan, budget: int) -> Bound:
    """Worst case over all inputs of total chain cost minus the per-group
    (total - max) savings, evaluated by enumeration."""
    k, n, ell = plan.protocols[0].k, plan.protocols[0].n, plan.ell
    single = domain_size(k, n, 1)
    if single ** ell > budget:
        raise BudgetError(
            f"the t3 bound enumerates {single ** ell} inputs, budget is "
            f"{budget}")
    costs = []  # costs[u-1][idx][pos-1]
    for q in plan.protocols:
        per_input = []
        for idx in range(single):
            x = InputMatrix.from_index(idx, k, n, 1)
            transcript = run_protocol(q, x)
            vec = [0] * (k - 1)
            for r in transcript.records:
                vec[r.round - 1] += len(r.payload)
            per_input.append(vec)
        costs.append(per_input)
    worst = 0
    for combo in itertools.product(range(single), repeat=ell):
        total = sum(sum(costs[u][combo[u]]) for u in range(ell))
        for t in plan.certificate:
            lens = [costs[u - 1][combo[u - 1]][t.pos - 1] for u in sorted(t.U)]
            total -= sum(lens) - max(lens)
        worst = max(worst, total)
    return Bound(worst + ell, worst)
