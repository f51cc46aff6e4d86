"""Synthetic deduction problems with golden derivation chains.

The generator builds single-subject implication chains (one fact, ``hops``
rules) padded with distractor chains that share no predicates with the
main line, then renders everything through a small set of English surface
templates. Each problem records the golden chain a correct derivation
must walk, so the answer is always provable or refutable, never open.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .logic import (
    VAR,
    GoldenChain,
    KnowledgeBase,
    Literal,
    Rule,
    Step,
    Verdict,
    article,
    decide_query,
)

DEFAULT_DISTRACTORS = 2


# ---------------------------------------------------------------------------
# Lexicon
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lexicon:
    """Word pools for problem surface text.

    Nouns must pluralize with a bare "s" because the plural rule template
    appends one; anything irregular stays out of the pool.
    """

    names: tuple[str, ...]
    nouns: tuple[str, ...]
    adjectives: tuple[str, ...]


DEFAULT_LEXICON = Lexicon(
    names=(
        "alex", "max", "sam", "rex", "fae", "wren", "sally", "stella",
        "polly", "buddy", "luna", "milo", "oliver", "ruby", "felix",
        "daisy", "ziggy", "hazel", "gus", "ivy", "otto", "pearl", "finn",
        "coco", "jasper", "willow", "bella", "chester", "mabel", "teddy",
    ),
    nouns=(
        "cat", "dog", "feline", "canine", "snake", "reptile", "mammal",
        "vertebrate", "invertebrate", "animal", "carnivore", "herbivore",
        "cow", "horse", "rabbit", "squirrel", "lion", "tiger", "whale",
        "dolphin", "spider", "insect", "beetle", "moth", "wasp", "ant",
        "bird", "eagle", "owl", "falcon", "crow", "robin", "frog", "toad",
        "newt", "salamander", "lizard", "gecko", "iguana", "turtle",
        "crocodile", "alligator", "shark", "eel", "crab", "lobster",
        "shrimp", "snail", "slug", "worm", "rodent", "hamster", "gerbil",
        "ferret", "badger", "otter", "weasel", "raccoon", "skunk",
        "tapir", "llama", "alpaca", "camel", "donkey",
    ),
    adjectives=(
        "luminous", "sunny", "feisty", "aggressive", "angry", "fruity",
        "floral", "sweet", "bitter", "opaque", "transparent", "fast",
        "slow", "quiet", "loud", "gentle", "fierce", "timid", "bold",
        "clever", "dull", "bright", "dim", "smooth", "rough", "sleek",
        "fluffy", "spotted", "striped", "golden", "amber", "ancient",
        "youthful", "graceful", "clumsy", "nimble", "sturdy", "fragile",
        "glossy", "fragrant", "pungent", "mellow", "zesty", "earnest",
    ),
)


# ---------------------------------------------------------------------------
# Problem container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Problem:
    """One generated (or ingested) deduction problem.

    ``question`` holds the statement sheet, ``query_text`` the final
    "True or false: ..." sentence. ``chain_texts`` aligns one surface
    sentence with each golden-chain step. ``kb`` is populated by the
    generator and absent for problems read back from disk; ``chain`` may
    be None for ingested dumps that carry no golden chain (those records
    are scored for accuracy only).
    """

    id: str
    question: str
    query_text: str
    answer: bool
    hops: int
    chain: GoldenChain | None
    chain_texts: tuple[str, ...]
    kb: KnowledgeBase | None = None

    @property
    def full_text(self) -> str:
        """The statement sheet with the query as the final sentence."""
        return f"{self.question} {self.query_text}"


# ---------------------------------------------------------------------------
# Surface rendering
# ---------------------------------------------------------------------------


def _display_name(subject: str) -> str:
    return subject.capitalize()


def _is_phrase(predicate: str, negated: bool, adjectives: frozenset[str]) -> str:
    word = predicate.lower()
    neg = "not " if negated else ""
    if word in adjectives:
        return f"is {neg}{word}"
    return f"is {neg}{article(word)} {word}"


def _fact_sentence(fact: Literal, adjectives: frozenset[str]) -> str:
    return f"{_display_name(fact.subject)} {_is_phrase(fact.predicate, fact.negated, adjectives)}."


def _query_sentence(query: Literal, adjectives: frozenset[str]) -> str:
    return (
        f"True or false: {_display_name(query.subject)} "
        f"{_is_phrase(query.predicate, query.negated, adjectives)}."
    )


def _rule_sentence(rng: random.Random, rule: Rule, adjectives: frozenset[str]) -> str:
    ante = rule.antecedent.predicate.lower()
    cons = rule.consequent.predicate.lower()
    neg = "not " if rule.consequent.negated else ""
    cons_is_adj = cons in adjectives
    template = rng.randrange(3)
    if template < 2:
        quantifier = "Every" if template == 0 else "Each"
        phrase = f"{neg}{cons}" if cons_is_adj else f"{neg}{article(cons)} {cons}"
        return f"{quantifier} {ante} is {phrase}."
    plural_cons = cons if cons_is_adj else cons + "s"
    return f"{ante.capitalize()}s are {neg}{plural_cons}."


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _sample_pool(rng: random.Random, pool: tuple[str, ...], need: int, kind: str) -> list[str]:
    if need > len(pool):
        raise ValueError(f"lexicon exhausted: need {need} {kind}, pool has {len(pool)}")
    return rng.sample(pool, need)


def generate_problems(
    count: int,
    hops: int,
    distractors: int = DEFAULT_DISTRACTORS,
    seed: int = 0,
    lexicon: Lexicon = DEFAULT_LEXICON,
) -> list[Problem]:
    """Generate ``count`` problems requiring exactly ``hops`` rule applications.

    Deterministic for a fixed seed. Answers alternate True/False, query
    and rule-consequent negation are mixed in, and every problem's oracle
    verdict is True or False by construction.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if not 1 <= hops <= 3:
        raise ValueError("hops must be between 1 and 3")
    if distractors < 0:
        raise ValueError("distractors must be nonnegative")

    adjectives = frozenset(lexicon.adjectives)
    rng = random.Random(seed)
    problems: list[Problem] = []

    for index in range(count):
        answer = index % 2 == 0

        # Lay out the predicate demand before sampling so one draw per pool
        # keeps the stream deterministic.
        terminal_is_adj = rng.random() < 0.6
        distractor_plans: list[tuple[str, int, bool]] = []
        for _ in range(distractors):
            style = "entity" if rng.random() < 0.5 else "subject"
            length = rng.randint(1, hops)
            tail_is_adj = rng.random() < 0.4
            distractor_plans.append((style, length, tail_is_adj))

        noun_need = hops + (0 if terminal_is_adj else 1)
        adj_need = 1 if terminal_is_adj else 0
        for _, length, tail_is_adj in distractor_plans:
            noun_need += length + (0 if tail_is_adj else 1)
            adj_need += 1 if tail_is_adj else 0

        entity_count = 1 + sum(1 for style, _, _ in distractor_plans if style == "entity")
        names = _sample_pool(rng, lexicon.names, entity_count, "names")
        nouns = iter(_sample_pool(rng, lexicon.nouns, noun_need, "nouns"))
        adjs = iter(_sample_pool(rng, lexicon.adjectives, adj_need, "adjectives"))

        subject = names[0]
        main_preds = [next(nouns).capitalize() for _ in range(hops)]
        main_preds.append((next(adjs) if terminal_is_adj else next(nouns)).capitalize())
        terminal_negated = rng.random() < 0.3

        start_fact = Literal(main_preds[0], subject)
        main_rules: list[Rule] = []
        for k in range(hops):
            negated = terminal_negated and k == hops - 1
            main_rules.append(
                Rule(Literal(main_preds[k], VAR), Literal(main_preds[k + 1], VAR, negated))
            )
        terminal = Literal(main_preds[-1], subject, terminal_negated)
        query = terminal if answer else terminal.complement()

        # Distractor chains: fresh predicates throughout, attached either to
        # a fresh entity or to the main subject.
        extra_facts: list[Literal] = []
        extra_rules: list[Rule] = []
        entity_cursor = 1
        for style, length, tail_is_adj in distractor_plans:
            if style == "entity":
                d_subject = names[entity_cursor]
                entity_cursor += 1
            else:
                d_subject = subject
            preds = [next(nouns).capitalize() for _ in range(length)]
            preds.append((next(adjs) if tail_is_adj else next(nouns)).capitalize())
            extra_facts.append(Literal(preds[0], d_subject))
            for k in range(length):
                negated = tail_is_adj and k == length - 1 and rng.random() < 0.3
                extra_rules.append(
                    Rule(Literal(preds[k], VAR), Literal(preds[k + 1], VAR, negated))
                )

        rule_stmts = [(r, _rule_sentence(rng, r, adjectives)) for r in main_rules + extra_rules]
        fact_stmts = [(f, _fact_sentence(f, adjectives)) for f in [start_fact] + extra_facts]
        rng.shuffle(rule_stmts)
        rng.shuffle(fact_stmts)
        question = " ".join([s for _, s in rule_stmts] + [s for _, s in fact_stmts])

        rule_text = {id(r): s for r, s in rule_stmts}
        steps: list[Step] = [start_fact]
        texts: list[str] = [_fact_sentence(start_fact, adjectives)]
        carrier = start_fact
        for rule in main_rules:
            carrier = rule.consequent.bind(subject)
            steps.append(rule)
            texts.append(rule_text[id(rule)])
            steps.append(carrier)
            texts.append(_fact_sentence(carrier, adjectives))

        kb = KnowledgeBase(
            facts=tuple(f for f, _ in fact_stmts),
            rules=tuple(r for r, _ in rule_stmts),
            query=query,
        )
        problem = Problem(
            id=f"h{hops}-s{seed}-{index:04d}",
            question=question,
            query_text=_query_sentence(query, adjectives),
            answer=answer,
            hops=hops,
            chain=GoldenChain(tuple(steps)),
            chain_texts=tuple(texts),
            kb=kb,
        )
        problems.append(problem)
    return problems


# ---------------------------------------------------------------------------
# Concept renaming
# ---------------------------------------------------------------------------


def _present_symbols(problem: Problem) -> tuple[set[str], set[str]]:
    predicates: set[str] = set()
    names: set[str] = set()
    sources: list[Step] = list(problem.chain.steps) if problem.chain is not None else []
    if problem.kb is not None:
        sources += list(problem.kb.facts) + list(problem.kb.rules)
        if problem.kb.query is not None:
            sources.append(problem.kb.query)
    for step in sources:
        if isinstance(step, Rule):
            predicates.add(step.antecedent.predicate)
            predicates.add(step.consequent.predicate)
        else:
            predicates.add(step.predicate)
            names.add(step.subject)
    return predicates, names


def _rename_text(text: str, surface_map: dict[str, str]) -> str:
    """Simultaneously rename whole words, fixing articles and plurals."""
    if not surface_map:
        return text
    alternation = "|".join(
        re.escape(word) for word in sorted(surface_map, key=len, reverse=True)
    )
    pattern = re.compile(rf"\b(?:(an?|An?) +)?({alternation})(s?)\b", re.IGNORECASE)

    def substitute(match: re.Match[str]) -> str:
        art, word, plural = match.group(1), match.group(2), match.group(3)
        target = surface_map.get(word.lower())
        if target is None:
            return match.group(0)
        out = (target.capitalize() if word[:1].isupper() else target) + plural
        if art:
            new_art = article(target)
            if art[:1].isupper():
                new_art = new_art.capitalize()
            out = f"{new_art} {out}"
        return out

    return pattern.sub(substitute, text)


def _rename_literal(lit: Literal, pred_map: dict[str, str], name_map: dict[str, str]) -> Literal:
    subject = lit.subject if lit.subject == VAR else name_map.get(lit.subject, lit.subject)
    return Literal(pred_map.get(lit.predicate, lit.predicate), subject, lit.negated)


def rename_concepts(
    problem: Problem,
    predicate_map: dict[str, str] | None = None,
    name_map: dict[str, str] | None = None,
    strict: bool = False,
) -> Problem:
    """Consistently rename predicates and proper names across a problem.

    The mapping must be injective over the symbols actually present; with
    ``strict`` every present symbol must be mapped explicitly. The oracle
    verdict is invariant under any such renaming.
    """
    pred_map = {k.capitalize(): v.capitalize() for k, v in (predicate_map or {}).items()}
    name_map = {k.lower(): v.lower() for k, v in (name_map or {}).items()}

    predicates, names = _present_symbols(problem)
    for present, mapping, kind in ((predicates, pred_map, "predicate"), (names, name_map, "name")):
        applied = {symbol: mapping.get(symbol, symbol) for symbol in present}
        if strict:
            unmapped = sorted(symbol for symbol in present if symbol not in mapping)
            if unmapped:
                raise ValueError(f"strict renaming left {kind}s unmapped: {unmapped}")
        if len(set(applied.values())) != len(applied):
            raise ValueError(f"renaming is not injective over present {kind}s")

    def rename_step(step: Step) -> Step:
        if isinstance(step, Rule):
            return Rule(
                _rename_literal(step.antecedent, pred_map, name_map),
                _rename_literal(step.consequent, pred_map, name_map),
            )
        return _rename_literal(step, pred_map, name_map)

    surface_map = {k.lower(): v.lower() for k, v in pred_map.items()}
    surface_map.update(name_map)

    kb = problem.kb
    if kb is not None:
        kb = KnowledgeBase(
            facts=tuple(_rename_literal(f, pred_map, name_map) for f in kb.facts),
            rules=tuple(rename_step(r) for r in kb.rules),
            query=None if kb.query is None else _rename_literal(kb.query, pred_map, name_map),
            article_free=frozenset(pred_map.get(p, p) for p in kb.article_free),
        )
    return replace(
        problem,
        question=_rename_text(problem.question, surface_map),
        query_text=_rename_text(problem.query_text, surface_map),
        chain=None
        if problem.chain is None
        else GoldenChain(tuple(rename_step(s) for s in problem.chain.steps)),
        chain_texts=tuple(_rename_text(t, surface_map) for t in problem.chain_texts),
        kb=kb,
    )


# ---------------------------------------------------------------------------
# JSONL serialization
# ---------------------------------------------------------------------------


def _step_record(step: Step, text: str) -> dict:
    if isinstance(step, Rule):
        return {
            "kind": "rule",
            "text": text,
            "antecedent": step.antecedent.predicate,
            "consequent": step.consequent.predicate,
            "negated": step.consequent.negated,
        }
    return {
        "kind": "fact",
        "text": text,
        "predicate": step.predicate,
        "subject": step.subject,
        "negated": step.negated,
    }


def _step_from_record(record: dict) -> Step:
    if record["kind"] == "rule":
        return Rule(
            Literal(record["antecedent"], VAR),
            Literal(record["consequent"], VAR, bool(record.get("negated", False))),
        )
    if record["kind"] == "fact":
        return Literal(
            record["predicate"], record["subject"], bool(record.get("negated", False))
        )
    raise ValueError(f"unknown chain step kind: {record.get('kind')!r}")


def problem_to_json(problem: Problem) -> dict:
    if problem.chain is None:
        chain_records: list[dict] = []
    else:
        chain_records = [
            _step_record(step, text)
            for step, text in zip(problem.chain.steps, problem.chain_texts)
        ]
    return {
        "id": problem.id,
        "question": problem.question,
        "query": problem.query_text,
        "answer": problem.answer,
        "hops": problem.hops,
        "chain": chain_records,
    }


def problem_from_json(record: dict) -> Problem:
    chain_records = record.get("chain") or []
    steps = tuple(_step_from_record(r) for r in chain_records)
    hops = record.get("hops")
    if hops is None:
        hops = (len(steps) - 1) // 2 if steps else 0
    return Problem(
        id=str(record["id"]),
        question=record["question"],
        query_text=record["query"],
        answer=bool(record["answer"]),
        hops=int(hops),
        chain=GoldenChain(steps) if steps else None,
        chain_texts=tuple(r.get("text", "") for r in chain_records),
        kb=None,
    )


def write_problems(path: str | Path, problems: list[Problem]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for problem in problems:
            handle.write(json.dumps(problem_to_json(problem)) + "\n")


def read_problems(path: str | Path) -> list[Problem]:
    problems = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                problems.append(problem_from_json(json.loads(line)))
    return problems


def oracle_answer(problem: Problem) -> bool:
    """Decide a generated problem with the forward-chaining oracle."""
    if problem.kb is None:
        raise ValueError("problem has no knowledge base attached")
    verdict = decide_query(problem.kb)
    if verdict not in (Verdict.TRUE, Verdict.FALSE):
        raise ValueError(f"generated problem decided {verdict.name}, expected TRUE or FALSE")
    return verdict is Verdict.TRUE
