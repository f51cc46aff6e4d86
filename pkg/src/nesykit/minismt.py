"""Minimal SMT-LIB v2 solver for quantified Boolean predicates over finite domains.

Covers the fragment the knowledge-base compiler emits: uninterpreted
sorts, 0-ary sort constants, Bool-valued predicates, and assertions built
from not/=>/and/or/xor with forall/exists quantifiers. Quantifiers are
grounded over the declared constants of their sort (a fresh witness
constant stands in for an empty sort, since SMT-LIB sorts are nonempty),
the result is Tseitin-encoded to CNF, and a plain DPLL search decides it.

Runs as a subprocess: reads a program from stdin (or a file argument),
prints one sat/unsat line per check-sat. Kept free of package imports so
it stays usable as a standalone solver binary.

Intentionally out of scope: theories, models, incremental push/pop.
"""

from __future__ import annotations

import sys


class SolverInputError(Exception):
    """Malformed or unsupported input; message avoids echoing raw symbols."""


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            tokens.append(ch)
            i += 1
        elif ch in '"|':
            closer = text.find(ch, i + 1)
            if closer < 0:
                raise SolverInputError("unterminated string or quoted symbol")
            tokens.append(text[i : closer + 1])
            i = closer + 1
        else:
            j = i
            while j < n and text[j] not in ' \t\r\n();"|':
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def parse_sexprs(tokens: list[str]) -> list:
    """Parse a token stream into a list of nested lists/atoms."""
    forms: list = []
    stack: list[list] = []
    for token in tokens:
        if token == "(":
            stack.append([])
        elif token == ")":
            if not stack:
                raise SolverInputError("unbalanced closing parenthesis")
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                forms.append(done)
        else:
            if stack:
                stack[-1].append(token)
            else:
                forms.append(token)
    if stack:
        raise SolverInputError("unexpected end of input inside a form")
    return forms


# ---------------------------------------------------------------------------
# Grounding
# ---------------------------------------------------------------------------

_CONNECTIVES = {"not", "=>", "and", "or", "xor"}
_QUANTIFIERS = {"forall", "exists"}


class Solver:
    def __init__(self) -> None:
        self.sorts: set[str] = set()
        self.consts: dict[str, str] = {}  # constant name -> sort
        self.preds: dict[str, list[str]] = {}  # predicate name -> argument sorts
        self.assertions: list = []
        self._witnesses: dict[str, str] = {}  # empty-sort fresh constants

    # -- declarations -------------------------------------------------------

    def declare_sort(self, name: str, arity: str) -> None:
        if arity not in ("0", 0):
            raise SolverInputError("only arity-0 sorts are supported")
        self.sorts.add(name)

    def declare_fun(self, name: str, arg_sorts: list, ret: str) -> None:
        if name in self.consts or name in self.preds:
            raise SolverInputError("duplicate declaration")
        if ret == "Bool":
            for sort in arg_sorts:
                if sort not in self.sorts:
                    raise SolverInputError("predicate argument uses an undeclared sort")
            self.preds[name] = list(arg_sorts)
        elif ret in self.sorts:
            if arg_sorts:
                raise SolverInputError("only 0-ary functions into uninterpreted sorts")
            self.consts[name] = ret
        else:
            raise SolverInputError("function return sort is not declared")

    # -- universe -------------------------------------------------------------

    def _universe(self, sort: str) -> list[str]:
        members = [c for c, s in self.consts.items() if s == sort]
        if not members:
            # SMT-LIB sorts are nonempty; give the quantifier one witness.
            witness = self._witnesses.setdefault(sort, f"@w{len(self._witnesses)}")
            members = [witness]
        return members

    # -- term grounding -------------------------------------------------------

    def ground(self, term, env: dict[str, str]):
        """Rewrite a term into ('atom', key) / ('not'|'and'|'or', ...) nodes."""
        if isinstance(term, str):
            if term == "true":
                return ("and",)
            if term == "false":
                return ("or",)
            if term in env or term in self.consts:
                raise SolverInputError("sort-valued term where Bool was expected")
            if term in self.preds:
                if self.preds[term]:
                    raise SolverInputError("predicate used without its arguments")
                return ("atom", (term,))
            raise SolverInputError("reference to an undeclared symbol")
        if not term:
            raise SolverInputError("empty application")
        head = term[0]
        if head in _QUANTIFIERS:
            return self._ground_quantifier(head, term, env)
        if head == "not":
            if len(term) != 2:
                raise SolverInputError("'not' takes exactly one argument")
            return ("not", self.ground(term[1], env))
        if head == "=>":
            if len(term) < 3:
                raise SolverInputError("'=>' takes at least two arguments")
            result = self.ground(term[-1], env)
            for part in reversed(term[1:-1]):
                result = ("or", ("not", self.ground(part, env)), result)
            return result
        if head in ("and", "or"):
            return (head, *[self.ground(part, env) for part in term[1:]])
        if head == "xor":
            if len(term) != 3:
                raise SolverInputError("'xor' takes exactly two arguments")
            a, b = self.ground(term[1], env), self.ground(term[2], env)
            return ("or", ("and", a, ("not", b)), ("and", ("not", a), b))
        if head in self.preds:
            expected = self.preds[head]
            args = term[1:]
            if len(args) != len(expected):
                raise SolverInputError("predicate applied to the wrong argument count")
            resolved = []
            for arg, sort in zip(args, expected):
                if not isinstance(arg, str):
                    raise SolverInputError("nested function arguments are unsupported")
                constant = env.get(arg, arg)
                actual = self.consts.get(constant)
                if actual is None and constant not in self._witnesses.values():
                    raise SolverInputError("predicate argument is not a known constant")
                if actual is not None and actual != sort:
                    raise SolverInputError("predicate argument has the wrong sort")
                resolved.append(constant)
            return ("atom", (head, *resolved))
        raise SolverInputError("unsupported operator in term")

    def _ground_quantifier(self, head: str, term, env: dict[str, str]):
        if len(term) != 3 or not isinstance(term[1], list):
            raise SolverInputError("malformed quantifier")
        binders = []
        for binder in term[1]:
            if not (isinstance(binder, list) and len(binder) == 2):
                raise SolverInputError("malformed quantifier binder")
            var, sort = binder
            if sort not in self.sorts:
                raise SolverInputError("quantifier over an undeclared sort")
            binders.append((var, self._universe(sort)))

        def expand(index: int, scope: dict[str, str]):
            if index == len(binders):
                return self.ground(term[2], scope)
            var, universe = binders[index]
            parts = []
            for member in universe:
                inner = dict(scope)
                inner[var] = member
                parts.append(expand(index + 1, inner))
            return ("and" if head == "forall" else "or", *parts)

        return expand(0, env)

    # -- CNF + DPLL -----------------------------------------------------------

    def check_sat(self) -> str:
        atom_ids: dict[tuple, int] = {}
        clauses: list[list[int]] = []
        counter = [0]

        def fresh() -> int:
            counter[0] += 1
            return counter[0]

        def atom_var(key: tuple) -> int:
            if key not in atom_ids:
                counter[0] += 1
                atom_ids[key] = counter[0]
            return atom_ids[key]

        def encode(node) -> int:
            """Tseitin encoding; returns the literal equivalent to the node."""
            kind = node[0]
            if kind == "atom":
                return atom_var(node[1])
            if kind == "not":
                return -encode(node[1])
            parts = [encode(child) for child in node[1:]]
            if kind == "and":
                if not parts:
                    return _TRUE
                gate = fresh()
                for lit in parts:
                    clauses.append([-gate, lit])
                clauses.append([gate] + [-lit for lit in parts])
                return gate
            if kind == "or":
                if not parts:
                    return -_TRUE
                gate = fresh()
                clauses.append([-gate] + parts)
                for lit in parts:
                    clauses.append([gate, -lit])
                return gate
            raise SolverInputError("internal: unexpected node kind")

        _TRUE = fresh()
        clauses.append([_TRUE])
        for assertion in self.assertions:
            clauses.append([encode(self.ground(assertion, {}))])
        return "sat" if _dpll(clauses, {}) else "unsat"


def _dpll(clauses: list[list[int]], assignment: dict[int, bool]) -> bool:
    while True:
        unit = None
        for clause in clauses:
            unassigned = []
            satisfied = False
            for lit in clause:
                value = assignment.get(abs(lit))
                if value is None:
                    unassigned.append(lit)
                elif value == (lit > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if not unassigned:
                return False
            if len(unassigned) == 1:
                unit = unassigned[0]
                break
        if unit is None:
            break
        assignment[abs(unit)] = unit > 0

    pick = None
    for clause in clauses:
        satisfied = any(assignment.get(abs(l)) == (l > 0) for l in clause)
        if satisfied:
            continue
        for lit in clause:
            if abs(lit) not in assignment:
                pick = abs(lit)
                break
        if pick is not None:
            break
    if pick is None:
        return True
    for value in (True, False):
        trial = dict(assignment)
        trial[pick] = value
        if _dpll(clauses, trial):
            return True
    return False


# ---------------------------------------------------------------------------
# Command loop
# ---------------------------------------------------------------------------

_IGNORED_COMMANDS = {"set-logic", "set-info", "set-option", "echo"}


def run_program(text: str, out) -> None:
    solver = Solver()
    for form in parse_sexprs(tokenize(text)):
        if not isinstance(form, list) or not form:
            raise SolverInputError("top-level input must be command forms")
        command = form[0]
        if command in _IGNORED_COMMANDS:
            continue
        if command == "declare-sort":
            if len(form) != 3:
                raise SolverInputError("declare-sort takes a name and an arity")
            solver.declare_sort(form[1], form[2])
        elif command == "declare-const":
            if len(form) != 3:
                raise SolverInputError("declare-const takes a name and a sort")
            solver.declare_fun(form[1], [], form[2])
        elif command == "declare-fun":
            if len(form) != 4 or not isinstance(form[2], list):
                raise SolverInputError("declare-fun takes a name, argument sorts, a sort")
            solver.declare_fun(form[1], form[2], form[3])
        elif command == "assert":
            if len(form) != 2:
                raise SolverInputError("assert takes exactly one term")
            solver.assertions.append(form[1])
        elif command == "check-sat":
            out.write(solver.check_sat() + "\n")
            out.flush()
        elif command == "exit":
            return
        else:
            raise SolverInputError("unsupported command")


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if args and args[0] in ("-h", "--help"):
        print(__doc__)
        return 0
    try:
        if args and args[0] != "-":
            with open(args[0], encoding="utf-8") as handle:
                text = handle.read()
        else:
            text = sys.stdin.read()
        run_program(text, sys.stdout)
    except SolverInputError as exc:
        sys.stdout.write(f'(error "{exc}")\n')
        return 1
    except RecursionError:
        sys.stdout.write('(error "formula too deep")\n')
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
