"""Set-semantics evaluation of every query language, and the bounded equivalence oracle.

Queries are compiled once against a schema into closures and then run on many
databases, which is what the oracle does.
"""
from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

from .errors import SafetyError, SchemaError, TypeFault
from .model import (DEFAULT_CEILING, CompOp, Database, Schema, Value, count_databases,
                    enumerate_databases, sort_domain, sorted_rows, value_key)
from .syntax import (And, Atom, AttrRef, Binding, Builtin, ColRef, Const, DatalogProgram, Exists,
                     Formula, Join, Literal, Minus, Not, Or, OutputSpec, Product, Project, RaExpr,
                     RawTrcQuery, Rel, Rename, Select, SqlQuery, TrcPred, TrcQuery, UnionQuery,
                     Union_, Var, scope_to_formula)

_OPS = {
    CompOp.EQ: operator.eq, CompOp.NEQ: operator.ne, CompOp.LT: operator.lt,
    CompOp.LEQ: operator.le, CompOp.GT: operator.gt, CompOp.GEQ: operator.ge,
}


def _checked(opf):
    def cmp(a, b):
        if type(a) is not type(b):
            raise TypeFault(f"cannot compare {a!r} with {b!r}")
        return opf(a, b)
    return cmp


_CMP = {op: _checked(f) for op, f in _OPS.items()}


@dataclass(frozen=True)
class Relation:
    """Query result: attribute names plus a set of tuples. Equality looks at rows only."""

    attrs: tuple[str, ...]
    rows: frozenset = field(compare=True)

    def __eq__(self, other):
        if isinstance(other, Relation):
            return self.rows == other.rows
        return NotImplemented

    def __hash__(self):
        return hash(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(sorted_rows(self.rows))

    def to_json(self) -> dict:
        return {"attrs": list(self.attrs), "rows": [list(r) for r in sorted_rows(self.rows)]}


Result = Union[Relation, bool]

# ---------------------------------------------------------------------------
# TRC
# ---------------------------------------------------------------------------


class _Slots:
    def __init__(self):
        self.count = 0

    def new(self) -> int:
        self.count += 1
        return self.count - 1


def _flatten_and(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out = []
        for i in f.items:
            out.extend(_flatten_and(i))
        return out
    return [f]


class _TrcCompiler:
    def __init__(self, schema: Schema, output: Optional[OutputSpec]):
        self.schema = schema
        self.slots = _Slots()
        self.output = output
        self.out_slot = self.slots.new() if output else None

    def ref(self, r: AttrRef, env: dict[str, tuple[int, str]]):
        if self.output is not None and r.var == self.output.name:
            return self.out_slot, self.output.attrs.index(r.attr)
        try:
            slot, rel = env[r.var]
        except KeyError:
            raise SchemaError(f"variable {r.var!r} is not in scope") from None
        return slot, self.schema.index(rel, r.attr)

    def pred(self, p: TrcPred, env) -> Callable:
        ls, li = self.ref(p.lhs, env)
        cmp = _CMP[p.op]
        if isinstance(p.rhs, AttrRef):
            rs, ri = self.ref(p.rhs, env)
            return lambda e: cmp(e[ls][li], e[rs][ri])
        c = p.rhs
        return lambda e: cmp(e[ls][li], c)

    def formula(self, f: Formula, env) -> Callable:
        """Compile ``f`` into ``fn(db, e) -> bool``."""
        if isinstance(f, TrcPred):
            p = self.pred(f, env)
            return lambda db, e: p(e)
        if isinstance(f, Not):
            inner = self.formula(f.body, env)
            return lambda db, e: not inner(db, e)
        if isinstance(f, Or):
            parts = [self.formula(i, env) for i in f.items]
            return lambda db, e: any(p(db, e) for p in parts)
        if isinstance(f, And):
            parts = [self.formula(i, env) for i in _flatten_and(f)]
            return lambda db, e: all(p(db, e) for p in parts)
        return self.exists(f.vars, f.body, env, None)

    def exists(self, bindings, body: Formula, env, collect) -> Callable:
        """Nested-loop search over ``bindings``.

        Predicates are checked as soon as their variables are bound; other conjuncts
        run once all variables are bound. With ``collect`` the search visits every
        solution and calls ``collect(e)`` instead of stopping at the first.
        """
        env = dict(env)
        levels = []
        for b in bindings:
            if b.relation not in self.schema:
                raise SchemaError(f"unknown relation {b.relation!r}")
            slot = self.slots.new()
            env[b.var] = (slot, b.relation)
            levels.append([slot, b.relation, []])
        local = {b.var: i for i, b in enumerate(bindings)}
        pre, late = [], []
        for item in _flatten_and(body):
            if isinstance(item, TrcPred):
                idx = [local[v] for v in item.vars() if v in local]
                fn = self.pred(item, env)
                if idx:
                    levels[max(idx)][2].append(fn)
                else:
                    pre.append(fn)
            else:
                late.append(self.formula(item, env))
        n = len(levels)
        levels = [tuple(x) for x in levels]

        def search(db, e, i):
            if i == n:
                if all(fn(db, e) for fn in late):
                    if collect is None:
                        return True
                    collect(e)
                return False
            slot, rel, preds = levels[i]
            for row in db[rel]:
                e[slot] = row
                if all(p(e) for p in preds) and search(db, e, i + 1):
                    return True
            return False

        def run(db, e):
            if not all(p(e) for p in pre):
                return False
            return search(db, e, 0)

        run.env = env
        return run


def _output_positions(q: RawTrcQuery, schema: Schema):
    """If every output reference is a top-level root equality ``Q.A = v.B``, return them."""
    f = q.formula
    bindings: list[Binding] = []
    items = _flatten_and(f)
    while len(items) == 1 and isinstance(items[0], Exists):
        bindings.extend(items[0].vars)
        items = _flatten_and(items[0].body)
    name = q.output.name
    found: dict[str, AttrRef] = {}
    rest = []
    for item in items:
        if isinstance(item, TrcPred) and any(r.var == name for r in item.refs()):
            other = [r for r in item.refs() if r.var != name]
            mine = [r for r in item.refs() if r.var == name]
            if item.op is not CompOp.EQ or len(other) != 1 or len(mine) != 1 or mine[0].attr in found:
                return None
            found[mine[0].attr] = other[0]
        else:
            rest.append(item)
    if set(found) != set(q.output.attrs) or _mentions(And(tuple(rest)), name):
        return None
    return bindings, And(tuple(rest)), [found[a] for a in q.output.attrs]


def _mentions(f: Formula, var: str) -> bool:
    if isinstance(f, TrcPred):
        return var in f.vars()
    if isinstance(f, (Exists, Not)):
        return _mentions(f.body, var)
    return any(_mentions(i, var) for i in f.items)


def _adom(db: Database, consts: Iterable[Value]) -> list[Value]:
    vals = set(consts)
    for rows in db.relations.values():
        for r in rows:
            vals.update(r)
    return sorted(vals, key=value_key)


class CompiledTrc:
    """A TRC query (canonical, raw or union) compiled against a schema."""

    def __init__(self, q: Union[TrcQuery, RawTrcQuery, UnionQuery], schema: Schema):
        self.schema = schema
        if isinstance(q, UnionQuery):
            self.parts = [CompiledTrc(c, schema) for c in q.cells]
            self.output = q.cells[0].output
            return
        self.parts = None
        raw = q if isinstance(q, RawTrcQuery) else RawTrcQuery(scope_to_formula(q.root), q.output)
        self.output = raw.output
        comp = _TrcCompiler(schema, raw.output)
        self.nslots = None
        if raw.output is None:
            self.fn = comp.formula(raw.formula, {})
            self.mode = "sentence"
        else:
            fast = _output_positions(raw, schema)
            if fast is not None:
                bindings, body, refs = fast
                self.rows: set = set()

                def collect(e):
                    self.rows.add(tuple(e[s][i] for s, i in self._out))

                self.fn = comp.exists(tuple(bindings), body, {}, collect)
                self._out = [comp.ref(r, self.fn.env) for r in refs]
                self.mode = "collect"
            else:
                self.fn = comp.formula(raw.formula, {})
                self.mode = "candidates"
                self._consts = _formula_constants(raw.formula)
        self.nslots = comp.slots.count

    def run(self, db: Database) -> Result:
        if self.parts is not None:
            results = [p.run(db) for p in self.parts]
            if self.output is None:
                return any(results)
            rows = frozenset().union(*(r.rows for r in results))
            return Relation(self.output.attrs, rows)
        e = [None] * self.nslots
        rels = db.relations
        if self.mode == "sentence":
            return bool(self.fn(rels, e))
        if self.mode == "collect":
            self.rows = set()
            self.fn(rels, e)
            return Relation(self.output.attrs, frozenset(self.rows))
        dom = _adom(db, self._consts)
        rows = set()
        for cand in itertools.product(dom, repeat=len(self.output.attrs)):
            e[0] = cand
            try:
                if self.fn(rels, e):
                    rows.add(cand)
            except TypeFault:
                continue
        return Relation(self.output.attrs, frozenset(rows))


def _formula_constants(f: Formula) -> set:
    if isinstance(f, TrcPred):
        return set() if isinstance(f.rhs, AttrRef) else {f.rhs}
    if isinstance(f, (Exists, Not)):
        return _formula_constants(f.body)
    out = set()
    for i in f.items:
        out |= _formula_constants(i)
    return out


def eval_trc(q: Union[TrcQuery, RawTrcQuery, UnionQuery], db: Database) -> Result:
    if isinstance(q, TrcQuery):
        from .canon import check_safe
        check_safe(q)
    return CompiledTrc(q, db.schema).run(db)


# ---------------------------------------------------------------------------
# Datalog
# ---------------------------------------------------------------------------


class CompiledDatalog:
    def __init__(self, p: DatalogProgram, schema: Schema):
        from .parsing.datalog import topological_rules
        self.answer = p.answer
        self.rules = [self._compile_rule(r, p.idbs, schema) for r in topological_rules(p)]
        ans = p.rule_for(p.answer)
        if ans is not None:
            self.attrs = tuple(f"c{i + 1}" for i in range(len(ans.head.args)))
        else:
            self.attrs = schema.attrs(p.answer)
        self.sentence = ans is not None and not ans.head.args

    def _compile_rule(self, rule, idbs, schema):
        positives = rule.positives
        bound: set[str] = set()
        steps = []
        pending = list(rule.builtins)
        for atom in positives:
            if atom.pred not in idbs and atom.pred not in schema:
                raise SchemaError(f"unknown relation {atom.pred!r}")
            checks, binds = [], []
            seen_here: dict[str, int] = {}
            for i, t in enumerate(atom.args):
                if isinstance(t, Const):
                    checks.append((i, "const", t.value))
                elif t.name in bound:
                    checks.append((i, "var", t.name))
                elif t.name in seen_here:
                    checks.append((i, "pos", seen_here[t.name]))
                else:
                    seen_here[t.name] = i
                    binds.append((t.name, i))
            bound |= set(seen_here)
            ready = [b for b in pending if _builtin_vars(b) <= bound]
            pending = [b for b in pending if b not in ready]
            steps.append((atom.pred, tuple(checks), tuple(binds), tuple(ready)))
        late_builtins = pending
        negs = []
        for atom in rule.negatives:
            negs.append((atom.pred, tuple(atom.args)))
        head = tuple(t.name for t in rule.head.args)
        return rule.head.pred, steps, late_builtins, negs, head

    def run(self, db: Database) -> Result:
        store = dict(db.relations)
        for pred, steps, late, negs, head in self.rules:
            out = set()
            _datalog_search(store, steps, 0, {}, late, negs, head, out)
            store[pred] = frozenset(out)
        if self.sentence:
            return bool(store[self.answer])
        return Relation(self.attrs, frozenset(store[self.answer]))


def _builtin_vars(b: Builtin) -> set[str]:
    return {t.name for t in (b.left, b.right) if isinstance(t, Var)}


def _term_value(t, env):
    if isinstance(t, Const):
        return t.value
    return env.get(t.name, _UNBOUND)


_UNBOUND = object()


def _check_builtin(b: Builtin, env) -> bool:
    return _CMP[b.op](_term_value(b.left, env), _term_value(b.right, env))


def _datalog_search(store, steps, i, env, late, negs, head, out):
    if i == len(steps):
        env = dict(env)
        todo = list(late)
        progress = True
        while progress:
            progress = False
            for b in list(todo):
                lv, rv = _term_value(b.left, env), _term_value(b.right, env)
                if lv is not _UNBOUND and rv is not _UNBOUND:
                    if not _CMP[b.op](lv, rv):
                        return
                    todo.remove(b)
                    progress = True
                elif b.op is CompOp.EQ and (lv is _UNBOUND) != (rv is _UNBOUND):
                    if lv is _UNBOUND:
                        env[b.left.name] = rv
                    else:
                        env[b.right.name] = lv
                    todo.remove(b)
                    progress = True
        if todo:
            raise SafetyError("built-in literal over unbound variables")
        for pred, args in negs:
            if _matches_any(store[pred], args, env):
                return
        out.add(tuple(env[v] for v in head))
        return
    pred, checks, binds, ready = steps[i]
    for row in store[pred]:
        ok = True
        for pos, kind, x in checks:
            v = x if kind == "const" else env[x] if kind == "var" else row[x]
            if type(v) is not type(row[pos]):
                raise TypeFault(f"cannot compare {v!r} with {row[pos]!r}")
            if row[pos] != v:
                ok = False
                break
        if not ok:
            continue
        new = dict(env)
        for name, pos in binds:
            new[name] = row[pos]
        if all(_check_builtin(b, new) for b in ready):
            _datalog_search(store, steps, i + 1, new, late, negs, head, out)


def _matches_any(rows, args, env) -> bool:
    for row in rows:
        local = {}
        for pos, t in enumerate(args):
            if isinstance(t, Const):
                want = t.value
            elif t.name in env:
                want = env[t.name]
            elif t.name in local:
                want = local[t.name]
            else:
                local[t.name] = row[pos]
                continue
            if type(want) is not type(row[pos]):
                raise TypeFault(f"cannot compare {want!r} with {row[pos]!r}")
            if row[pos] != want:
                break
        else:
            return True
    return False


def eval_datalog(p: DatalogProgram, db: Database) -> Result:
    return CompiledDatalog(p, db.schema).run(db)


# ---------------------------------------------------------------------------
# Relational algebra
# ---------------------------------------------------------------------------


class CompiledRa:
    def __init__(self, e: RaExpr, schema: Schema):
        self.schema = schema
        self.fn, cols = self._compile(e)
        self.attrs = tuple(c.name for c in cols)

    def _compile(self, e: RaExpr):
        from .parsing.ra import natural_join_layout, ra_columns, resolve
        cols = ra_columns(e, self.schema)
        if isinstance(e, Rel):
            name = e.name
            return (lambda db: db[name]), cols
        if isinstance(e, Project):
            child, ccols = self._compile(e.child)
            idx = [resolve(ccols, a) for a in e.attrs]
            return (lambda db: frozenset(tuple(r[i] for i in idx) for r in child(db))), cols
        if isinstance(e, Select):
            child, ccols = self._compile(e.child)
            tests = [self._cond(c, ccols) for c in e.conds]
            return (lambda db: frozenset(r for r in child(db) if all(t(r) for t in tests))), cols
        if isinstance(e, Product):
            left, _ = self._compile(e.left)
            right, _ = self._compile(e.right)
            return (lambda db: frozenset(a + b for a in left(db) for b in right(db))), cols
        if isinstance(e, Join):
            left, lcols = self._compile(e.left)
            right, rcols = self._compile(e.right)
            if e.conds is None:
                pairs, keep = natural_join_layout(lcols, rcols)
                eqs = [(li, ri) for li, ri in pairs]

                def natural(db):
                    out = set()
                    rrows = right(db)
                    for a in left(db):
                        for b in rrows:
                            ok = True
                            for li, ri in eqs:
                                if type(a[li]) is not type(b[ri]):
                                    raise TypeFault(f"cannot compare {a[li]!r} with {b[ri]!r}")
                                if a[li] != b[ri]:
                                    ok = False
                                    break
                            if ok:
                                out.add(a + tuple(b[i] for i in keep))
                    return frozenset(out)
                return natural, cols
            both = lcols + rcols
            tests = [self._cond(c, both) for c in e.conds]
            return (lambda db: frozenset(a + b for a in left(db) for b in right(db)
                                         if all(t(a + b) for t in tests))), cols
        if isinstance(e, Minus):
            left, _ = self._compile(e.left)
            right, _ = self._compile(e.right)
            return (lambda db: left(db) - right(db)), cols
        if isinstance(e, Union_):
            left, _ = self._compile(e.left)
            right, _ = self._compile(e.right)
            return (lambda db: left(db) | right(db)), cols
        if isinstance(e, Rename):
            child, _ = self._compile(e.child)
            return child, cols
        raise TypeError(f"not an RA expression: {e!r}")

    def _cond(self, c, cols):
        from .parsing.ra import resolve
        li = resolve(cols, c.lhs)
        cmp = _CMP[c.op]
        if isinstance(c.rhs, ColRef):
            ri = resolve(cols, c.rhs)
            return lambda r: cmp(r[li], r[ri])
        v = c.rhs
        return lambda r: cmp(r[li], v)

    def run(self, db: Database) -> Relation:
        return Relation(self.attrs, frozenset(self.fn(db.relations)))


def eval_ra(e: RaExpr, db: Database) -> Relation:
    return CompiledRa(e, db.schema).run(db)


# ---------------------------------------------------------------------------
# SQL, diagrams, dispatch
# ---------------------------------------------------------------------------


def eval_sql(q: SqlQuery, db: Database, full: bool = False) -> Result:
    from .translate.sql_trc import sql_to_trc
    return eval_trc(sql_to_trc(q, db.schema, full=full), db)


def compile_query(query, schema: Schema):
    """Compile any supported query object into something with ``run(db)``."""
    from .syntax import language_of
    lang = language_of(query)
    if lang == "trc":
        return CompiledTrc(query, schema)
    if lang == "datalog":
        return CompiledDatalog(query, schema)
    if lang == "ra":
        return CompiledRa(query, schema)
    if lang == "sql":
        from .translate.sql_trc import sql_to_trc
        return CompiledTrc(sql_to_trc(query, schema, full=True), schema)
    from .diagram.build import diagram_to_trc
    return CompiledTrc(diagram_to_trc(query), schema)


def evaluate(query, db: Database) -> Result:
    return compile_query(query, db.schema).run(db)


# ---------------------------------------------------------------------------
# Bounded equivalence oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleOptions:
    k: int = 2
    max_rows: int = 4
    extra_values: tuple = ()
    ceiling: int = DEFAULT_CEILING


@dataclass(frozen=True)
class Bound:
    k: int
    max_rows: int
    domain: tuple
    instances: int
    string_domain: tuple = ()

    def describe(self) -> str:
        text = f"domain {list(self.domain)}, at most {self.max_rows} rows per relation, " \
               f"{self.instances} databases"
        if self.string_domain:
            text += f", string columns over {list(self.string_domain)}"
        return text

    def to_json(self) -> dict:
        return {"k": self.k, "max_rows": self.max_rows, "domain": list(self.domain),
                "string_domain": list(self.string_domain), "instances": self.instances}


@dataclass(frozen=True)
class EquivVerdict:
    kind: str  # "EQUIVALENT_UP_TO_BOUND" or "COUNTEREXAMPLE"
    bound: Bound
    database: Optional[Database] = None
    left: Optional[Result] = None
    right: Optional[Result] = None

    @property
    def equivalent(self) -> bool:
        return self.kind == "EQUIVALENT_UP_TO_BOUND"

    @property
    def differing(self) -> Optional[tuple]:
        """First tuple in one result but not the other (``None`` for sentences)."""
        if self.equivalent or isinstance(self.left, bool):
            return None
        diff = self.left.rows ^ self.right.rows
        return sorted_rows(diff)[0]

    def to_json(self) -> dict:
        out = {"verdict": self.kind, "bound": self.bound.to_json()}
        if not self.equivalent:
            out["database"] = self.database.to_json()
            if isinstance(self.left, bool):
                out["left"], out["right"] = self.left, self.right
            else:
                out["left"] = self.left.to_json()["rows"]
                out["right"] = self.right.to_json()["rows"]
                out["differing_tuple"] = list(self.differing)
        return out


def query_constants(query, schema: Schema) -> set:
    """Constants mentioned anywhere in a query."""
    return {c for _, c in constant_sites(query, schema)}


def _as_trc(query, schema: Schema):
    from .syntax import language_of
    lang = language_of(query)
    if lang == "sql":
        from .translate.sql_trc import sql_to_raw
        return sql_to_raw(query, schema)
    if lang == "diagram":
        from .diagram.build import diagram_to_trc
        return diagram_to_trc(query)
    return query


def constant_sites(query, schema: Schema) -> list[tuple[object, Value]]:
    """``(column-class key, constant)`` pairs; keys are resolved by :func:`column_classes`."""
    return column_classes(query, schema)[1]


def column_classes(query, schema: Schema):
    """Union-find over base columns ``(relation, attribute)`` linked by comparisons.

    Returns ``(find, sites)`` where ``sites`` lists ``(column, constant)`` pairs.
    """
    parent: dict = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    sites: list = []
    q = _as_trc(query, schema)
    from .syntax import language_of
    lang = language_of(q) if not isinstance(q, RawTrcQuery) else "trc"
    if lang == "trc":
        _trc_classes(q, union, sites)
    elif lang == "datalog":
        _datalog_classes(q, schema, union, sites)
    elif lang == "ra":
        from .translate.ra_datalog import ra_to_datalog
        _datalog_classes(ra_to_datalog(q, schema), schema, union, sites)
    return find, sites


def _trc_classes(q, union, sites):
    if isinstance(q, UnionQuery):
        for c in q.cells:
            _trc_classes(c, union, sites)
        return
    f = q.formula if isinstance(q, RawTrcQuery) else scope_to_formula(q.root)
    out_name = q.output.name if q.output else None

    def walk(f, env):
        if isinstance(f, TrcPred):
            def col(r):
                if r.var == out_name:
                    return ("$out", r.attr)
                return (env.get(r.var, "?"), r.attr)
            if isinstance(f.rhs, AttrRef):
                union(col(f.lhs), col(f.rhs))
            else:
                sites.append((col(f.lhs), f.rhs))
        elif isinstance(f, Exists):
            env = dict(env)
            env.update({b.var: b.relation for b in f.vars})
            walk(f.body, env)
        elif isinstance(f, Not):
            walk(f.body, env)
        else:
            for i in f.items:
                walk(i, env)

    walk(f, {})


def _datalog_classes(p: DatalogProgram, schema: Schema, union, sites):
    for rule in p.rules:
        occ: dict[str, list] = {}
        atoms = [rule.head] + [b.atom for b in rule.body if isinstance(b, Literal)]
        for atom in atoms:
            for i, t in enumerate(atom.args):
                if atom.pred in schema and atom.pred not in p.idbs:
                    key = (atom.pred, schema.attrs(atom.pred)[i])
                else:
                    key = ("$idb:" + atom.pred, i)
                if isinstance(t, Var):
                    occ.setdefault(t.name, []).append(key)
                else:
                    sites.append((key, t.value))
        for keys in occ.values():
            for k in keys[1:]:
                union(keys[0], k)
        for b in rule.builtins:
            lk = occ.get(b.left.name, [None])[0] if isinstance(b.left, Var) else None
            rk = occ.get(b.right.name, [None])[0] if isinstance(b.right, Var) else None
            if lk is not None and rk is not None:
                union(lk, rk)
            elif lk is not None and isinstance(b.right, Const):
                sites.append((lk, b.right.value))
            elif rk is not None and isinstance(b.left, Const):
                sites.append((rk, b.left.value))


def oracle_domains(queries: Sequence, schema: Schema, opts: OracleOptions):
    """Integer domain for the oracle plus per-column string domains.

    The integer domain is ``{0..k-1}`` plus integer constants plus extra values plus one
    fresh padding value when constants occur. Columns linked (directly or through join
    predicates) to a string constant range over the string constants plus one fresh
    padding string instead.
    """
    finds, all_sites = [], []
    for q in queries:
        find, sites = column_classes(q, schema)
        finds.append(find)
        all_sites.append(sites)
    int_consts = set()
    str_consts = set()
    for sites in all_sites:
        for _, c in sites:
            (str_consts if isinstance(c, str) else int_consts).add(c)
    for v in opts.extra_values:
        (str_consts if isinstance(v, str) else int_consts).add(v)
    domain = set(range(opts.k)) | int_consts
    if int_consts or str_consts:
        domain.add(max(domain) + 1)
    attr_domains = None
    strings: list = []
    if str_consts:
        pad = "~"
        while pad in str_consts:
            pad += "~"
        strings = sort_domain(list(str_consts) + [pad])
        attr_domains = {}
        for find, sites in zip(finds, all_sites):
            string_roots = {find(k) for k, c in sites if isinstance(c, str)}
            for rel in schema:
                for a in schema.attrs(rel):
                    if find((rel, a)) in string_roots:
                        attr_domains[(rel, a)] = strings
    return sort_domain(domain), attr_domains, tuple(strings)


def equiv_check(q1, q2, schema: Schema, opts: OracleOptions = OracleOptions()) -> EquivVerdict:
    """Compare two queries on every database within the bound (first difference wins)."""
    domain, attr_domains, strings = oracle_domains([q1, q2], schema, opts)
    total = count_databases(schema, domain, opts.max_rows, attr_domains)
    bound = Bound(opts.k, opts.max_rows, tuple(domain), total, strings)
    c1 = compile_query(q1, schema)
    c2 = compile_query(q2, schema)
    for db in enumerate_databases(schema, domain, opts.max_rows, opts.ceiling, attr_domains):
        r1, r2 = c1.run(db), c2.run(db)
        if _differs(r1, r2):
            return EquivVerdict("COUNTEREXAMPLE", bound, db, r1, r2)
    return EquivVerdict("EQUIVALENT_UP_TO_BOUND", bound)


def _differs(r1: Result, r2: Result) -> bool:
    if isinstance(r1, bool) or isinstance(r2, bool):
        if not (isinstance(r1, bool) and isinstance(r2, bool)):
            raise SchemaError("cannot compare a sentence with a query")
        return r1 != r2
    if len(r1.attrs) != len(r2.attrs):
        raise SchemaError(f"output arities differ: {len(r1.attrs)} vs {len(r2.attrs)}")
    return r1.rows != r2.rows
