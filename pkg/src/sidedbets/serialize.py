"""JSON documents for tables, s-tests, schedules and traces; plain-text bit files."""
from __future__ import annotations

import json
from pathlib import Path

from .adversary import (
    Certificate,
    ConstructionTrace,
    Definition,
    KraftLedger,
    LevelParams,
    Schedule,
    StageRecord,
)
from .constructions import STest
from .core import MartingaleTable, check_bits, format_rational, parse_rational

fmt = format_rational
parse = parse_rational


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def table_to_doc(t: MartingaleTable) -> dict:
    return {"depth": t.depth, "values": {s: fmt(v) for s, v in t.items()}}


def table_from_doc(doc: dict) -> MartingaleTable:
    values = {s: parse(v) for s, v in doc["values"].items()}
    return MartingaleTable.from_mapping(values, doc.get("depth"))


def stest_to_doc(test: STest) -> dict:
    return {"s": fmt(test.s), "levels": [list(level) for level in test.levels]}


def stest_from_doc(doc: dict) -> STest:
    return STest(parse(doc["s"]), tuple(tuple(check_bits(x) for x in level) for level in doc["levels"]))


_LEVEL_RATIONALS = ("q", "eps", "delta", "p", "numerator")


def schedule_to_doc(sched: Schedule) -> dict:
    levels = []
    for lv in sched.levels:
        rec = {"n": lv.n, "s": lv.s, "gap": lv.gap, "f_eps": lv.f_eps}
        rec.update({k: fmt(getattr(lv, k)) for k in _LEVEL_RATIONALS})
        levels.append(rec)
    return {"profile": sched.profile, "budget_exponent": sched.budget_exponent,
            "slack": sched.slack, "levels": levels}


def schedule_from_doc(doc: dict) -> Schedule:
    levels = []
    for rec in doc["levels"]:
        kw = {k: parse(rec[k]) for k in _LEVEL_RATIONALS}
        levels.append(LevelParams(n=rec["n"], s=rec["s"], gap=rec["gap"], f_eps=rec["f_eps"], **kw))
    return Schedule(doc["profile"], tuple(levels), doc["budget_exponent"], doc["slack"])


def ledger_to_doc(ledger: KraftLedger) -> dict:
    return {"budget": fmt(ledger.budget), "weight": fmt(ledger.weight),
            "requests": [[s, n] for s, n in ledger.requests]}


def ledger_from_doc(doc: dict) -> KraftLedger:
    return KraftLedger(parse(doc["budget"]), tuple((s, n) for s, n in doc["requests"]), parse(doc["weight"]))


def trace_to_doc(trace: ConstructionTrace) -> dict:
    return {
        "history": [{"stage": r.stage, "action": r.action, "n": r.n, "sigma": r.sigma,
                     "weight": fmt(r.weight)} for r in trace.history],
        "final_prefixes": list(trace.final_prefixes),
        "ledger": ledger_to_doc(trace.ledger),
        "certificates": [{"n": c.n, "value": fmt(c.value), "bound": fmt(c.bound), "holds": c.holds}
                         for c in trace.certificates],
        "definitions": [{"n": d.n, "epoch": d.epoch, "sigma": d.sigma, "stage": d.stage}
                        for d in trace.definitions],
        "max_definitions": [[n, m] for n, m in trace.max_definitions],
    }


def trace_from_doc(doc: dict) -> ConstructionTrace:
    history = tuple(StageRecord(r["stage"], r["action"], r["n"], r["sigma"], parse(r["weight"]))
                    for r in doc["history"])
    certs = tuple(Certificate(c["n"], parse(c["value"]), parse(c["bound"]), c["holds"])
                  for c in doc["certificates"])
    defs = tuple(Definition(d["n"], d["epoch"], d["sigma"], d["stage"]) for d in doc["definitions"])
    return ConstructionTrace(history, tuple(doc["final_prefixes"]), ledger_from_doc(doc["ledger"]),
                             certs, defs, tuple((n, m) for n, m in doc["max_definitions"]))


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def write_json(path, doc) -> None:
    Path(path).write_text(dumps(doc))


def load_table(path) -> MartingaleTable:
    return table_from_doc(read_json(path))


def save_table(path, t: MartingaleTable) -> None:
    write_json(path, table_to_doc(t))


def read_bits(path) -> str:
    text = Path(path).read_text()
    if text.endswith("\n"):
        text = text[:-1]
    return check_bits(text)


def write_bits(path, bits: str) -> None:
    Path(path).write_text(check_bits(bits) + "\n")
