"""Command-line front end.

Exit status: 0 when the expected verdict is reached, 1 when it differs,
2 on malformed input or configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Sequence

from .circle import search_circle_witness
from .eq_extension import (
    build_eq_extension,
    coordinate_relation,
    find_indistinguishable_pair,
    predicate_lifts,
)
from .oracle import (
    Diagram,
    MalformedDiagram,
    Refusal,
    TheoryDescriptor,
    consistent,
    evaluate,
    neg,
    neq,
    pos,
    realize_in_model,
)
from .shearing import (
    IncoherentLabeling,
    ShearingInstance,
    build_demo_instance,
    build_unsuperstable_chain,
    check_labeling_coherence,
    check_shearing,
    instantiate_family,
    prepare,
    sweep_collision_fragment,
    verify_chain,
)
from .structures import DEFAULT_BUDGET, ClassDescriptor, context_cut, dense_order

SCHEMA = "shear-lab/1"
COMMANDS = ("demo", "verify", "search-circle", "chain", "eq", "oracle", "headline")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    target: Optional[str] = None
    n: Optional[int] = None
    k: Optional[int] = None
    m: int = 4
    steps: int = 3
    budget: int = DEFAULT_BUDGET
    bounds: Sequence[int] = (2, 2, 8)
    seed: int = 0
    input: Optional[str] = None
    output: Optional[str] = None
    format: str = "json"
    klass: str = "orders"
    expect: Optional[str] = None
    samples: int = 200

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"command: unknown command {self.command!r}")
        if self.budget < 1:
            raise ConfigError("budget: must be at least 1")
        if self.n is not None and self.k is not None and self.command in ("demo", "chain") and self.target != "tn1":
            if not self.n > self.k >= 2:
                raise ConfigError("n, k: need n > k >= 2")
        if len(self.bounds) != 3 or any(b < 0 for b in self.bounds):
            raise ConfigError("bounds: expected three nonnegative integers L,S,N")
        if self.format not in ("json", "text"):
            raise ConfigError("format: must be json or text")
        if self.m < 1:
            raise ConfigError("m: must be positive")


def _parse_bounds(text: str) -> List[int]:
    try:
        parts = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("bounds must look like L,S,N") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("bounds must look like L,S,N")
    return parts


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shearlab", description="Shearing and circle-property checks on finite index models.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("target", nargs="?", help="demo name: t32, tnk, tn1 or rg-linear")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int, default=4, help="base size for tn1, rg-linear, search-circle and eq")
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--budget", type=int)
    p.add_argument("--bounds", type=_parse_bounds, default=[2, 2, 8], help="L,S,N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--class", dest="klass", choices=("orders", "predicates"), default="orders")
    p.add_argument("--expect", help="override the expected verdict")
    p.add_argument("--in", dest="input")
    p.add_argument("--out", dest="output")
    p.add_argument("--format", choices=("json", "text"), default="json")
    return p


def config_from_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    budget = args.budget
    if budget is None:
        env = os.environ.get("SHEARLAB_BUDGET")
        if env is not None:
            try:
                budget = int(env)
            except ValueError:
                raise ConfigError(f"SHEARLAB_BUDGET: not an integer: {env!r}") from None
        else:
            budget = DEFAULT_BUDGET
    cfg = RunConfig(
        command=args.command,
        target=args.target,
        n=args.n,
        k=args.k,
        m=args.m,
        steps=args.steps,
        budget=budget,
        bounds=tuple(args.bounds),
        seed=args.seed,
        input=args.input,
        output=args.output,
        format=args.format,
        klass=args.klass,
        expect=args.expect,
        samples=args.samples,
    )
    cfg.validate()
    return cfg


def _load_json(path: Optional[str]) -> dict:
    if not path:
        raise ConfigError("--in: an input file is required")
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"--in: no such file {path!r}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--in: invalid JSON ({exc})") from None


# Commands return (ok, report)


def cmd_demo(cfg: RunConfig):
    kind = cfg.target
    if kind not in ("t32", "tnk", "tn1", "rg-linear"):
        raise ConfigError(f"target: unknown demo {kind!r}")
    if kind == "tnk":
        n, k = cfg.n or 3, cfg.k or 2
        if not n > k >= 2:
            raise ConfigError("n, k: need n > k >= 2")
        inst, _ = build_demo_instance("tnk", n=n, k=k)
    elif kind == "tn1":
        n = cfg.n or 2
        if n < 2:
            raise ConfigError("n: tn1 needs n >= 2")
        inst, _ = build_demo_instance("tn1", n=n, m=cfg.m)
    else:
        inst, _ = build_demo_instance(kind, m=cfg.m)
    rep = check_shearing(inst, cfg.budget)
    report = {"demo": inst.name, "instance": inst.to_dict(), "report": rep.to_dict()}
    ok = rep.valid
    if kind == "tn1":
        fam = instantiate_family(inst, prepare(inst, cfg.budget).J)
        pairs = [c for c in combinations(range(len(fam)), 2)]
        pair_bad = [c for c in pairs if consistent(fam[c[0]].conjoin(fam[c[1]])).consistent]
        report["two_inconsistent"] = not pair_bad
        report["consistent_pairs"] = [list(c) for c in pair_bad]
        if (cfg.n or 2) == 2:
            ok = ok and not pair_bad
    return ok, report


def cmd_verify(cfg: RunConfig):
    data = _load_json(cfg.input)
    try:
        inst = ShearingInstance.from_dict(data)
        inst.validate()
    except KeyError as exc:
        raise ConfigError(f"instance: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"instance: {exc}") from None
    expected = data.get("expected", {}).get("valid", True)
    J = prepare(inst, cfg.budget).J
    coh = check_labeling_coherence(inst.labeling, J, inst.s, inst.r)
    if not coh.ok:
        return False, {"coherent": False, "violations": [{"kind": k, "detail": d} for k, d in coh.violations]}
    rep = check_shearing(inst, cfg.budget)
    return rep.valid == expected, {"coherent": True, "expected_valid": expected, "report": rep.to_dict()}


def _context(cfg: RunConfig):
    if cfg.klass == "orders":
        klass = ClassDescriptor.orders()
        return klass, dense_order(range(cfg.m))
    klass = ClassDescriptor.predicates()
    return klass, context_cut(klass, range(cfg.m))


def cmd_search_circle(cfg: RunConfig):
    klass, base = _context(cfg)
    L, S, N = cfg.bounds
    res = search_circle_witness(klass, base, L, S, N)
    expected = cfg.expect or ("witness" if cfg.klass == "orders" else "none")
    got = "witness" if res.found else "none"
    return got == expected, {"class": cfg.klass, "expected": expected, "result": res.to_dict()}


def cmd_chain(cfg: RunConfig):
    n, k = cfg.n or 3, cfg.k or 2
    if not n > k >= 2:
        raise ConfigError("n, k: need n > k >= 2")
    if cfg.steps < 1:
        raise ConfigError("steps: must be at least 1")
    chain = build_unsuperstable_chain(n, k, cfg.steps)
    rep = verify_chain(chain, cfg.budget)
    out = rep.to_dict()
    out["I"] = [list(step.I) for step in chain]
    return rep.valid, out


def cmd_eq(cfg: RunConfig):
    klass, base = _context(cfg)
    rels = [coordinate_relation(2, [0]), coordinate_relation(2, [1])]
    lifts = predicate_lifts(base, rels)
    ext = build_eq_extension(base, rels, lifts)
    S = cfg.bounds[1]
    results = []
    ids = list(base.by_coord)
    for size in range(S + 1):
        for s in combinations(ids, size):
            results.append(find_indistinguishable_pair(ext, s).to_dict())
    expected = cfg.expect or ("pair" if cfg.klass == "orders" else "none")
    if expected == "pair":
        ok = all(r["found"] for r in results)
    else:
        ok = not any(r["found"] for r in results)
    return ok, {"class": cfg.klass, "expected": expected, "extension": ext.to_dict(), "searches": results}


def _random_diagram(rng: random.Random, theory: TheoryDescriptor) -> Diagram:
    n_params = rng.randint(0, 6)
    free = ["x", "y"][: rng.randint(1, 2)]
    params = [f"p{i}" for i in range(n_params)]
    arity = theory.edge_arity
    edges = []
    for combo in combinations(params, arity):
        if rng.random() < 0.3:
            edges.append(combo)
    lits = []
    names = free + params
    for _ in range(rng.randint(0, 6)):
        sign = rng.choice("+-=")
        if sign == "=":
            lits.append(neq(rng.choice(free), rng.choice(names)))
            continue
        args = [rng.choice(free)] + [rng.choice(names) for _ in range(arity - 1)]
        lits.append(pos(*args) if sign == "+" else neg(*args))
    return Diagram.make(theory, params, edges, free, lits)


def cmd_oracle(cfg: RunConfig):
    if cfg.input:
        data = _load_json(cfg.input)
        try:
            d = Diagram.from_dict(data.get("diagram", data))
            verdict = consistent(d)
        except KeyError as exc:
            raise ConfigError(f"diagram: missing field {exc.args[0]!r}") from None
        except (MalformedDiagram, TypeError, ValueError) as exc:
            raise ConfigError(f"diagram: {exc}") from None
        real = realize_in_model(d)
        agree = (not isinstance(real, Refusal)) == verdict.consistent
        if not isinstance(real, Refusal):
            agree = agree and evaluate(real, d)
        out = {"verdict": verdict.to_dict(), "model": real.to_dict(), "model_agrees": agree}
        ok = agree
        if "expected_consistent" in data:
            ok = ok and data["expected_consistent"] == verdict.consistent
        return ok, out
    rng = random.Random(cfg.seed)
    mismatches = []
    checked = 0
    for i in range(cfg.samples):
        theory = rng.choice([TheoryDescriptor.random_graph(), TheoryDescriptor.tnk(3, 2)])
        d = _random_diagram(rng, theory)
        try:
            d.validate()
        except MalformedDiagram:
            continue
        checked += 1
        verdict = consistent(d)
        real = realize_in_model(d)
        good = not isinstance(real, Refusal) and evaluate(real, d)
        if good != verdict.consistent:
            mismatches.append({"sample": i, "diagram": d.to_dict()})
    return not mismatches, {"seed": cfg.seed, "checked": checked, "mismatches": mismatches}


def cmd_headline(cfg: RunConfig):
    """Side by side: hypergraph shearing versus no random-graph shearing
    under the singleton-predicate hypergraph context."""
    n, k = cfg.n or 3, cfg.k or 2
    if not n > k >= 2:
        raise ConfigError("n, k: need n > k >= 2")
    inst, _ = build_demo_instance("tnk", n=n, k=k)
    tnk = check_shearing(inst, cfg.budget)
    chain = verify_chain(build_unsuperstable_chain(n, k, cfg.steps), cfg.budget)
    L, S, _ = cfg.bounds
    sweep = sweep_collision_fragment(n, k, max_length=max(L, 1), max_s=S, keep_derivations=False)
    hyper_ok = tnk.valid and chain.valid
    rg_ok = sweep.counterexamples == 0
    rows = {
        f"Tnk({n},{k})": {
            "verdict": "shears" if tnk.valid else "no shearing found",
            "witness_size": tnk.witness_size,
            "chain": chain.verdict,
        },
        "random graph": {
            "verdict": "no shearing in the swept fragment" if rg_ok else "shearing found",
            "configurations": sweep.configurations,
            "derivations": len(sweep.derivations) if sweep.derivations else None,
            "counterexamples": sweep.counterexamples,
        },
    }
    sweep_dict = sweep.to_dict()
    return hyper_ok and rg_ok, {"context": f"c({n},{k})", "side_by_side": rows, "sweep": sweep_dict}


HANDLERS = {
    "demo": cmd_demo,
    "verify": cmd_verify,
    "search-circle": cmd_search_circle,
    "chain": cmd_chain,
    "eq": cmd_eq,
    "oracle": cmd_oracle,
    "headline": cmd_headline,
}


def _text(obj, indent: int = 0) -> List[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, (dict, list)) and val:
                lines.append(f"{pad}{key}:")
                lines.extend(_text(val, indent + 1))
            else:
                lines.append(f"{pad}{key}: {json.dumps(val)}")
    elif isinstance(obj, list):
        for item in obj:
            if isinstance(item, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(_text(item, indent + 1))
            else:
                lines.append(f"{pad}- {json.dumps(item)}")
    else:
        lines.append(f"{pad}{json.dumps(obj)}")
    return lines


def render(report: dict, fmt: str) -> str:
    if fmt == "text":
        if "side_by_side" in report:
            head = ["context " + report["context"]]
            for name, row in report["side_by_side"].items():
                head.append(f"{name:>16} | {row['verdict']}")
            return "\n".join(head + _text({k: v for k, v in report.items() if k != "side_by_side"})) + "\n"
        return "\n".join(_text(report)) + "\n"
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def run(cfg: RunConfig) -> int:
    try:
        ok, body = HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IncoherentLabeling as exc:
        ok, body = False, {"coherent": False, "violations": str(exc)}
    report = {"schema": SCHEMA, "command": cfg.command, "ok": ok, **body}
    text = render(report, cfg.format)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return 2 if exc.code else 0
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
