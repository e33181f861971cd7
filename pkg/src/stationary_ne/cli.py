"""Command-line front end.

Exit codes: 0 when the command succeeds and any checked property holds,
1 when a checked property fails (not an equilibrium, demand unmet, nothing
found), 2 on bad input or usage.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .derandomize import (
    build_deterministic_full_game,
    build_partition_game,
    derandomize_partition,
    eliminate_chance_nodes,
    equal_partition,
    partition_witness,
    rewards_to_cycles,
)
from .equilibrium import DEFAULT_CAP, GridBudgetError, grid_search, verify_ne, verify_spe
from .etr import encode_stationary_ne, to_raw, to_smtlib
from .evaluate import (
    UnsupportedStructureError,
    node_payoffs,
    objective_affine_map,
    objective_payoffs,
    simulate_payoffs,
    to_objective_form,
)
from .game import (
    CycleError,
    GameParseError,
    IncompleteProfileError,
    InvalidGameError,
    PayoffDemand,
    format_rational,
    parse_game,
    parse_profile,
    serialize_game,
    serialize_profile,
)
from .polynomials import SimplexPoint, parse_system
from .reductions import (
    build_exists_ne_game,
    build_full_game,
    build_sure_game,
    profile_to_witness,
    witness_to_profile,
)

CONFIG_ENV = "STATIONARY_NE_CONFIG"
VARIANTS = ("full", "reduced-demand", "sure", "deterministic13", "exists-ne")


@dataclass(frozen=True)
class Config:
    cap: int = DEFAULT_CAP
    eps: Fraction = Fraction(0)
    seed: int = 0
    samples: int = 100_000

    @classmethod
    def load(cls, path: str | None = None) -> Config:
        """Read ``[defaults]`` from an INI file (``$STATIONARY_NE_CONFIG`` by default)."""
        path = path or os.environ.get(CONFIG_ENV)
        if not path:
            return cls()
        parser = configparser.ConfigParser()
        if not parser.read(path, encoding="utf-8"):
            raise FileNotFoundError(f"config file {path!r} not found")
        sec = parser["defaults"] if parser.has_section("defaults") else {}
        base = cls()
        return cls(
            cap=int(sec.get("cap", base.cap)),
            eps=Fraction(sec.get("eps", str(base.eps))),
            seed=int(sec.get("seed", base.seed)),
            samples=int(sec.get("samples", base.samples)),
        )


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _rationals(text: str) -> tuple[Fraction, ...]:
    body = " ".join(line.split("#", 1)[0] for line in text.splitlines())
    return tuple(Fraction(tok.strip()) for tok in body.replace(",", " ").split() if tok.strip())


def parse_demand(text: str) -> PayoffDemand:
    return PayoffDemand(_rationals(text))


def serialize_demand(d: PayoffDemand) -> str:
    return ", ".join(format_rational(x) for x in d) + "\n"


def _report(data: dict, json_like: bool) -> str:
    if json_like:
        return json.dumps(data, indent=2) + "\n"
    lines = []
    for key, value in data.items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def _fmt(vec) -> list[str]:
    return [format_rational(x) for x in vec]


def _reduction(args):
    s = parse_system(_read(args.system))
    variant = args.variant
    if variant in ("full", "reduced-demand"):
        return build_full_game(s)
    if variant == "sure":
        return build_sure_game(s)
    if variant == "deterministic13":
        return build_deterministic_full_game(s)
    if variant == "exists-ne":
        if not getattr(args, "gadget", None):
            raise UsageError("--variant exists-ne needs --gadget")
        return build_exists_ne_game(s, parse_game(_read(args.gadget)), deterministic=args.deterministic)
    raise UsageError(f"unknown variant {variant!r}")


def cmd_reduce(args, cfg) -> int:
    out = _reduction(args)
    _write(args.out, serialize_game(out.game))
    demand = out.demand_reduced if args.variant == "reduced-demand" else out.demand
    if args.demands_out and demand is not None:
        _write(args.demands_out, serialize_demand(demand))
    if args.out not in (None, "-"):
        sys.stdout.write(_report({
            "variant": args.variant,
            "players": out.game.players,
            "nodes": len(out.game),
            "deterministic": "yes" if out.game.is_deterministic else "no",
            "acyclic": "yes" if out.game.is_acyclic else "no",
            "demand": _fmt(demand) if demand is not None else "none",
        }, args.json_like))
    return 0


def cmd_witness(args, cfg) -> int:
    out = _reduction(args)
    x = SimplexPoint(_rationals(args.x))
    p = witness_to_profile(out, x)
    _write(args.out, serialize_profile(p))
    return 0


def cmd_extract(args, cfg) -> int:
    out = _reduction(args)
    p = parse_profile(_read(args.profile))
    x = profile_to_witness(out, p)
    data = {
        "x": _fmt(x.x),
        "l1": format_rational(x.l1),
        "on_unit_simplex": "yes" if x.on_unit_simplex else "no",
        "q": _fmt(out.system.evaluate(x.x)),
        "is_zero": "yes" if x.on_unit_simplex and out.system.is_zero_at(x.x) else "no",
    }
    sys.stdout.write(_report(data, args.json_like))
    return 0


def cmd_eval(args, cfg) -> int:
    g = parse_game(_read(args.game))
    p = parse_profile(_read(args.profile))
    if g.objective == "rewards":
        payoffs = node_payoffs(g, p, args.method)[g.initial]
    else:
        payoffs = objective_payoffs(g, p)
    data = {"objective": g.objective, "payoffs": _fmt(payoffs)}
    if args.simulate:
        seed = cfg.seed if args.seed is None else args.seed
        plays = cfg.samples if args.simulate < 0 else args.simulate
        mean, err = simulate_payoffs(g, p, plays=plays, seed=seed)
        data["mc_mean"] = [f"{x:.6f}" for x in mean]
        data["mc_stderr"] = [f"{x:.6f}" for x in err]
    sys.stdout.write(_report(data, args.json_like))
    return 0


def cmd_verify(args, cfg) -> int:
    g = parse_game(_read(args.game))
    p = parse_profile(_read(args.profile))
    eps = cfg.eps if args.eps is None else Fraction(args.eps)
    demand = parse_demand(_read(args.demands)) if args.demands else None
    rep = (verify_spe if args.spe else verify_ne)(g, p, eps, demand)
    data = rep.as_dict()
    data = {k: v for k, v in data.items() if v is not None}
    sys.stdout.write(_report(data, args.json_like))
    return 0 if rep.holds else 1


def cmd_grid(args, cfg) -> int:
    g = parse_game(_read(args.game))
    eps = cfg.eps if args.eps is None else Fraction(args.eps)
    demand = parse_demand(_read(args.demands)) if args.demands else None
    cap = cfg.cap if args.cap is None else args.cap
    found = grid_search(g, args.d, eps, demand, cap=cap, jobs=args.jobs)
    lines = [f"found: {len(found)}"]
    for k, p in enumerate(found[: args.limit] if args.limit else found, start=1):
        lines.append(f"# profile {k}")
        lines.append(serialize_profile(p).rstrip("\n"))
    _write(args.out, "\n".join(lines) + "\n")
    return 0 if found else 1


def cmd_derandomize(args, cfg) -> int:
    g = parse_game(_read(args.game))
    det, gadgets = eliminate_chance_nodes(g, Fraction(args.scale), args.grouping)
    _write(args.out, serialize_game(det))
    return 0


def cmd_partition(args, cfg) -> int:
    items = _rationals(args.items)
    if args.deterministic:
        d = derandomize_partition(items)
        game, demand = d.game, d.demand
    else:
        game, demand = build_partition_game(items, paper_demand=args.paper_demand)
    _write(args.out, serialize_game(game))
    if args.demands_out:
        _write(args.demands_out, serialize_demand(demand))
    split = equal_partition(items)
    if args.witness_out and split is not None:
        p = d.witness(split) if args.deterministic else partition_witness(items, split)
        _write(args.witness_out, serialize_profile(p))
    if args.out not in (None, "-"):
        sys.stdout.write(_report({
            "players": game.players,
            "demand": _fmt(demand),
            "equal_partition": sorted(split) if split is not None else "none",
        }, args.json_like))
    return 0


def cmd_to_objective(args, cfg) -> int:
    g = parse_game(_read(args.game))
    new = to_objective_form(g, args.kind)
    _write(args.out, serialize_game(new))
    if args.out not in (None, "-"):
        maps = objective_affine_map(g, args.kind)
        sys.stdout.write(_report({
            "kind": args.kind,
            "affine_a": [format_rational(a) for a, _ in maps],
            "affine_b": [format_rational(b) for _, b in maps],
        }, args.json_like))
    return 0


def cmd_to_cycles(args, cfg) -> int:
    g = parse_game(_read(args.game))
    _write(args.out, serialize_game(rewards_to_cycles(g)))
    return 0


def cmd_etr(args, cfg) -> int:
    g = parse_game(_read(args.game))
    demand = parse_demand(_read(args.demands)) if args.demands else None
    f = encode_stationary_ne(g, demand, spe=args.spe)
    _write(args.out, to_raw(f) if args.raw else to_smtlib(f))
    return 0


def build_parser() -> argparse.ArgumentParser:
    # accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help=f"INI config file (default: ${CONFIG_ENV})")
    common.add_argument("--json-like", action="store_true", default=argparse.SUPPRESS, help="structured JSON reports")
    ap = argparse.ArgumentParser(prog="stationary-ne", description=__doc__.splitlines()[0], parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    def command(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    def system_args(p):
        p.add_argument("--system", required=True)
        p.add_argument("--variant", choices=VARIANTS, default="full")
        p.add_argument("--gadget", help="plug-in game for --variant exists-ne")
        p.add_argument("--deterministic", action="store_true")

    p = command("reduce", "compile a polynomial system into a game")
    system_args(p)
    p.add_argument("--out")
    p.add_argument("--demands-out")
    p.set_defaults(func=cmd_reduce)

    p = command("witness", "profile that plays a simplex point")
    system_args(p)
    p.add_argument("--x", required=True, help="comma-separated rationals")
    p.add_argument("--out")
    p.set_defaults(func=cmd_witness)

    p = command("extract-witness", "read x off a profile")
    system_args(p)
    p.add_argument("--profile", required=True)
    p.set_defaults(func=cmd_extract)

    p = command("eval", "exact expected payoffs")
    p.add_argument("--game", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--method", choices=("auto", "backward", "scc", "linear"), default="auto")
    p.add_argument(
        "--simulate", type=int, nargs="?", const=-1, default=0, metavar="PLAYS",
        help="Monte Carlo cross-check (PLAYS defaults to the config samples)",
    )
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_eval)

    p = command("verify", "check NE / SPE / demands")
    p.add_argument("--game", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--spe", action="store_true")
    p.add_argument("--eps")
    p.add_argument("--demands")
    p.set_defaults(func=cmd_verify)

    p = command("grid", "exhaustive grid search for equilibria")
    p.add_argument("--game", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps")
    p.add_argument("--demands")
    p.add_argument("--cap", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--limit", type=int, default=0, help="print at most this many profiles")
    p.add_argument("--out")
    p.set_defaults(func=cmd_grid)

    p = command("derandomize", "replace chance nodes by gadgets")
    p.add_argument("--game", required=True)
    p.add_argument("--scale", default="1/2")
    p.add_argument("--grouping", choices=("per-node", "shared-independent"), default="per-node")
    p.add_argument("--out")
    p.set_defaults(func=cmd_derandomize)

    p = command("partition", "partition game for an item list")
    p.add_argument("--items", required=True)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--paper-demand", action="store_true", help="demand K/2 instead of K/(2n)")
    p.add_argument("--out")
    p.add_argument("--demands-out")
    p.add_argument("--witness-out")
    p.set_defaults(func=cmd_partition)

    p = command("to-objective", "rewards to reach/safe objectives")
    p.add_argument("--game", required=True)
    p.add_argument("--kind", choices=("reach", "safe"), required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_to_objective)

    p = command("to-cycles", "terminal rewards to mean-payoff cycles")
    p.add_argument("--game", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_to_cycles)

    p = command("etr", "emit the existential real-arithmetic formula")
    p.add_argument("--game", required=True)
    p.add_argument("--demands")
    p.add_argument("--spe", action="store_true")
    p.add_argument("--raw", action="store_true", help="s-expressions with exact rationals")
    p.add_argument("--out")
    p.set_defaults(func=cmd_etr)
    return ap


INPUT_ERRORS = (
    UsageError,
    GameParseError,
    InvalidGameError,
    IncompleteProfileError,
    CycleError,
    GridBudgetError,
    UnsupportedStructureError,
    FileNotFoundError,
    ValueError,
    KeyError,
    ZeroDivisionError,
)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    # the shared options are suppressed when absent
    args.config = getattr(args, "config", None)
    args.json_like = getattr(args, "json_like", False)
    try:
        cfg = Config.load(args.config)
        return args.func(args, cfg)
    except INPUT_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
