"""Command line entry point: ``ggec run|plot|grammar``.

Exit status is 0 on success, 1 for user errors (bad spec, grammar or
arguments) and 2 for anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

from .engines import ConfigError
from .grammar import GrammarError, analyze, load_grammar, render, validate
from .problems import DatasetError
from .transform import balance, bias_report, inline_nonterminal, unlink

USER_ERRORS = (GrammarError, ConfigError, DatasetError, FileNotFoundError, IsADirectoryError)


class UsageError(Exception):
    pass


def _load(path: str):
    try:
        return load_grammar(path)
    except GrammarError as e:
        raise GrammarError(f"{path}: {e}") from None
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror}") from None


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def analysis_report(g) -> dict:
    a = analyze(g)
    nts = {}
    for name, prods in g.rules.items():
        nts[name] = {
            "min_depth": a.min_depth_nt[name],
            "recursive": a.recursive_nt[name],
            "reachable": name in a.reachable,
            "productions": [
                {"index": i, "body": " ".join(str(s) if not hasattr(s, "text") else s.text for s in p),
                 "min_depth": a.min_depth_prod[(name, i)], "recursive": a.recursive_prod[(name, i)]}
                for i, p in enumerate(prods)],
        }
    return {"start": g.start, "nonterminals": nts,
            "diagnostics": [str(d) for d in validate(g)]}


def format_analysis(rep: dict) -> str:
    lines = [f"start: <{rep['start']}>"]
    for name, info in rep["nonterminals"].items():
        flags = " recursive" if info["recursive"] else ""
        if not info["reachable"]:
            flags += " unreachable"
        lines.append(f"<{name}>  min_depth={info['min_depth']}{flags}")
        for p in info["productions"]:
            rec = "  recursive" if p["recursive"] else ""
            lines.append(f"  [{p['index']}] {p['body']:<40} min_depth={p['min_depth']}{rec}")
    for d in rep["diagnostics"]:
        lines.append(f"warning: {d}")
    return "\n".join(lines) + "\n"


def format_bias(rep) -> str:
    lines = ["termination mass (share of non-recursive productions):"]
    lines += [f"  <{k}>  {v:.4f}" for k, v in rep.termination_mass.items()]
    lines.append("terminal sampling (expected share among emitted terminals):")
    lines += [f"  {k}  {v:.4f}" for k, v in sorted(rep.terminal_sampling.items(),
                                                      key=lambda kv: (-kv[1], kv[0]))]
    lines.append("codon linkage (productions per rule):")
    lines += [f"  <{k}>  {v}" for k, v in rep.codon_linkage.items()]
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    from .harness import load_spec, run_experiment

    spec = load_spec(args.spec)
    res = run_experiment(spec, force=args.force, jobs=args.jobs,
                         output=Path(args.out) if args.out else None)
    print(f"{res.output}: {res.computed} run(s) computed, {res.skipped} skipped, "
          f"{len(res.records)} record(s)")
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_results

    out = args.out or str(Path(args.csv).parent / "plots")
    for p in plot_results(args.csv, out, args.statistic):
        print(p)
    return 0


def cmd_grammar(args) -> int:
    g = _load(args.grammar)
    sub = args.sub
    if sub == "analyze":
        rep = analysis_report(g)
        _emit(json.dumps(rep, indent=1) + "\n" if args.json else format_analysis(rep), args.output)
    elif sub == "balance":
        _emit(render(balance(g, args.nonterminal)), args.output)
    elif sub == "inline":
        _emit(render(inline_nonterminal(g, args.nonterminal)), args.output)
    elif sub == "unlink":
        _emit(render(unlink(g)), args.output)
    elif sub == "bias":
        rep = bias_report(g, args.depth)
        if args.json:
            _emit(json.dumps({"termination_mass": rep.termination_mass,
                              "terminal_sampling": rep.terminal_sampling,
                              "codon_linkage": rep.codon_linkage}, indent=1) + "\n", args.output)
        else:
            _emit(format_bias(rep), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ggec", description="Grammar-guided evolutionary search experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sp = p.add_subparsers(dest="command", required=True)

    r = sp.add_parser("run", help="run an experiment spec")
    r.add_argument("spec")
    r.add_argument("--force", action="store_true", help="recompute existing records")
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    r.add_argument("--out", help="output directory (overrides the spec)")
    r.set_defaults(func=cmd_run)

    pl = sp.add_parser("plot", help="plot fitness curves from results.csv")
    pl.add_argument("csv")
    pl.add_argument("--out", help="directory for SVG files (default: <csv dir>/plots)")
    pl.add_argument("--statistic", default="best_so_far",
                    choices=("best_so_far", "best", "mean", "invalid"))
    pl.set_defaults(func=cmd_plot)

    gr = sp.add_parser("grammar", help="inspect or rewrite a BNF grammar")
    gsp = gr.add_subparsers(dest="sub", required=True)
    for name, helptext in (("analyze", "minimum depths and recursion"),
                           ("balance", "balance terminating/recursive productions"),
                           ("inline", "inline a non-recursive non-terminal"),
                           ("unlink", "decouple modulo indices across rules"),
                           ("bias", "termination and terminal-sampling bias")):
        s = gsp.add_parser(name, help=helptext)
        s.add_argument("grammar", help="BNF file or builtin:<name>")
        if name in ("balance", "inline"):
            s.add_argument("nonterminal")
        if name == "bias":
            s.add_argument("--depth", type=int, default=6, help="depth cap (default 6)")
        if name in ("analyze", "bias"):
            s.add_argument("--json", action="store_true")
        s.add_argument("-o", "--output", help="write to file instead of stdout")
    gr.set_defaults(func=cmd_grammar)
    return p


def main(argv=None) -> int:
    from .harness import SpecError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (UsageError, SpecError, *USER_ERRORS) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
