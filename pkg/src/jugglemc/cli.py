"""Command line front end for the juggling chains.

Subcommands: enumerate, matrix, stationary, verify, simulate. A model is
specified either by flags or by a JSON spec file (flags win field by
field). Exact mode reads and writes rationals as "p/q" strings; decimal
weights require the float backend. Exit codes: 0 success, 1 spec or
usage error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Optional

from . import fluctuating, jugglers, msjmc, overwriting
from .chain import (
    ChainMatrix, Distribution, LumpingMap, chain_period, is_irreducible,
    nilpotency_check, simulate, simulate_replicas, stationary_exact,
    stationary_power, total_variation, ultrafast_check, verify_lumping,
)
from .combinatorics import (
    ParamSet, TypeCounts, enumerate_alphabet_words, enumerate_multiset_words,
    format_scalar,
)
from .errors import JuggleError

SPEC_VERSION = 1
DEFAULT_SEED = 1
STATE_CAP = 100_000
VERIFY_STATE_CAP = 5_000
MODELS = ("msjmc", "add_drop", "annihilation", "overwriting", "several_jugglers")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the contract reserves 2 for
    # verification failures, so usage errors are remapped to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class ModelSpec:
    model: str
    backend: str
    counts: Optional[tuple] = None
    n: Optional[int] = None
    T: Optional[int] = None
    r: Optional[int] = None
    c: Optional[int] = None
    balls: Optional[int] = None
    z: Optional[tuple] = None
    activities: Optional[tuple] = None


def _is_decimal(text: str) -> bool:
    return "." in text or "e" in text.lower() or "inf" in text.lower()


def _parse_weight(raw, backend: str):
    if isinstance(raw, float) or (isinstance(raw, str) and _is_decimal(raw)):
        if backend == "exact":
            raise ValueError(
                f"decimal weight {raw!r} is not exact; use --backend float"
            )
        return float(raw)
    value = Fraction(raw)
    return float(value) if backend == "float" else value


def _int_list(raw) -> tuple:
    if isinstance(raw, str):
        raw = raw.split(",")
    return tuple(int(x) for x in raw)


def _raw_list(raw) -> list:
    if isinstance(raw, str):
        return [x.strip() for x in raw.split(",")]
    return list(raw)


def load_spec(args) -> ModelSpec:
    data = {}
    if getattr(args, "spec", None):
        with open(args.spec, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("spec file must hold a JSON object")

    def pick(name, default=None):
        flag = getattr(args, name, None)
        return flag if flag is not None else data.get(name, default)

    model = pick("model")
    if model is None:
        raise ValueError(f"a model is required: one of {', '.join(MODELS)}")
    model = str(model).replace("-", "_")
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; pick one of {', '.join(MODELS)}")

    raw_z = pick("z")
    backend = pick("backend")
    if backend is None:
        decimals = raw_z is not None and any(
            isinstance(x, float) or (isinstance(x, str) and _is_decimal(x))
            for x in _raw_list(raw_z)
        )
        backend = "float" if decimals else "exact"
    if backend not in ("exact", "float"):
        raise ValueError("backend must be exact or float")

    spec = ModelSpec(model=model, backend=backend)
    if raw_z is not None:
        spec.z = tuple(_parse_weight(x, backend) for x in _raw_list(raw_z))

    raw_act = pick("activities")
    if raw_act is None and model == "add_drop":
        raw_act = data.get("c")  # the spec-file name for activities
    if raw_act is not None:
        spec.activities = tuple(_parse_weight(x, backend) for x in _raw_list(raw_act))

    if pick("counts") is not None:
        spec.counts = _int_list(pick("counts"))
    for name in ("n", "T", "r", "balls"):
        value = pick(name)
        if value is not None:
            setattr(spec, name, int(value))
    if model == "several_jugglers" and pick("c") is not None:
        spec.c = int(pick("c"))

    _validate(spec)
    return spec


def _need(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def _validate(spec: ModelSpec):
    if spec.model == "msjmc":
        _need(spec.counts is not None, "msjmc needs --counts n1,n2,...")
        counts = TypeCounts(spec.counts)
        spec.n, spec.T = counts.n, counts.T
        _need(spec.z is not None, "msjmc needs --z with n+1 weights")
        _need(len(spec.z) == spec.n + 1,
              f"z must hold n+1 = {spec.n + 1} weights, got {len(spec.z)}")
    elif spec.model in ("add_drop", "annihilation", "overwriting"):
        _need(spec.n is not None and spec.T is not None,
              f"{spec.model} needs --n and --T")
        _need(spec.n >= 1 and spec.T >= 1, "need n >= 1 and T >= 1")
        _need(spec.z is not None, f"{spec.model} needs --z with n+1 weights")
        _need(len(spec.z) == spec.n + 1,
              f"z must hold n+1 = {spec.n + 1} weights, got {len(spec.z)}")
        if spec.model == "add_drop":
            _need(spec.activities is not None and len(spec.activities) == spec.T,
                  f"add_drop needs --activities with T = {spec.T} entries")
        else:
            _need(ParamSet(spec.z).normalized,
                  f"{spec.model} needs z summing to 1, got {sum(spec.z)}")
    else:
        _need(spec.r is not None and spec.c is not None and spec.balls is not None,
              "several_jugglers needs --r, --c and --balls")
        _need(spec.r >= 1 and spec.c >= 1, "need r >= 1 and c >= 1")
        _need(0 <= spec.balls <= spec.r * spec.c,
              f"balls must lie in 0..{spec.r * spec.c}")


def _params(spec: ModelSpec) -> ParamSet:
    if spec.model == "add_drop":
        return ParamSet(spec.z, spec.activities)
    return ParamSet(spec.z)


def state_count(spec: ModelSpec) -> int:
    if spec.model == "msjmc":
        total = factorial(sum(spec.counts))
        for k in spec.counts:
            total //= factorial(k)
        return total
    if spec.model == "several_jugglers":
        return comb(spec.r * spec.c, spec.balls)
    return spec.T ** spec.n


def spec_states(spec: ModelSpec) -> list:
    if spec.model == "msjmc":
        return enumerate_multiset_words(TypeCounts(spec.counts))
    if spec.model == "several_jugglers":
        return jugglers.enumerate_arrays(spec.r, spec.c, spec.balls)
    return enumerate_alphabet_words(spec.n, spec.T)


def spec_chain(spec: ModelSpec) -> ChainMatrix:
    if spec.model == "msjmc":
        return msjmc.build_chain(TypeCounts(spec.counts), _params(spec))
    if spec.model == "add_drop":
        return fluctuating.build_add_drop_chain(spec.n, spec.T, _params(spec))
    if spec.model == "annihilation":
        return fluctuating.build_annihilation_chain(spec.n, spec.T, _params(spec))
    if spec.model == "overwriting":
        return overwriting.build_word_chain(spec.n, spec.T, _params(spec))
    return jugglers.build_chain(spec.r, spec.c, spec.balls)


def spec_formula(spec: ModelSpec) -> Distribution:
    """The per-model closed-form stationary vector, as a distribution."""
    states = spec_states(spec)
    p = _params(spec) if spec.model != "several_jugglers" else None
    if spec.model == "msjmc":
        Z = msjmc.partition_function(TypeCounts(spec.counts), p)
        return Distribution(
            states, tuple(msjmc.stationary_weight(w, p) / Z for w in states)
        )
    if spec.model == "add_drop":
        Z = fluctuating.add_drop_partition(spec.n, spec.T, p)
        return Distribution(
            states,
            tuple(fluctuating.add_drop_stationary_weight(w, p) / Z for w in states),
        )
    if spec.model == "annihilation":
        return Distribution(
            states, tuple(fluctuating.annihilation_stationary(w, p) for w in states)
        )
    if spec.model == "overwriting":
        return overwriting.overwriting_stationary_distribution(spec.n, spec.T, p)
    weights = [jugglers.juggler_stationary_weight(A) for A in states]
    if spec.backend == "float":
        weights = [float(x) for x in weights]
    return Distribution(states, tuple(weights)).normalize()


def spec_horizon(spec: ModelSpec) -> int:
    return spec.r if spec.model == "several_jugglers" else spec.n


def _cap(spec: ModelSpec, cap: int):
    size = state_count(spec)
    if size > cap:
        raise ValueError(
            f"{size} states exceed the cap {cap}; shrink the model"
        )


def _fmt(x):
    if isinstance(x, float):
        return x
    return format_scalar(x)


def _emit(text: str, args) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, args) -> None:
    _emit(json.dumps(obj, indent=2) + "\n", args)


# ----------------------------------------------------------------- commands


def cmd_enumerate(spec: ModelSpec, args) -> int:
    _cap(spec, STATE_CAP)
    states = spec_states(spec)
    lines = [f"# states: {len(states)}"] + [str(s) for s in states]
    _emit("\n".join(lines) + "\n", args)
    return 0


def cmd_matrix(spec: ModelSpec, args) -> int:
    _cap(spec, STATE_CAP)
    P = spec_chain(spec)
    labels = [str(s) for s in P.states]
    dense = P.dense()
    if args.format == "json":
        _emit_json(
            {
                "spec_version": SPEC_VERSION,
                "model": spec.model,
                "backend": spec.backend,
                "states": labels,
                "matrix": [[_fmt(x) for x in row] for row in dense],
            },
            args,
        )
    elif args.format == "csv":
        lines = ["state," + ",".join(labels)]
        for label, row in zip(labels, dense):
            lines.append(label + "," + ",".join(str(_fmt(x)) for x in row))
        _emit("\n".join(lines) + "\n", args)
    else:  # dot
        lines = ["digraph chain {", "  rankdir=LR;"]
        for i, row in enumerate(P.rows):
            for j, prob in sorted(row.items()):
                lines.append(
                    f'  "{labels[i]}" -> "{labels[j]}" [label="{_fmt(prob)}"];'
                )
        lines.append("}")
        _emit("\n".join(lines) + "\n", args)
    return 0


def cmd_stationary(spec: ModelSpec, args) -> int:
    _cap(spec, STATE_CAP)
    out = {"spec_version": SPEC_VERSION, "model": spec.model, "method": args.method}
    states = spec_states(spec)
    out["states"] = [str(s) for s in states]
    formula = solved = None
    if args.method in ("formula", "both"):
        formula = spec_formula(spec)
        out["formula"] = [_fmt(x) for x in formula.weights]
    if args.method in ("solve", "both"):
        P = spec_chain(spec)
        solved = stationary_exact(P) if P.exact else stationary_power(P)
        out["solve"] = [_fmt(x) for x in solved.weights]
    code = 0
    if args.method == "both":
        if formula.states != solved.states:
            raise ValueError("state orders diverged between methods")
        if P.exact:
            equal = formula.weights == solved.weights
        else:
            equal = all(
                abs(a - b) <= 1e-9 for a, b in zip(formula.weights, solved.weights)
            )
        out["verdict"] = "EQUAL" if equal else "DIFFER"
        code = 0 if equal else 2
    _emit_json(out, args)
    return code


def _base_m_probe(P: ChainMatrix, horizon: int):
    for m in range(1, max(2 * horizon, 4) + 1):
        ok, _ = ultrafast_check(P, m)
        if ok:
            return m
    return None


def _lumping_checks(spec: ModelSpec, P: ChainMatrix, checks: list):
    p = _params(spec)
    if spec.model == "overwriting":
        tabs = overwriting.enumerate_tableaux(spec.n, spec.T)
        _need(len(tabs) <= VERIFY_STATE_CAP,
              f"{len(tabs)} tableaux exceed the verify cap {VERIFY_STATE_CAP}")
        _need((spec.n + 1) ** (spec.n * (spec.T - 1)) <= VERIFY_STATE_CAP,
              "matrix enrichment exceeds the verify cap "
              f"{VERIFY_STATE_CAP}")
        Pt = overwriting.build_tableau_chain(spec.n, spec.T, p)
        Pm = overwriting.build_matrix_chain(spec.n, spec.T, p)
        ok, bad = verify_lumping(Pm, LumpingMap.from_function(
            overwriting.lump_matrix, Pm.states, tabs), Pt)
        checks.append(("matrix-to-tableau lumping", ok,
                       None if ok else f"counterexample {bad}"))
        ok, bad = verify_lumping(Pt, LumpingMap.from_function(
            overwriting.lump_tableau, tabs, P.states), P)
        checks.append(("tableau-to-word lumping", ok,
                       None if ok else f"counterexample {bad}"))
        fib = {V: Fraction(0) for V in tabs}
        for M in Pm.states:
            fib[overwriting.lump_matrix(M)] += overwriting.matrix_stationary_weight(M, p)
        bad = next(
            (V for V in tabs if fib[V] != overwriting.tableau_stationary(V, p)), None
        )
        checks.append(("fiber weight identity", bad is None,
                       None if bad is None else f"counterexample {bad}"))
        return
    if spec.model == "msjmc":
        size = len(msjmc.enumerate_enriched(TypeCounts(spec.counts)))
        _need(size <= VERIFY_STATE_CAP,
              f"{size} enriched states exceed the verify cap {VERIFY_STATE_CAP}")
        Pt = msjmc.build_enriched_chain(TypeCounts(spec.counts), p)
        weight = msjmc.enriched_stationary_weight
    else:
        size = len(fluctuating.enumerate_enriched_words(spec.n, spec.T))
        _need(size <= VERIFY_STATE_CAP,
              f"{size} enriched states exceed the verify cap {VERIFY_STATE_CAP}")
        if spec.model == "add_drop":
            Pt = fluctuating.build_enriched_add_drop_chain(spec.n, spec.T, p)
            weight = fluctuating.enriched_add_drop_weight
        else:
            Pt = fluctuating.build_enriched_annihilation_chain(spec.n, spec.T, p)
            weight = fluctuating.enriched_annihilation_weight
    ok, bad = verify_lumping(
        Pt, LumpingMap.from_function(lambda s: s.w, Pt.states, P.states), P
    )
    checks.append(("enriched-to-base lumping", ok,
                   None if ok else f"counterexample {bad}"))
    masses = {s: weight(s, p) for s in Pt.states}
    bad = None
    for jcol, sj in enumerate(Pt.states):
        acc = sum(masses[si] * Pt.entry(i, jcol) for i, si in enumerate(Pt.states))
        if acc != masses[sj]:
            bad = sj
            break
    checks.append(("enriched product law is stationary", bad is None,
                   None if bad is None else f"counterexample {bad}"))


def cmd_verify(spec: ModelSpec, args) -> int:
    if spec.backend != "exact":
        raise ValueError("verify needs the exact backend")
    _cap(spec, VERIFY_STATE_CAP)
    wordlike = spec.model in ("msjmc", "add_drop", "annihilation", "overwriting")
    # ultrafast/spectrum hold for overwriting only, so `all` skips them
    # elsewhere; an explicit request still runs any mechanically
    # possible suite and reports what it finds
    runnable = {"ultrafast", "spectrum"}
    if wordlike:
        runnable.add("lumping")
    if spec.model == "overwriting":
        runnable.add("marginals")
    if args.suite == "all":
        if spec.model == "overwriting":
            suites = {"lumping", "ultrafast", "spectrum", "marginals"}
        elif wordlike:
            suites = {"lumping"}
        else:
            suites = set()
    else:
        suites = {args.suite}
        if not suites <= runnable:
            raise ValueError(
                f"suite {args.suite} does not apply to {spec.model}; "
                f"runnable: {', '.join(sorted(runnable))}"
            )

    P = spec_chain(spec)
    checks: list[tuple[str, bool, Optional[str]]] = []
    irr = is_irreducible(P)
    checks.append(("irreducible", irr, None))
    if irr:
        period = chain_period(P)
        checks.append(("aperiodic", period == 1, f"period {period}"))
    horizon = spec_horizon(spec)

    if "lumping" in suites:
        _lumping_checks(spec, P, checks)
    if "ultrafast" in suites:
        m = _base_m_probe(P, horizon)
        checks.append(("ultrafast mixing", m is not None,
                       f"rows of P^{m} identical" if m is not None
                       else f"no identical-row power up to {max(2 * horizon, 4)}"))
    if "spectrum" in suites:
        flat = nilpotency_check(P, horizon)
        checks.append((f"spectrum in {{0, 1}} at horizon {horizon}", flat, None))
    if "marginals" in suites:
        p = _params(spec)
        pi = stationary_exact(P)
        mass = dict(zip(pi.states, pi.weights))
        bad = None
        for j in range(1, spec.T + 1):
            got = sum(m for w, m in mass.items() if w.letter(spec.n) == j)
            if got != overwriting.last_site_marginal(j, spec.n, spec.T, p):
                bad = f"last site {j}"
                break
        if bad is None and spec.n >= 2:
            for i in range(1, spec.T + 1):
                for j in range(1, spec.T + 1):
                    got = sum(
                        m for w, m in mass.items()
                        if w.letter(spec.n - 1) == i and w.letter(spec.n) == j
                    )
                    if got != overwriting.joint_last_two_marginal(
                        i, j, spec.n, spec.T, p
                    ):
                        bad = f"joint ({i}, {j})"
                        break
                if bad:
                    break
        checks.append(("closed-form marginals", bad is None, bad))

    lines = []
    failures = 0
    for name, ok, detail in checks:
        tag = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        lines.append(f"{tag} {name}" + (f" ({detail})" if detail else ""))
    if failures:
        lines.append(f"FAILED ({failures} of {len(checks)} checks)")
    else:
        lines.append(f"OK ({len(checks)} checks)")
    _emit("\n".join(lines) + "\n", args)
    return 2 if failures else 0


def cmd_simulate(spec: ModelSpec, args) -> int:
    _cap(spec, STATE_CAP)
    P = spec_chain(spec)
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("JUGGLE_SEED", DEFAULT_SEED))
    exact = spec_formula(spec)
    start = P.states[0]
    out = {
        "spec_version": SPEC_VERSION,
        "model": spec.model,
        "seed": seed,
        "states": [str(s) for s in P.states],
    }
    if args.replicas is not None:
        horizon = args.steps if args.steps is not None else spec_horizon(spec)
        empirical = simulate_replicas(P, start, horizon, args.replicas, seed)
        out["replicas"] = args.replicas
        out["horizon"] = horizon
    else:
        steps = args.steps if args.steps is not None else 10_000
        _, empirical = simulate(P, start, steps, seed)
        out["steps"] = steps
        out["burn_in"] = steps // 10
    out["empirical"] = [_fmt(x) for x in empirical.weights]
    out["exact"] = [_fmt(x) for x in exact.weights]
    out["tv_distance"] = float(total_variation(empirical, exact))
    _emit_json(out, args)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="jugglemc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("--spec", help="JSON model spec file")
    common.add_argument("--model", choices=[m for m in MODELS] + ["add-drop", "several-jugglers"])
    common.add_argument("--counts", help="comma-separated ball counts (msjmc)")
    common.add_argument("--n", type=int, help="word length")
    common.add_argument("--T", type=int, help="number of types")
    common.add_argument("--r", type=int, help="rows (several_jugglers)")
    common.add_argument("--c", type=int, help="columns (several_jugglers)")
    common.add_argument("--balls", type=int, help="ball count (several_jugglers)")
    common.add_argument("--z", help="comma-separated throw weights, n+1 entries")
    common.add_argument("--activities", help="comma-separated activities (add_drop)")
    common.add_argument("--backend", choices=["exact", "float"])
    common.add_argument("--out", help="write output to a file instead of stdout")

    sub.add_parser("enumerate", parents=[common],
                   help="list the canonical state order")
    mat = sub.add_parser("matrix", parents=[common],
                         help="print the transition matrix")
    mat.add_argument("--format", choices=["json", "csv", "dot"], default="json")
    sta = sub.add_parser("stationary", parents=[common],
                         help="stationary distribution by formula and/or solver")
    sta.add_argument("--method", choices=["formula", "solve", "both"],
                     default="both")
    ver = sub.add_parser("verify", parents=[common],
                         help="run exact verification suites")
    ver.add_argument("--suite",
                     choices=["lumping", "ultrafast", "spectrum", "marginals", "all"],
                     default="all")
    sim = sub.add_parser("simulate", parents=[common],
                         help="seeded Monte Carlo with TV against the exact law")
    sim.add_argument("--steps", type=int,
                     help="trajectory length (or horizon with --replicas)")
    sim.add_argument("--seed", type=int, help="RNG seed (default: $JUGGLE_SEED or 1)")
    sim.add_argument("--replicas", type=int,
                     help="independent runs; empirical law of the endpoints")
    return parser


COMMANDS = {
    "enumerate": cmd_enumerate,
    "matrix": cmd_matrix,
    "stationary": cmd_stationary,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args)
        return COMMANDS[args.command](spec, args)
    except (JuggleError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
