"""Command-line harness: configuration loading, command dispatch and
deterministic result emission.

Configs are flat ``key = value`` text files with JSON-encoded values (one
nesting level, used by ``mu`` and ``budgets``).  Every command writes its
tables to the output directory as CSV or JSON-lines with the config digest in
the header; data files are a pure function of (config, seed), so repeated
runs are byte-identical.  Wall time goes to a separate meta file.  Exit
codes: 0 success, 1 check failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

from . import __version__
from .qdims import QParam, dim_min, dim_q, log_dim_q
from .walk import ProbMeasure, convolution_power, n_step, rho, sample_path, transition_row
from .words import EPSILON, Word, all_words, fuse, is_alternating

_DEFAULT_BUDGETS = {
    "strands": 14,
    "radius": 6,
    "horizon": 12,
    "samples": 100_000,
    "max_steps": 10_000,
    "stable_steps": 50,
}

_KNOWN_KEYS = {"q", "mu", "seed", "workers", "budgets"}


class ConfigError(ValueError):
    pass


class CheckFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    q: QParam
    mu: ProbMeasure
    seed: int = 0
    workers: int = 1
    budgets: dict[str, int] = field(default_factory=lambda: dict(_DEFAULT_BUDGETS))
    warnings: list[str] = field(default_factory=list)

    def canonical(self) -> dict:
        # workers is an execution detail: results are identical for any
        # worker count, so it stays out of the digest
        return {
            "q": self.q.q,
            "mu": {str(w): p for w, p in sorted(self.mu.weights.items())},
            "seed": self.seed,
            "budgets": {k: self.budgets[k] for k in sorted(self.budgets)},
        }

    def digest(self, extra: dict | None = None) -> str:
        payload = dict(self.canonical())
        if extra:
            payload["command_args"] = {k: extra[k] for k in sorted(extra)}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path: str) -> RunConfig:
    """Parse and validate the flat key-value config format."""
    raw: dict = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as ex:
        raise ConfigError(f"cannot read config: {ex}")
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            raw[key] = json.loads(value.strip())
        except json.JSONDecodeError as ex:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {ex}")
    return _validate(raw)


def _validate(raw: dict) -> RunConfig:
    warnings: list[str] = []
    if "q" not in raw:
        raise ConfigError("missing required key 'q'")
    try:
        q = QParam(float(raw["q"]))
    except (TypeError, ValueError) as ex:
        raise ConfigError(f"q: {ex}")
    mu_table = raw.get("mu", {"a": 0.5, "b": 0.5})
    if not isinstance(mu_table, dict) or not mu_table:
        raise ConfigError("mu must be a nonempty mapping of words to weights")
    total = math.fsum(float(v) for v in mu_table.values())
    if abs(total - 1.0) > 1e-3:
        raise ConfigError(f"mu weights sum to {total}, beyond tolerance 1e-3")
    if abs(total - 1.0) > 1e-9:
        warnings.append(f"mu normalized from total {total}")
        mu_table = {k: float(v) / total for k, v in mu_table.items()}
    try:
        mu = ProbMeasure.from_strings({k: float(v) for k, v in mu_table.items()},
                                      normalize_tol=1e-9)
    except ValueError as ex:
        raise ConfigError(f"mu: {ex}")
    seed = int(raw.get("seed", 0))
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit nonnegative integer")
    workers = int(raw.get("workers", 1))
    if workers < 1:
        raise ConfigError("workers must be positive")
    budgets = dict(_DEFAULT_BUDGETS)
    for k, v in raw.get("budgets", {}).items():
        if k not in _DEFAULT_BUDGETS:
            raise ConfigError(f"unknown budget {k!r}")
        v = int(v)
        if v < 1:
            raise ConfigError(f"budget {k} must be positive")
        budgets[k] = v
    return RunConfig(q, mu, seed, workers, budgets, warnings)


@dataclass
class ResultEnvelope:
    command: str
    digest: str
    version: str
    wall_time: float
    tables: dict[str, tuple[list[str], list[list]]]
    check_failed: bool = False


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def emit(env: ResultEnvelope, fmt: str, out_dir: str) -> list[str]:
    """Write one data file per table plus a meta file; data files carry the
    digest header and no timestamp, so identical runs are byte-identical."""
    out_dir = os.environ.get("FREEWALK_OUT", out_dir)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, (columns, rows) in env.tables.items():
        ext = "csv" if fmt == "csv" else "jsonl"
        path = os.path.join(out_dir, f"{env.command}_{name}.{ext}")
        buf = io.StringIO()
        if fmt == "csv":
            buf.write(f"# command={env.command} digest={env.digest} "
                      f"version={env.version}\n")
            writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        else:
            buf.write(json.dumps({"command": env.command, "digest": env.digest,
                                  "version": env.version}) + "\n")
            for row in rows:
                buf.write(json.dumps(dict(zip(columns, row)), sort_keys=True)
                          + "\n")
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
        written.append(path)
    meta = os.path.join(out_dir, f"{env.command}_meta.json")
    tmp = meta + ".tmp"
    with open(tmp, "w") as fh:
        json.dump({"command": env.command, "digest": env.digest,
                   "version": env.version, "wall_time": env.wall_time,
                   "timestamp": time.time()}, fh)
    os.replace(tmp, meta)
    written.append(meta)
    return written


# --- command implementations; each returns {table: (columns, rows)} and may
# --- raise CheckFailure


def _cmd_fuse(cfg, args):
    terms = fuse(Word.parse(args.x), Word.parse(args.y))
    rows = [[str(t.summand), str(t.cancelled), len(t.cancelled)] for t in terms]
    return {"terms": (["summand", "cancelled", "cancel_len"], rows)}


def _cmd_qdim(cfg, args):
    words = [Word.parse(s) for s in args.x.split(",")]
    rows = [[str(w), dim_q(w, cfg.q).linear, log_dim_q(w, cfg.q.q), dim_min(w)]
            for w in words]
    return {"dims": (["word", "dim_q", "log_dim_q", "dim_min"], rows)}


def _cmd_kernel(cfg, args):
    row = transition_row(Word.parse(args.x), cfg.mu, cfg.q)
    rows = [[str(row.source), str(y), p] for y, p in sorted(row.entries.items())]
    return {"row": (["source", "target", "probability"], rows)}


def _cmd_convolve(cfg, args):
    out = convolution_power(cfg.mu, args.n, cfg.q)
    rows = [[str(w), p] for w, p in sorted(out.weights.items())]
    return {"measure": (["word", "weight"], rows)}


def _cmd_rho(cfg, args):
    return {"rho": (["rho"], [[rho(cfg.mu, cfg.q)]])}


def _cmd_walk(cfg, args):
    path = sample_path(Word.parse(args.x), args.steps, cfg.mu, cfg.q, cfg.seed)
    rows = [[k, str(w), len(w)] for k, w in enumerate(path)]
    return {"path": (["step", "word", "length"], rows)}


def _policy(cfg):
    from .boundary import StoppingPolicy

    return StoppingPolicy(stable_steps=cfg.budgets["stable_steps"],
                          max_steps=cfg.budgets["max_steps"])


def _cmd_hit(cfg, args):
    from .boundary import Cylinder, estimate_hitting

    est = estimate_hitting(Word.parse(args.x), Cylinder(Word.parse(args.z)),
                           cfg.budgets["samples"], cfg.mu, cfg.q,
                           _policy(cfg), cfg.seed, cfg.workers)
    rows = [[args.x, args.z, est.value, est.stderr, est.samples, est.unresolved]]
    return {"hits": (["start", "cylinder", "estimate", "stderr", "samples",
                      "unresolved"], rows)}


def _cmd_harmonic_check(cfg, args):
    from .boundary import Cylinder, estimate_hitting

    x = Word.parse(args.x)
    z = Cylinder(Word.parse(args.z))
    n = cfg.budgets["samples"]
    lhs = estimate_hitting(x, z, n, cfg.mu, cfg.q, _policy(cfg), cfg.seed,
                           cfg.workers)
    row = transition_row(x, cfg.mu, cfg.q)
    rhs, var = 0.0, 0.0
    for i, (y, p) in enumerate(sorted(row.entries.items())):
        e = estimate_hitting(y, z, n, cfg.mu, cfg.q, _policy(cfg),
                             cfg.seed + 1000 + i, cfg.workers)
        rhs += p * e.value
        var += (p * e.stderr) ** 2
    sigma = math.sqrt(lhs.stderr ** 2 + var)
    resid = abs(lhs.value - rhs)
    ok = resid <= args.tolerance_scale * 3.0 * sigma
    rows = [[args.x, args.z, lhs.value, rhs, sigma, resid, ok]]
    tables = {"harmonic": (["x", "cylinder", "lhs", "rhs", "sigma",
                            "residual", "pass"], rows)}
    if not ok:
        raise CheckFailure(tables)
    return tables


def _cmd_convolutie_check(cfg, args):
    from .boundary import Cylinder, convolutie_check

    rep = convolutie_check(Word.parse(args.x), Cylinder(Word.parse(args.z)),
                           cfg.budgets["samples"], cfg.mu, cfg.q,
                           _policy(cfg), cfg.seed, cfg.workers)
    ok = rep.residual <= args.tolerance_scale * 3.0 * rep.combined_stderr
    rows = [[args.x, args.z, rep.lhs, rep.rhs, rep.combined_stderr,
             rep.residual, ok]]
    tables = {"convolutie": (["x", "cylinder", "lhs", "rhs", "sigma",
                              "residual", "pass"], rows)}
    if not ok:
        raise CheckFailure(tables)
    return tables


def _cmd_atom_scan(cfg, args):
    from .boundary import atom_scan

    depths = [int(d) for d in args.depths.split(",")]
    rep = atom_scan(args.letter, depths, cfg.budgets["samples"], cfg.mu,
                    cfg.q, _policy(cfg), cfg.seed, cfg.workers)
    rows = []
    ok = rep.support_ok
    prev = None
    for d, e in zip(rep.depths, rep.estimates):
        mono = prev is None or e.value <= prev.value + args.tolerance_scale \
            * 3.0 * math.hypot(e.stderr, prev.stderr)
        ok = ok and mono
        rows.append([d, e.value, e.stderr, e.samples, mono])
        prev = e
    tables = {
        "masses": (["depth", "estimate", "stderr", "samples",
                    "non_increasing"], rows),
        "support": (["support_ok", "min_mass"],
                    [[rep.support_ok, rep.support_min_mass]]),
    }
    if not ok:
        raise CheckFailure(tables)
    return tables


def _cmd_tl_verify(cfg, args):
    import numpy as np

    from .tl import TLContext
    from .words import fusion_summands

    ctx = TLContext(cfg.q, cfg.budgets["strands"])
    scale = args.tolerance_scale
    rows = []

    def check(name, value, tol):
        rows.append([name, value, tol, value <= tol * scale])

    delta = cfg.q.q + 1.0 / cfg.q.q
    t, s = ctx.cups.t.reshape(2, 2), ctx.cups.s.reshape(2, 2)
    for nm, (cap, cup) in (("zigzag_ts", (t, s)), ("zigzag_st", (s, t))):
        worst = 0.0
        for i in range(2):
            v = np.zeros(2)
            v[i] = 1.0
            out = np.einsum("pq,pqr->r", cap, np.einsum("p,qr->pqr", v, cup))
            ref = v / delta
            worst = max(worst, float(np.abs(out - ref).max()))
        check(nm, worst, 1e-12)
    for n in range(2, 8):
        f = ctx.jones_wenzl(n)
        check(f"jw{n}_idempotent", float(np.abs(f @ f - f).max()), 1e-10)
        ann = max(float(np.abs(ctx.cup_generator(n, i) @ f).max())
                  for i in range(n - 1))
        check(f"jw{n}_annihilation", ann, 1e-10)
    for w in all_words(6, 1):
        ws = ctx.word_space(w)
        err = abs(float(np.trace(ws.qop)) - ws.trace_q) / ws.trace_q
        check(f"trace_q_{w}", err, 1e-9)
    for xs, ys in (("ab", "ab"), ("aab", "ba"), ("aa", "bb")):
        x, y = Word(xs), Word(ys)
        tot = sum(ctx.channel_projection(x, y, z)
                  for z in fusion_summands(x, y))
        err = float(np.abs(tot - np.eye(dim_min(x) * dim_min(y))).max())
        check(f"completeness_{xs}_{ys}", err, 1e-9)
    tables = {"checks": (["check", "value", "tolerance", "pass"], rows)}
    if not all(r[3] for r in rows):
        raise CheckFailure(tables)
    return tables


def _cmd_estimates(cfg, args):
    from .tl import TLContext, approx_estimates, estimate_scan

    ctx = TLContext(cfg.q, cfg.budgets["strands"])
    cols = ["x", "y", "z", "r", "q", "lhs1", "lhs2", "lhs_variant", "q_pow_y"]
    rows = []
    if args.scan_budget:
        for rep in estimate_scan(args.scan_budget, ctx):
            rows.append([str(rep.x), str(rep.y), str(rep.z), str(rep.r),
                         rep.q, rep.lhs1, rep.lhs2, rep.lhs_variant,
                         rep.q_pow_y])
    else:
        rep = approx_estimates(Word.parse(args.x), Word.parse(args.y),
                               Word.parse(args.z), Word.parse(args.r), ctx)
        rows.append([str(rep.x), str(rep.y), str(rep.z), str(rep.r), rep.q,
                     rep.lhs1, rep.lhs2, rep.lhs_variant, rep.q_pow_y])
    return {"estimates": (cols, rows)}


def _cmd_qmarkov(cfg, args):
    from .blocks import BlockElement, TruncationPolicy, markov_apply
    from .tl import TLContext

    ctx = TLContext(cfg.q, cfg.budgets["strands"])
    trunc = TruncationPolicy(cfg.budgets["radius"])
    w = Word.parse(args.w)
    out = markov_apply(BlockElement.indicator(w), cfg.mu, ctx, trunc)
    rows = []
    ok = True
    for x in all_words(min(4, trunc.radius)):
        if out.leak(x) > 0:
            rows.append([str(x), "", transition_row(x, cfg.mu, cfg.q)(w),
                         out.leak(x), False])
            continue
        scalar = out.scalar_at(x, tol=1e-8 * args.tolerance_scale)
        expect = transition_row(x, cfg.mu, cfg.q)(w)
        good = abs(scalar - expect) <= 1e-8 * args.tolerance_scale
        ok = ok and good
        rows.append([str(x), scalar, expect, 0.0, good])
    tables = {"blocks": (["word", "scalar", "expected", "leak", "pass"], rows)}
    if not ok:
        raise CheckFailure(tables)
    return tables


def _cmd_dirichlet(cfg, args):
    import numpy as np

    from .blocks import dirichlet_profile
    from .tl import TLContext

    ctx = TLContext(cfg.q, cfg.budgets["strands"])
    x0 = Word.parse(args.x0)
    rng = np.random.default_rng(cfg.seed)
    d0 = dim_min(x0)
    a = rng.standard_normal((d0, d0))
    a = a + a.T
    lengths = [int(v) for v in args.lengths.split(",")]
    prof = dirichlet_profile(x0, a, cfg.mu.support, lengths, ctx)
    rows = [[L, v] for L, v in zip(prof.lengths, prof.values)]
    ok = (prof.two_form_error <= 1e-8 * args.tolerance_scale
          and prof.values[-1] < prof.values[0])
    tables = {
        "profile": (["length", "defect"], rows),
        "two_form": (["two_form_error", "endpoint_decrease", "pass"],
                     [[prof.two_form_error,
                       prof.values[-1] < prof.values[0], ok]]),
    }
    if not ok:
        raise CheckFailure(tables)
    return tables


def _cmd_omega_check(cfg, args):
    import numpy as np

    from .blocks import omega_infinity_check
    from .tl import TLContext

    ctx = TLContext(cfg.q, cfg.budgets["strands"])
    x0 = Word.parse(args.x0)
    d0 = dim_min(x0)
    if args.random_a:
        rng = np.random.default_rng(cfg.seed)
        a = rng.standard_normal((d0, d0))
        a = a + a.T
    else:
        a = np.eye(d0)
    rep = omega_infinity_check(x0, a, ctx, cfg.mu,
                               samples=cfg.budgets["samples"], seed=cfg.seed,
                               workers=cfg.workers)
    ok = rep.residual <= args.tolerance_scale * rep.tolerance
    rows = [[args.x0, rep.lhs, rep.rhs, rep.psi_value, rep.nu_value,
             rep.nu_stderr, rep.iterations, rep.residual, rep.tolerance, ok]]
    tables = {"omega": (["x0", "lhs", "rhs", "psi_value", "nu_value",
                         "nu_stderr", "iterations", "residual", "tolerance",
                         "pass"], rows)}
    if not ok:
        raise CheckFailure(tables)
    return tables


_COMMANDS = {
    "fuse": (_cmd_fuse, ("x", "y")),
    "qdim": (_cmd_qdim, ("x",)),
    "kernel": (_cmd_kernel, ("x",)),
    "convolve": (_cmd_convolve, ("n",)),
    "rho": (_cmd_rho, ()),
    "walk": (_cmd_walk, ("x", "steps")),
    "hit": (_cmd_hit, ("x", "z")),
    "harmonic-check": (_cmd_harmonic_check, ("x", "z")),
    "convolutie-check": (_cmd_convolutie_check, ("x", "z")),
    "atom-scan": (_cmd_atom_scan, ("letter", "depths")),
    "tl-verify": (_cmd_tl_verify, ()),
    "estimates": (_cmd_estimates, ()),
    "qmarkov": (_cmd_qmarkov, ("w",)),
    "dirichlet": (_cmd_dirichlet, ("x0", "lengths")),
    "omega-check": (_cmd_omega_check, ("x0",)),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freewalk",
        description="random walks and boundary checks on the two-letter "
                    "fusion monoid")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, _needed) in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="out")
        p.add_argument("--format", choices=("csv", "json-lines"),
                       default="csv")
        p.add_argument("--tolerance-scale", type=float, default=1.0,
                       dest="tolerance_scale")
        for opt in ("x", "y", "z", "r", "w", "x0", "letter", "depths",
                    "lengths"):
            p.add_argument(f"--{opt}")
        p.add_argument("--n", type=int, default=2)
        p.add_argument("--steps", type=int, default=20)
        p.add_argument("--scan-budget", type=int, default=0,
                       dest="scan_budget")
        p.add_argument("--random-a", action="store_true", dest="random_a")
    return parser


def dispatch(command: str, cfg: RunConfig, args) -> ResultEnvelope:
    fn, needed = _COMMANDS[command]
    for opt in needed:
        if getattr(args, opt.replace("-", "_"), None) is None:
            raise ConfigError(f"command {command} requires --{opt}")
    extra = {k: getattr(args, k) for k in
             ("x", "y", "z", "r", "w", "x0", "letter", "depths", "lengths",
              "n", "steps", "scan_budget", "random_a", "tolerance_scale")
             if getattr(args, k, None) not in (None, False)}
    digest = cfg.digest(extra)
    t0 = time.time()
    failed = False
    try:
        tables = fn(cfg, args)
    except CheckFailure as ex:
        tables = ex.args[0]
        failed = True
    return ResultEnvelope(command, digest, __version__, time.time() - t0,
                          tables, failed)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return 2 if ex.code not in (0, None) else 0
    try:
        cfg = load_config(args.config)
    except ConfigError as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return 2
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    try:
        env = dispatch(args.command, cfg, args)
    except ConfigError as ex:
        print(f"usage error: {ex}", file=sys.stderr)
        return 2
    try:
        for path in emit(env, args.format, args.out):
            print(path)
    except OSError as ex:
        print(f"output error: {ex}", file=sys.stderr)
        return 2
    return 1 if env.check_failed else 0


if __name__ == "__main__":
    sys.exit(main())
