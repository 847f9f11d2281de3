"""Command-line front end.

Subcommands: verify, factor, sweep, gates, export. Human-readable summaries
go to stdout; CSV/JSON/JSON-lines artifacts are written only where --out or
--csv points. Relative output paths are resolved against $DFTSHOR_OUTPUT_DIR
when it is set.

Exit codes: 0 success, 1 a tolerance or search failed, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .builders import Backend, ResetStrategy, build_modmul, build_order_finding, default_control_count
from .circuit import CostModel, deserialize, serialize
from .numtheory import DomainError, ModMulParams, canonical_odd_multiplier
from .simulator import CapacityError
from .verify import (
    check_dft_identity,
    fidelity_sweep,
    run_order_finding,
    scaling_report,
    verify_modmul_action,
    write_fidelity_csv,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

DEFAULT_SEED = 20240611
DFT_TOL = 1e-10
EXACT_TOL = 1e-9
PREDICTION_TOL = 1e-6


class UsageError(Exception):
    """Bad flag combination; the message names the offending flag."""


def _output_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get("DFTSHOR_OUTPUT_DIR")
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _write(path: str, text: str) -> Path:
    p = _output_path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc.strerror or exc}") from None
    return p


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _modmul_params(N: int, A: int, L: int | None) -> ModMulParams:
    if N < 2:
        raise UsageError(f"--modulus: must be >= 2, got {N}")
    if _is_power_of_two(N):
        if L is not None and 1 << L != N:
            raise UsageError(f"--L: a power-of-two modulus needs L = {N.bit_length() - 1}")
        if A % 2 == 0 or not 0 < A < N:
            raise UsageError(f"--multiplier: must be odd in [1, {N}) for N = {N}")
        return ModMulParams.power_of_two(N.bit_length() - 1, A)
    if math.gcd(A, N) != 1:
        raise UsageError(f"--multiplier: multiplier not coprime to modulus ({A}, {N})")
    if A % 2 == 0:
        raise UsageError(f"--multiplier: the circuit needs an odd multiplier; try {canonical_odd_multiplier(A, N)}")
    return ModMulParams(N, A, L if L is not None else N.bit_length())


# -- verify ----------------------------------------------------------------------


def cmd_verify(args) -> int:
    if not (args.eq4 or args.circuit):
        raise UsageError("verify: pass --eq4 and/or --circuit")
    N, A = args.modulus, args.multiplier
    ok = True
    report: dict = {"N": N, "A": A}
    if args.eq4:
        if N < 1:
            raise UsageError(f"--modulus: must be positive, got {N}")
        if math.gcd(A, N) != 1:
            raise UsageError(f"--multiplier: multiplier not coprime to modulus ({A}, {N})")
        err = check_dft_identity(N, A)
        passed = err <= DFT_TOL
        ok &= passed
        report["dft_identity_max_error"] = err
        print(f"dft identity N={N} A={A}: max error {err:.3e} ({'ok' if passed else 'FAIL'})")
    if args.circuit:
        params = _modmul_params(N, A, args.L)
        strategy = ResetStrategy(args.strategy)
        records = verify_modmul_action(params, strategy, seed=args.seed)
        exact = params.exact_modulus or strategy is ResetStrategy.MEASURED
        worst = min(r.output_fidelity for r in records)
        stage_err = max(max(abs(r.reset_probability_stage1 - r.predicted_stage_probability),
                            abs(r.reset_probability_stage2 - r.predicted_stage2_probability),
                            abs(r.output_fidelity - r.predicted_output_fidelity)) for r in records)
        passed = stage_err <= PREDICTION_TOL and (not exact or worst >= 1 - EXACT_TOL)
        ok &= passed
        report.update(strategy=strategy.value, min_output_fidelity=worst,
                      max_prediction_error=stage_err)
        print(f"circuit N={N} A={A} L={params.L} {strategy.value}: min fidelity {worst:.12f}, "
              f"max prediction error {stage_err:.3e} ({'ok' if passed else 'FAIL'})")
        if args.csv:
            print(f"wrote {_write(args.csv, write_fidelity_csv(records))}")
    if args.out:
        report["passed"] = bool(ok)
        print(f"wrote {_write(args.out, json.dumps(report, sort_keys=True, indent=2) + chr(10))}")
    return EXIT_OK if ok else EXIT_FAIL


# -- factor ----------------------------------------------------------------------


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


def cmd_factor(args) -> int:
    N = args.N
    if N < 3 or N % 2 == 0:
        raise UsageError(f"N: expected an odd composite number, got {N}")
    if _is_prime(N):
        raise UsageError(f"N: {N} is prime")
    if args.attempts < 1:
        raise UsageError("--attempts: must be at least 1")
    t = args.t if args.t is not None else default_control_count(N)
    if 2 * N.bit_length() + t > 26:
        raise CapacityError(f"--t: 2L + t = {2 * N.bit_length() + t} exceeds the 26-qubit capacity")
    rng = np.random.default_rng(args.seed)
    attempts = []
    found = None
    for _ in range(args.attempts):
        A = int(rng.integers(2, N - 1))
        run_seed = int(rng.integers(2**31))
        result = run_order_finding(N, A, t, run_seed, Backend(args.backend), args.lcm)
        attempts.append(result.to_dict())
        if result.success:
            found = result
            break
    summary = {"N": N, "seed": args.seed, "backend": args.backend, "t": t,
               "factors": list(found.factors) if found else None,
               "attempts": attempts}
    if args.out:
        print(f"wrote {_write(args.out, json.dumps(summary, sort_keys=True, indent=2) + chr(10))}")
    if found is None:
        print(f"no factors of {N} after {len(attempts)} attempts")
        return EXIT_FAIL
    how = "gcd shortcut" if found.measured_y is None else f"order r={found.recovered_r}"
    print(f"{N} = {found.factors[0]} x {found.factors[1]} (A={found.A}, {how}, "
          f"attempt {len(attempts)})")
    return EXIT_OK


# -- sweep / gates / export --------------------------------------------------------


def cmd_sweep(args) -> int:
    N = args.modulus
    if N < 3:
        raise UsageError(f"--modulus: must be >= 3, got {N}")
    if _is_power_of_two(N):
        L = N.bit_length() - 1
        records = []
        for A in range(1, N, 2):
            records.extend(verify_modmul_action(ModMulParams.power_of_two(L, A), args.strategy, args.seed))
    elif N % 2 == 0:
        raise UsageError(f"--modulus: must be odd or a power of two, got {N}")
    else:
        records = fidelity_sweep(N, args.L, args.strategy, args.seed)
    worst = max(abs(r.output_fidelity - r.predicted_output_fidelity) for r in records)
    fids = [r.output_fidelity for r in records]
    print(f"sweep N={N} {args.strategy}: {len(records)} records, fidelity "
          f"min {min(fids):.6f} mean {sum(fids) / len(fids):.6f} max {max(fids):.6f}, "
          f"max prediction error {worst:.3e}")
    if args.csv:
        print(f"wrote {_write(args.csv, write_fidelity_csv(records))}")
    return EXIT_OK if worst <= PREDICTION_TOL else EXIT_FAIL


def cmd_gates(args) -> int:
    if not 2 <= args.lmin <= args.lmax <= 16:
        raise UsageError("--lmin/--lmax: need 2 <= lmin <= lmax <= 16")
    model = CostModel(mod_shift_coefficient=args.modshift_coefficient,
                      control_multiplier=args.control_multiplier)
    report = scaling_report(range(args.lmin, args.lmax + 1), model=model)
    for r in report.rows:
        print(f"L={r.L:2d} N={r.N:6d} gates={r.total_gates:5d} modshift={r.modshift_count:3d} "
              f"gates/L^2={r.ratio:.3f} modexp/L^3={r.modexp_ratio:.3f}")
    print(f"spread gates/L^2 x{report.spread('ratio'):.3f}, modexp/L^3 x{report.spread('modexp_ratio'):.3f}")
    if args.csv:
        print(f"wrote {_write(args.csv, report.to_csv())}")
    if args.json:
        print(f"wrote {_write(args.json, report.to_json())}")
    return EXIT_OK


def cmd_export(args) -> int:
    if args.what == "modmul":
        if args.multiplier is None:
            raise UsageError("--multiplier: required for modmul export")
        circuit = build_modmul(_modmul_params(args.modulus, args.multiplier, args.L), args.strategy)
    else:
        if args.multiplier is None:
            raise UsageError("--multiplier: required for order-finding export")
        circuit = build_order_finding(args.modulus, args.multiplier, args.t, args.backend)
    text = serialize(circuit)
    if deserialize(text) != circuit:
        print("round-trip check failed", file=sys.stderr)
        return EXIT_FAIL
    print(f"wrote {_write(args.out, text)} ({len(circuit)} gates on {circuit.num_qubits} qubits)")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dftshor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check the DFT identity and/or the circuit action")
    p.add_argument("--eq4", action="store_true", help="check F_N^-1 G_N against the permutation")
    p.add_argument("--circuit", action="store_true", help="simulate the circuit on every basis input")
    p.add_argument("--modulus", type=int, required=True)
    p.add_argument("--multiplier", type=int, required=True)
    p.add_argument("--L", type=int, default=None, help="register width (default: minimal)")
    p.add_argument("--strategy", choices=[s.value for s in ResetStrategy], default="unitary")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--csv", help="write per-input fidelity records here")
    p.add_argument("--out", help="write a JSON summary here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("factor", help="factor N by simulated order finding")
    p.add_argument("N", type=int)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--backend", choices=[b.value for b in Backend], default="ideal")
    p.add_argument("--t", type=int, default=None, help="control qubits (default 2L, capacity capped)")
    p.add_argument("--attempts", type=int, default=32)
    p.add_argument("--lcm", action="store_true", help="combine two readouts via lcm when one fails")
    p.add_argument("--out", help="write the JSON result here")
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("sweep", help="fidelity records for every odd coprime multiplier")
    p.add_argument("--modulus", type=int, required=True)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--strategy", choices=[s.value for s in ResetStrategy], default="unitary")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gates", help="gate-count scaling report")
    p.add_argument("--lmin", type=int, default=4)
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--modshift-coefficient", type=float, default=1.0)
    p.add_argument("--control-multiplier", type=float, default=1.0)
    p.add_argument("--csv")
    p.add_argument("--json")
    p.set_defaults(func=cmd_gates)

    p = sub.add_parser("export", help="write a circuit as JSON lines")
    p.add_argument("--what", choices=["modmul", "order-finding"], default="modmul")
    p.add_argument("--modulus", type=int, required=True)
    p.add_argument("--multiplier", type=int)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--strategy", choices=[s.value for s in ResetStrategy], default="unitary")
    p.add_argument("--backend", choices=[b.value for b in Backend], default="ideal")
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
