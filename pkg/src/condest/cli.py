"""Command-line surface: estimate condition numbers and reproduce the
bundled diagnostic experiments.

Outputs are machine readable: one JSON report on stdout per estimation,
optional CSV traces for the per-iteration quantities.  Exit codes:
0 success, 2 input/parse error, 3 iteration cap reached (the report is
still emitted).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import matgen
from .estimator import (
    EstimatorConfig,
    StopReason,
    estimate_condition,
    lsqr_state_from_rhs,
    lsqr_step,
)
from .bidiag import BidiagonalUpper
from .linops import (
    LinearOperator,
    MatrixMarketError,
    norm2,
    parse_matrix_market,
)
from .spectral import estimate_sigma_max, inverse_power_sigma_min
from .svd_oracle import baseline_sigma_min_by_norm, jacobi_svd

TRACE_HEADER = "t,residual_norm,error_norm,rayleigh,best_sigma_min,phi_bar"
BASELINE_HEADER = "t,atr_over_sr,norm_ratio_estimate,lanczos_sigma_min"


class _CountingOperator(LinearOperator):
    """Pass-through wrapper that counts operator applications."""

    def __init__(self, inner: LinearOperator):
        self._inner = inner
        self.rows = inner.rows
        self.cols = inner.cols
        self.applications = 0

    def apply(self, x):
        self.applications += 1
        return self._inner.apply(x)

    def apply_adjoint(self, y):
        self.applications += 1
        return self._inner.apply_adjoint(y)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _load_input(args, seed: int):
    """Resolve the single input source into (descriptor, operator)."""
    if args.mtx is not None:
        with open(args.mtx, "r", encoding="ascii") as fh:
            matrix = parse_matrix_market(fh)
        return f"mtx:{args.mtx}", matrix
    if args.preset is not None:
        m, n, spec = matgen.preset(args.preset)
        rng = matgen.derive_rng(seed, matgen.ROLE_MATGEN)
        gen = matgen.matrix_with_spectrum(m, n, spec, rng)
        return f"preset:{args.preset}", gen.matrix
    m, n = _parse_shape(args.sign_matrix)
    rng = matgen.derive_rng(seed, matgen.ROLE_MATGEN)
    matrix = matgen.random_sign_matrix(m, n, rng=rng)
    return f"sign-matrix:{m}x{n}", matrix


def _parse_shape(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError("--sign-matrix expects 'm,n'")
    m, n = int(parts[0]), int(parts[1])
    if m < 1 or n < 1:
        raise ValueError("--sign-matrix dimensions must be positive")
    return m, n


def _config_from_args(args) -> EstimatorConfig:
    extra = 0.0 if args.no_extra else args.extra_fraction
    return EstimatorConfig(
        c1=args.c1,
        c1_prime=args.c1_prime,
        c2=args.c2,
        c3=args.c3,
        c4_kappa=args.c4_kappa,
        max_iterations=args.max_iter,
        extra_fraction=extra,
        repeats=args.repeats,
        seed=args.seed,
    )


def _add_config_flags(parser: argparse.ArgumentParser):
    defaults = EstimatorConfig()
    parser.add_argument("--c1", type=float, default=defaults.c1)
    parser.add_argument("--c1-prime", type=float, default=defaults.c1_prime, dest="c1_prime")
    parser.add_argument("--c2", type=float, default=defaults.c2)
    parser.add_argument("--c3", type=float, default=defaults.c3)
    parser.add_argument("--c4-kappa", type=float, default=defaults.c4_kappa, dest="c4_kappa")
    parser.add_argument("--max-iter", type=int, default=defaults.max_iterations, dest="max_iter")
    parser.add_argument(
        "--extra-fraction", type=float, default=defaults.extra_fraction, dest="extra_fraction"
    )
    parser.add_argument(
        "--no-extra",
        action="store_true",
        help="stop as soon as convergence is detected (extra_fraction = 0)",
    )
    parser.add_argument("--repeats", type=int, default=defaults.repeats)
    parser.add_argument("--seed", type=int, default=0)


def _write_trace(path: str, trace):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(TRACE_HEADER + "\n")
        for t, residual, error, rayleigh, best, phi_bar in trace.rows():
            fh.write(
                f"{t},{_fmt(residual)},{_fmt(error)},{_fmt(rayleigh)},"
                f"{_fmt(best)},{_fmt(phi_bar)}\n"
            )


def _write_certificates(path: str, v_max, v_min):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(" ".join(_fmt(x) for x in v_max) + "\n")
        fh.write(" ".join(_fmt(x) for x in v_min) + "\n")


def cmd_estimate(args) -> int:
    operator: _CountingOperator | None = None
    try:
        descriptor, matrix = _load_input(args, args.seed)
        config = _config_from_args(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    operator = _CountingOperator(matrix)
    started = time.perf_counter()
    result = estimate_condition(operator, config)
    seconds = time.perf_counter() - started

    report = {
        "input": descriptor,
        "m": matrix.rows,
        "n": matrix.cols,
        "config": {
            "c1": config.c1,
            "c1_prime": config.c1_prime,
            "c2": config.c2,
            "c3": config.c3,
            "c4_kappa": config.c4_kappa,
            "epsilon_power": config.epsilon_power,
            "delta_power": config.delta_power,
            "max_iterations": config.max_iterations,
            "extra_fraction": config.extra_fraction,
            "repeats": config.repeats,
            "seed": config.seed,
        },
        "sigma_max_hat": result.sigma_max_hat,
        "sigma_min_hat": result.sigma_min_hat,
        "sigma_min_tilde": result.sigma_min_tilde,
        "kappa_hat": result.kappa_hat,
        "kappa_tilde": result.kappa_tilde,
        "iterations": result.iterations,
        "stop_reason": result.stop_reason.value,
        "seconds": seconds,
        "operator_applications": operator.applications,
    }
    try:
        if args.trace is not None:
            _write_trace(args.trace, result.trace)
        if args.certificates is not None:
            _write_certificates(args.certificates, result.v_max_hat, result.v_min_hat)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report, indent=2))
    return 3 if result.stop_reason is StopReason.MAX_ITERATIONS else 0


def cmd_projection_trace(args) -> int:
    """Per-iteration |V^T d| rows for a generated preset matrix."""
    try:
        m, n, spec = matgen.preset(args.preset)
        rng = matgen.derive_rng(args.seed, matgen.ROLE_MATGEN)
        gen = matgen.matrix_with_spectrum(m, n, spec, rng)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config = EstimatorConfig(seed=args.seed, max_iterations=args.max_iter)
    vt = gen.right_singular_vectors.T

    out = sys.stdout if args.out is None else open(args.out, "w", encoding="ascii")
    try:
        def emit(t, d):
            projections = np.abs(vt @ d)
            out.write(",".join(_fmt(p) for p in projections) + "\n")

        estimate_condition(gen.matrix, config, iteration_callback=emit)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_inconsistent_baseline(args) -> int:
    """Plain least-squares iteration on a right-hand side outside range(A),
    logging the quantities that fail to signal a usable stopping point."""
    try:
        m, n, spec = matgen.preset(args.preset)
        rng = matgen.derive_rng(args.seed, matgen.ROLE_MATGEN)
        gen = matgen.matrix_with_spectrum(m, n, spec, rng)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    A = gen.matrix

    rng_b = matgen.derive_rng(args.seed, matgen.ROLE_XHAT)
    if args.consistent:
        x_star = matgen.random_unit_vector(n, rng_b)
        b = A.apply(x_star)
    else:
        b = matgen.random_unit_vector(m, rng_b)

    rng_power = matgen.derive_rng(args.seed, matgen.ROLE_POWER)
    defaults = EstimatorConfig()
    sigma_max = estimate_sigma_max(
        A, defaults.epsilon_power, defaults.delta_power, rng_power
    ).sigma_hat

    out = sys.stdout if args.out is None else open(args.out, "w", encoding="ascii")
    try:
        out.write(BASELINE_HEADER + "\n")
        st = lsqr_state_from_rhs(A, b)
        R = BidiagonalUpper()
        prev_theta = None
        for t in range(1, args.iterations + 1):
            st, rho, theta = lsqr_step(A, st)
            R.append(rho, prev_theta)
            prev_theta = theta
            r = A.apply(st.x) - b
            nr = norm2(r)
            atr = norm2(A.apply_adjoint(r))
            nx = norm2(st.x)
            atr_over_sr = atr / (sigma_max * nr) if nr > 0.0 else 0.0
            ratio = norm2(b + r) / nx if nx > 0.0 else math.inf
            if t % 10 == 0:
                lanczos = inverse_power_sigma_min(
                    R,
                    defaults.epsilon_power,
                    defaults.delta_power,
                    matgen.derive_rng(args.seed, matgen.ROLE_INVERSE, t),
                )
                lanczos_field = _fmt(lanczos)
            else:
                lanczos_field = ""
            out.write(
                f"{t},{_fmt(atr_over_sr)},{_fmt(ratio)},{lanczos_field}\n"
            )
            if st.beta == 0.0 or st.alpha == 0.0:
                break
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_baseline_pinv(args) -> int:
    """Accuracy of the one-shot pseudo-inverse estimate of sigma_min on a
    scaled-down preset spectrum, compared against the dense oracle."""
    try:
        if args.n > 200:
            raise ValueError("preset too large for the oracle (need n <= 200)")
        if args.m < args.n:
            raise ValueError("need m >= n")
        _, _, spec = matgen.preset(args.preset)
        spec = spec.scaled(args.n)
        rng = matgen.derive_rng(args.seed, matgen.ROLE_MATGEN)
        gen = matgen.matrix_with_spectrum(args.m, args.n, spec, rng)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    dense = gen.matrix.to_array()
    sigma, _, _ = jacobi_svd(dense)
    oracle = float(sigma[-1])
    draws = []
    for i in range(args.draws):
        rng_draw = matgen.derive_rng(args.seed, matgen.ROLE_XHAT, i)
        estimate = baseline_sigma_min_by_norm(dense, rng_draw)
        rel = (estimate - oracle) / oracle if oracle > 0.0 else math.inf
        draws.append(
            {"estimate": estimate, "oracle_sigma_min": oracle, "relative_error": rel}
        )
    print(json.dumps(draws, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condest",
        description="Certified condition-number estimation for dense and sparse matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate kappa(A) with certificates")
    src = est.add_mutually_exclusive_group(required=True)
    src.add_argument("--mtx", help="Matrix Market file to load")
    src.add_argument("--preset", choices=matgen.preset_names(), help="generated test matrix")
    src.add_argument("--sign-matrix", help="random +/-1 sparse matrix, 'm,n'")
    est.add_argument("--trace", help="write the per-iteration CSV trace here")
    est.add_argument("--certificates", help="write v_max and v_min (two lines) here")
    _add_config_flags(est)
    est.set_defaults(func=cmd_estimate)

    proj = sub.add_parser(
        "projection-trace",
        help="per-iteration projections of the forward error on the right singular vectors",
    )
    proj.add_argument("--preset", required=True, choices=matgen.preset_names())
    proj.add_argument("--seed", type=int, default=0)
    proj.add_argument("--max-iter", type=int, default=100_000, dest="max_iter")
    proj.add_argument("--out", help="output path (default stdout)")
    proj.set_defaults(func=cmd_projection_trace)

    inc = sub.add_parser(
        "inconsistent-baseline",
        help="plain LSQR on an inconsistent right-hand side, logging the alternative stop quantity",
    )
    inc.add_argument("--preset", default="fig4_inconsistent", choices=matgen.preset_names())
    inc.add_argument("--iterations", type=int, default=5000)
    inc.add_argument("--seed", type=int, default=0)
    inc.add_argument(
        "--consistent",
        action="store_true",
        help="use a consistent right-hand side instead (contrast run)",
    )
    inc.add_argument("--out", help="output path (default stdout)")
    inc.set_defaults(func=cmd_inconsistent_baseline)

    pinv = sub.add_parser(
        "baseline-pinv",
        help="one-shot pseudo-inverse estimate of sigma_min vs. the dense oracle",
    )
    pinv.add_argument("--preset", default="fig6_linear", choices=matgen.preset_names())
    pinv.add_argument("--m", type=int, default=200)
    pinv.add_argument("--n", type=int, default=80)
    pinv.add_argument("--draws", type=int, default=10)
    pinv.add_argument("--seed", type=int, default=0)
    pinv.set_defaults(func=cmd_baseline_pinv)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MatrixMarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run():
    sys.exit(main())
