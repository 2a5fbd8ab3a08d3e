"""Command-line suite runner.

Each subcommand evaluates one verification suite over the configured grid
and writes reproducible report files (see ``reporting``).  Configuration
comes from an optional JSON file plus flag overrides; flags win.  Exit
status is 0 only when every record's verdict passes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid, LatticeYMError, SuiteFailed
from .factorized import normalized_free_energy, plaquette_moment
from .groups import GroupSpec, haar_sample_batch, quadratic_bound_scan, unitarity_defect
from .lattice import build_geometry
from .mc import SourceSpec, estimate_generating_function, generating_function_ceiling, verify_stability
from .quadrature import ensemble_constants, i_beta, weyl_integrate
from .reporting import SUITE_NAMES, ReportRecord, RunConfig, write_reports
from .scalar import ScalarSpec, derivative_correlation, fit_decay_rate, mass_gap
from .single_bond import (
    CouplingSpec,
    bound_constants,
    z_lower_normalized,
    z_upper_normalized,
)

__all__ = ["main", "run_suite", "build_parser"]

_TINY = 1e-12


def _record(config, inputs, values, errors, lhs, rhs, passed) -> ReportRecord:
    return ReportRecord(
        suite=config.suite,
        inputs=inputs,
        values=values,
        errors=errors,
        lhs=lhs,
        rhs=rhs,
        verdict="pass" if passed else "fail",
        seed=config.seed,
    )


def _suite_group_check(config: RunConfig):
    """Haar sampling sanity and the quadratic plaquette-action bound."""
    records = []
    for n in config.n_values:
        group = GroupSpec(n)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(n,)))
        sample = haar_sample_batch(group, rng, 200)
        max_defect = max(unitarity_defect(u) for u in sample)
        violations, max_ratio = quadratic_bound_scan(group, rng, 20_000)
        passed = max_defect < 1e-10 and violations == 0
        records.append(
            _record(
                config,
                inputs={"n": n},
                values={"max_defect": max_defect, "violations": float(violations)},
                errors={},
                lhs=max_ratio,
                rhs=1.0,
                passed=passed,
            )
        )
    return records


def _suite_weyl_check(config: RunConfig):
    """Weyl normalization and the two ensemble-constant oracles."""
    records = []
    for n in config.n_values:
        group = GroupSpec(n)
        one = weyl_integrate(lambda lam: np.ones(lam.shape[0]), group, config.quadrature)
        values = {"haar_volume": one}
        deviation = abs(one - 1.0)
        passed = deviation <= 1e-9
        if n <= 2:
            consts = ensemble_constants(group)
            gue_ratio = i_beta(2, np.inf, group, config.quadrature) / consts.gue
            gse_ratio = i_beta(4, np.inf, group, config.quadrature) / consts.gse
            values["gue_ratio"] = gue_ratio
            values["gse_ratio"] = gse_ratio
            passed = passed and abs(gue_ratio - 1) < 1e-6 and abs(gse_ratio - 1) < 1e-6
        records.append(
            _record(
                config,
                inputs={"n": n},
                values=values,
                errors={},
                lhs=deviation,
                rhs=1e-9,
                passed=passed,
            )
        )
    return records


def _suite_single_bond(config: RunConfig):
    """Normalized single-bond integrals against their closed-form sandwich."""
    if any(g2 > config.g0_sq for g2 in config.g2_values):
        raise ConfigInvalid("g0_sq: must be >= every coupling in the g2 grid")
    records = []
    for n in config.n_values:
        group = GroupSpec(n)
        for a in config.a_values:
            for g2 in config.g2_values:
                coupling = CouplingSpec(d=config.d, a=a, g2=g2, g0_sq=config.g0_sq)
                constants = bound_constants(coupling, group, config.quadrature)
                log_zu = float(np.log(z_upper_normalized(coupling, group, config.quadrature)))
                log_zl = float(np.log(z_lower_normalized(coupling, group, config.quadrature)))
                upper_ok = log_zu <= constants.c_upper + _TINY
                lower_ok = log_zl >= constants.c_lower - _TINY
                records.append(
                    _record(
                        config,
                        inputs={"n": n, "d": config.d, "a": a, "g2": g2, "g0_sq": config.g0_sq},
                        values={
                            "beta": coupling.beta,
                            "log_z_upper": log_zu,
                            "log_z_lower": log_zl,
                            "c_upper": constants.c_upper,
                            "c_lower": constants.c_lower,
                        },
                        errors={},
                        lhs=log_zu,
                        rhs=constants.c_upper,
                        passed=upper_ok and lower_ok,
                    )
                )
    return records


def _suite_approx(config: RunConfig):
    """Exactly solvable model: free energy and coincident second moment."""
    records = []
    n = config.n_values[0]
    group = GroupSpec(n)
    for a in config.a_values:
        for g2 in config.g2_values:
            coupling = CouplingSpec(d=config.d, a=a, g2=g2, g0_sq=config.g0_sq)
            constants = bound_constants(coupling, group, config.quadrature)
            log_z = float(np.log(z_upper_normalized(coupling, group, config.quadrature)))
            free_energy = normalized_free_energy(coupling, group, config.quadrature)
            m2 = plaquette_moment(2, coupling, group, config.quadrature)
            sandwich_ok = constants.c_lower - _TINY <= log_z <= constants.c_upper + _TINY
            moment_ok = 0.0 < m2 <= 0.5 * n + _TINY
            records.append(
                _record(
                    config,
                    inputs={"n": n, "d": config.d, "a": a, "g2": g2},
                    values={
                        "beta": coupling.beta,
                        "log_z_bond": log_z,
                        "free_energy": free_energy,
                        "m2": m2,
                    },
                    errors={},
                    lhs=m2,
                    rhs=0.5 * n,
                    passed=sandwich_ok and moment_ok,
                )
            )
    return records


def _suite_stability(config: RunConfig):
    """Monte Carlo log-partition against the two-sided product bound."""
    records = []
    n = config.n_values[0]
    group = GroupSpec(n)
    coupling = CouplingSpec(
        d=config.d, a=config.a_values[0], g2=config.g2_values[0], g0_sq=config.g0_sq
    )
    report = verify_stability(
        config.L, config.boundary, coupling, group, config.mc, config.quadrature
    )
    records.append(
        _record(
            config,
            inputs={
                "n": n,
                "d": config.d,
                "L": config.L,
                "boundary": config.boundary,
                "beta": report.beta,
            },
            values={
                "log_z_mc": report.mc_value,
                "lower": report.lower,
                "upper": report.upper,
                "lower_exponent": float(report.lower_exponent),
                "upper_exponent": float(report.upper_exponent),
            },
            errors={"log_z_mc": report.mc_error},
            lhs=report.lower,
            rhs=report.upper,
            passed=report.passed,
        )
    )
    return records


def _suite_genfun(config: RunConfig):
    """Sampled generating function against the product-bound ceiling."""
    records = []
    n = config.n_values[0]
    group = GroupSpec(n)
    coupling = CouplingSpec(
        d=config.d, a=config.a_values[0], g2=config.g2_values[0], g0_sq=config.g0_sq
    )
    geom = build_geometry(config.d, config.L, config.boundary)
    plaquette = geom.n_plaquettes // 2
    for strength in (0.1, 0.5):
        sources = SourceSpec(plaquettes=(plaquette,), strengths=(strength,))
        value, error = estimate_generating_function(geom, coupling, group, sources, config.mc)
        ceiling = generating_function_ceiling(config.L, coupling, group, sources, config.quadrature)
        abs_g = abs(value)
        passed = abs_g <= ceiling + 3.0 * error
        records.append(
            _record(
                config,
                inputs={
                    "n": n,
                    "d": config.d,
                    "L": config.L,
                    "boundary": config.boundary,
                    "beta": coupling.beta,
                    "strength": strength,
                    "plaquette": plaquette,
                },
                values={"abs_g": abs_g, "ceiling": ceiling},
                errors={"abs_g": error},
                lhs=abs_g,
                rhs=ceiling,
                passed=passed,
            )
        )
    return records


def _suite_scalar(config: RunConfig):
    """Free-field exact values: derivative identity and decay-rate fit."""
    records = []
    for a in config.a_values:
        massless = ScalarSpec(d=config.d, a=a, m_u=0.0, kappa_u=1.0)
        derivative = derivative_correlation(massless, 0, 0, (0,) * config.d)
        target = 1.0 / (config.d * a**config.d)
        identity_gap = abs(derivative - target) / target

        massive = ScalarSpec(d=config.d, a=a, m_u=1.0, kappa_u=1.0)
        fit = fit_decay_rate(massive)
        gap = mass_gap(massive)
        rate_gap = abs(fit.rate - gap) / gap

        passed = identity_gap <= 1e-8 and rate_gap <= 0.01
        records.append(
            _record(
                config,
                inputs={"d": config.d, "a": a},
                values={
                    "derivative": derivative,
                    "derivative_target": target,
                    "decay_rate": fit.rate,
                    "mass_gap": gap,
                    "fit_residual": fit.residual,
                },
                errors={},
                lhs=rate_gap,
                rhs=0.01,
                passed=passed,
            )
        )
    return records


_SUITE_RUNNERS = {
    "group-check": _suite_group_check,
    "weyl-check": _suite_weyl_check,
    "single-bond": _suite_single_bond,
    "approx": _suite_approx,
    "stability": _suite_stability,
    "genfun": _suite_genfun,
    "scalar": _suite_scalar,
}


def run_suite(config: RunConfig) -> dict:
    """Run the configured suite(s), write report files, return the records.

    Returns a mapping of suite name to its record list.  Raises SuiteFailed
    after all files are written if any verdict failed.
    """
    names = list(_SUITE_RUNNERS) if config.suite == "all" else [config.suite]
    results = {}
    failures = []
    for name in names:
        suite_config = dataclasses.replace(config, suite=name)
        started = time.perf_counter()
        records = _SUITE_RUNNERS[name](suite_config)
        elapsed = time.perf_counter() - started
        write_reports(config.out, name, records, elapsed)
        results[name] = records
        failures.extend(
            f"{name}[{i}]" for i, r in enumerate(records) if r.verdict != "pass"
        )
    if failures:
        raise SuiteFailed("failing records: " + ", ".join(failures))
    return results


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticeym",
        description="Verification suites for lattice gauge bounds and free fields.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run-configuration file")
    common.add_argument("--d", type=int, help="lattice dimension (2, 3 or 4)")
    common.add_argument("--L", type=int, help="even lattice side length")
    common.add_argument("--N", type=str, help="comma-separated group ranks")
    common.add_argument("--a", type=str, help="comma-separated lattice spacings")
    common.add_argument("--g2", type=str, help="comma-separated couplings")
    common.add_argument("--boundary", choices=["free", "periodic"], help="boundary condition")
    common.add_argument("--seed", type=int, help="root RNG seed")
    common.add_argument("--out", type=str, help="output directory for report files")
    subparsers = parser.add_subparsers(dest="suite", required=True)
    for name in SUITE_NAMES:
        subparsers.add_parser(name, parents=[common], help=f"run the {name} suite")
    return parser


def _config_from_args(args) -> RunConfig:
    mapping = {}
    if args.config is not None:
        mapping = json.loads(Path(args.config).read_text())
        if not isinstance(mapping, dict):
            raise ConfigInvalid("<root>: config file must hold a JSON object")
    mapping["suite"] = args.suite
    if args.d is not None:
        mapping["d"] = args.d
    if args.L is not None:
        mapping["L"] = args.L
    if args.N is not None:
        mapping["n"] = [int(v) for v in args.N.split(",")]
    if args.a is not None:
        mapping["a"] = [float(v) for v in args.a.split(",")]
    if args.g2 is not None:
        mapping["g2"] = [float(v) for v in args.g2.split(",")]
    if args.boundary is not None:
        mapping["boundary"] = args.boundary
    if args.seed is not None:
        mapping["seed"] = args.seed
    if args.out is not None:
        mapping["out"] = args.out
    return RunConfig.from_mapping(mapping)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
    except ConfigInvalid as exc:
        print(f"invalid configuration -- {exc}", file=sys.stderr)
        return 2
    try:
        results = run_suite(config)
    except ConfigInvalid as exc:
        print(f"invalid configuration -- {exc}", file=sys.stderr)
        return 2
    except SuiteFailed as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except LatticeYMError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for name, records in results.items():
        print(f"{name}: {len(records)} record(s), all pass")
    return 0


if __name__ == "__main__":
    sys.exit(main())
