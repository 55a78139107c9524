"""Command-line driver: parse a run config, sweep the requested bound over its
grids, and emit constants.json, report.csv, report.json, and a figure per run.

Exit codes: 0 when every in-regime point certifies, 2 when any margin falls
below tolerance, 1 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .bounds import (
    EnsembleLetter,
    QuenchEnsemble,
    RegimeError,
    bound_constants,
    certify_holevo,
    certify_lemma1,
    certify_theorem,
    region_label,
    theorem_rhs,
)
from .config import ConfigError, ResolvedSystem, build_system, parse_config, pauli_string_matrix, render_config
from .decay import check_lr_bound
from .lattice import enlargement, region_distance
from .quantum import PAULI
from .quench import QuenchScenario, entanglement_profile
from .report import CertificationReport, GridPoint, render_capacity_curve, render_lightcone, render_margin_heatmap, write_constants_json

DIM_CAP_ENV = "QUENCHBOUND_DIM_CAP"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATIONS = 2


def _load_system(ns: argparse.Namespace) -> ResolvedSystem:
    path = Path(ns.config)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    cap_override = None
    if os.environ.get(DIM_CAP_ENV):
        try:
            cap_override = int(os.environ[DIM_CAP_ENV])
        except ValueError:
            raise ConfigError(f"{DIM_CAP_ENV} must be an integer") from None
    config = parse_config(path.read_text(), base_dir=path.parent, dimension_cap_override=cap_override)
    if ns.mu is not None:
        if ns.mu <= 0:
            raise ConfigError("--mu must be positive")
        config = replace(config, mu_values=(float(ns.mu),))
    return build_system(config, base_dir=path.parent)


def _scenario(system: ResolvedSystem, q: int, mu: float) -> QuenchScenario:
    matrix = system.quench_matrix
    if q == 1:
        matrix = system.config.strength * matrix
    return QuenchScenario(
        graph=system.graph,
        interaction=system.interaction,
        psi0=system.psi0,
        x_region=system.x_region,
        q=q,
        quench_matrix=matrix,
        quench_support=system.config.quench_sites,
        mu=mu,
        decay=system.decay,
    )


def _with_mu(scenario: QuenchScenario, system: ResolvedSystem, mu: float) -> QuenchScenario:
    if mu == scenario.mu:
        return scenario
    clone = _scenario(system, scenario.q, mu)
    # propagators and embeddings are mu-independent; share the cached ones
    for name in ("hamiltonian", "quench_full", "base_propagator", "perturbed_propagator", "kicked_state"):
        if name in scenario.__dict__:
            clone.__dict__[name] = scenario.__dict__[name]
    return clone


def _scenario_metadata(system: ResolvedSystem) -> dict:
    config = system.config
    return {
        "lattice": config.edge_list or config.generator,
        "n_vertices": system.graph.n_vertices,
        "interaction": config.interaction_preset,
        "coupling": config.coupling,
        "field": config.field_strength,
        "state": config.state_preset,
        "quench_sites": list(config.quench_sites),
        "quench_operator": config.quench_operator,
        "strength": config.strength,
        "decay": system.decay.describe(),
        "mu_values": list(config.mu_values),
        "growth_family": system.growth.family,
        "growth_b": system.growth.b,
        "growth_alpha": system.growth.alpha,
    }


def _require_regions(system: ResolvedSystem) -> None:
    if not system.config.regions:
        raise ConfigError("this command needs probe regions: set 'regions' in [grids]")


def _finish(
    report: CertificationReport,
    out_dir: Path,
    figure_name: Optional[str] = None,
    figure_fn=None,
) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_constants_json(out_dir / "constants.json", report.constants, report.metadata)
    report.write_csv(out_dir / "report.csv")
    report.write_json(out_dir / "report.json")
    if figure_fn is not None:
        figure_fn(out_dir / figure_name)
    summary = report.summary()
    label = report.metadata.get("command", report.kind)
    print(
        f"{label}: {summary['points']} points, {summary['valid_points']} in regime, "
        f"{summary['violations']} violations (tolerance {summary['tolerance']:g})"
    )
    print(f"artifacts written to {out_dir}")
    return EXIT_OK if report.certified else EXIT_VIOLATIONS


def _cmd_constants(ns: argparse.Namespace) -> int:
    system = _load_system(ns)
    _require_regions(system)
    constants = []
    for mu in system.config.mu_values:
        scenarios = {q: _scenario(system, q, mu) for q in system.config.branches}
        for q, scenario in sorted(scenarios.items()):
            for region in system.config.regions:
                entry = bound_constants(scenario, region, system.growth)
                constants.append({"q": q, "region": region_label(region), **entry.describe()})
    out_dir = Path(ns.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_constants_json(out_dir / "constants.json", constants, _scenario_metadata(system))
    print(f"wrote {len(constants)} constant sets to {out_dir / 'constants.json'}")
    return EXIT_OK


def _certify(ns: argparse.Namespace, kind: str) -> int:
    system = _load_system(ns)
    _require_regions(system)
    config = system.config
    all_points: list[GridPoint] = []
    all_constants: list[dict] = []
    base_by_q: dict[int, QuenchScenario] = {}
    for q in config.branches:
        base_by_q[q] = _scenario(system, q, config.mu_values[0])
    for mu in config.mu_values:
        for q in config.branches:
            scenario = _with_mu(base_by_q[q], system, mu)
            if kind == "lemma1":
                report = certify_lemma1(scenario, config.regions, config.t_grid, system.growth, workers=ns.workers)
            else:
                report = certify_theorem(scenario, config.regions, config.t_grid, system.growth, workers=ns.workers)
            all_points.extend(report.points)
            all_constants.extend(report.constants)
    metadata = _scenario_metadata(system)
    metadata["grid_axis"] = "d"
    merged = CertificationReport(kind=kind, points=all_points, constants=all_constants, metadata=metadata)
    out_dir = Path(ns.out)
    return _finish(merged, out_dir, "margins.svg", lambda p: render_margin_heatmap(merged, p))


def _cmd_lr_check(ns: argparse.Namespace) -> int:
    system = _load_system(ns)
    config = system.config
    a_matrix = PAULI[config.a_operator]
    b_matrix = PAULI[config.b_operator]
    points: list[GridPoint] = []
    constants_out: list[dict] = []
    for mu in config.mu_values:
        constants, samples = check_lr_bound(
            system.graph,
            system.interaction,
            system.decay,
            mu,
            (config.a_site,),
            a_matrix,
            (system.b_site,),
            b_matrix,
            config.t_grid,
        )
        label = f"{config.a_operator}@{config.a_site}|{config.b_operator}@{system.b_site}"
        for sample in samples:
            points.append(
                GridPoint(q=0, mu=mu, region=label, d=sample.d_xy, t=sample.t, lhs=sample.lhs, rhs=sample.rhs)
            )
        constants_out.append(
            {
                "mu": mu,
                "f_norm": constants.f_norm,
                "c_mu": constants.c_mu,
                "phi_norm": constants.phi_norm,
                "v_mu": constants.v_mu,
                "truncation": "instance",
            }
        )
    report = CertificationReport(
        kind="lr", points=points, constants=constants_out, metadata=_scenario_metadata(system)
    )
    return _finish(report, Path(ns.out), "margins.svg", lambda p: render_margin_heatmap(report, p))


def _cmd_lightcone(ns: argparse.Namespace) -> int:
    system = _load_system(ns)
    config = system.config
    if not config.x_grid:
        raise ConfigError("the lightcone command needs an x grid: set 'x' in [grids]")
    graph = system.graph
    profiles = []
    points: list[GridPoint] = []
    constants_out: list[dict] = []
    v_primes: dict[float, float] = {}
    base_by_q = {q: _scenario(system, q, config.mu_values[0]) for q in config.branches}
    all_vertices = frozenset(graph.vertices)
    for q in config.branches:
        profile = entanglement_profile(base_by_q[q], config.x_grid, config.t_grid)
        profiles.append(profile)
        for mu in config.mu_values:
            scenario = _with_mu(base_by_q[q], system, mu)
            for row, x in enumerate(config.x_grid):
                complement = sorted(all_vertices - enlargement(graph, system.x_region, x))
                consts = bound_constants(scenario, complement, system.growth)
                v_primes[mu] = consts.v_prime
                d_x = region_distance(graph, system.x_region, complement)
                constants_out.append({"q": q, "x": x, "region": region_label(complement), **consts.describe()})
                for col, t in enumerate(config.t_grid):
                    rhs, valid = theorem_rhs(consts.gamma_q(q), mu, consts.v_prime, d_x, t)
                    points.append(
                        GridPoint(
                            q=q, mu=mu, region=f"x={x}", d=int(x), t=float(t),
                            lhs=float(profile.difference[row, col]), rhs=rhs, valid=valid,
                        )
                    )
    metadata = _scenario_metadata(system)
    metadata["command"] = "lightcone"
    metadata["grid_axis"] = "x"
    metadata["profiles"] = [
        {
            "q": profile.q,
            "x_grid": list(profile.x_grid),
            "t_grid": list(profile.t_grid),
            "cut_distances": list(profile.cut_distances),
            "base": profile.base.tolist(),
            "quenched": profile.quenched.tolist(),
            "difference": profile.difference.tolist(),
        }
        for profile in profiles
    ]
    report = CertificationReport(kind="theorem1", points=points, constants=constants_out, metadata=metadata)
    return _finish(
        report, Path(ns.out), "lightcone.svg", lambda p: render_lightcone(profiles, v_primes, p)
    )


def _cmd_holevo(ns: argparse.Namespace) -> int:
    system = _load_system(ns)
    _require_regions(system)
    config = system.config
    letters = [
        EnsembleLetter(
            probability=p,
            support=config.quench_sites,
            matrix=pauli_string_matrix(word),
            kind=config.letter_kind,
        )
        for word, p in zip(config.letters, config.probabilities)
    ]
    points: list[GridPoint] = []
    constants_out: list[dict] = []
    capacity_curve: Optional[list[float]] = None
    for mu in config.mu_values:
        ensemble = QuenchEnsemble(
            graph=system.graph,
            interaction=system.interaction,
            psi0=system.psi0,
            x_region=system.x_region,
            letters=letters,
            mu=mu,
            decay=system.decay,
        )
        for region in config.regions:
            report = certify_holevo(ensemble, region, config.t_grid, system.growth, workers=ns.workers)
            points.extend(report.points)
            constants_out.extend(report.constants)
            if capacity_curve is None:
                capacity_curve = [p.lhs for p in report.points]
    report = CertificationReport(
        kind="holevo", points=points, constants=constants_out, metadata=_scenario_metadata(system)
    )
    return _finish(
        report,
        Path(ns.out),
        "holevo.svg",
        lambda p: render_capacity_curve(config.t_grid, capacity_curve, p),
    )


def _cmd_echo_config(ns: argparse.Namespace) -> int:
    system = _load_system(ns)
    print(render_config(system.config), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quenchbound",
        description="Certify entanglement-spreading bounds after local quenches on finite spin lattices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "constants": "Print every derived bound constant as JSON.",
        "certify-lemma1": "Check the reduced-state distance bound over the configured grids.",
        "certify-theorem": "Check the entropy-variation bound over the configured grids.",
        "lightcone": "Emit entanglement profiles, their bound margins, and the cone figure.",
        "holevo": "Check the channel-capacity ceiling for the configured alphabet.",
        "lr-check": "Check the commutator bound for the configured observables.",
        "echo-config": "Print the parsed configuration with every default filled in.",
    }
    for name, help_text in commands.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the run configuration file")
        cmd.add_argument("--out", default="out", help="artifact directory (default: out)")
        cmd.add_argument("--mu", type=float, default=None, help="override the configured mu list with one value")
        cmd.add_argument("--workers", type=int, default=1, help="parallel grid evaluation workers")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    handlers = {
        "constants": _cmd_constants,
        "certify-lemma1": lambda n: _certify(n, "lemma1"),
        "certify-theorem": lambda n: _certify(n, "theorem1"),
        "lightcone": _cmd_lightcone,
        "holevo": _cmd_holevo,
        "lr-check": _cmd_lr_check,
        "echo-config": _cmd_echo_config,
    }
    try:
        return handlers[ns.command](ns)
    except (ConfigError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
