"""Run configuration: a small sectioned key-value format, parsed with
line-anchored errors, validated against the lattice it describes, and
re-emittable with every default filled in so runs are reproducible from the
echoed file alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .decay import DecayFunction
from .lattice import GrowthConstants, LatticeGraph, fit_growth_constants, region_distance
from .quantum import PAULI, Interaction, ProductSpace, Propagator, build_hamiltonian
from .quench import all_down_state, heisenberg, on_site_field, transverse_field_ising

DEFAULT_DIMENSION_CAP = 4096

_PAULI_LETTERS = {"i": "id", "x": "sx", "y": "sy", "z": "sz"}

_KNOWN_KEYS = {
    "lattice": {"generator", "edge_list", "family", "growth_n", "growth_alpha", "growth_a"},
    "interaction": {"preset", "coupling", "field", "term"},
    "state": {"preset", "amplitudes"},
    "quench": {"q", "sites", "operator", "strength"},
    "decay": {"form", "exponent", "table", "mu"},
    "grids": {"t", "x", "regions"},
    "observables": {"a_site", "a_operator", "b_site", "b_operator"},
    "holevo": {"letters", "probabilities", "letter_kind"},
    "limits": {"dimension_cap"},
}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    generator: Optional[str]
    edge_list: Optional[str]
    family: str
    growth_n: Optional[int]
    growth_alpha: Optional[float]
    growth_a: Optional[float]
    interaction_preset: str
    coupling: float
    field_strength: float
    terms: tuple[str, ...]
    state_preset: str
    amplitudes: Optional[tuple[complex, ...]]
    branches: tuple[int, ...]
    quench_sites: tuple[int, ...]
    quench_operator: str
    strength: float
    decay_form: str
    decay_exponent: float
    decay_table: Optional[tuple[float, ...]]
    mu_values: tuple[float, ...]
    t_grid: tuple[float, ...]
    x_grid: tuple[int, ...]
    regions: tuple[tuple[int, ...], ...]
    a_site: int
    a_operator: str
    b_site: int
    b_operator: str
    letters: tuple[str, ...]
    probabilities: tuple[float, ...]
    letter_kind: str
    dimension_cap: int


def _tokenize(text: str) -> dict[str, list[tuple[str, str, int]]]:
    """Section -> [(key, value, line number)]; unknown names fail here."""
    sections: dict[str, list[tuple[str, str, int]]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _KNOWN_KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in _KNOWN_KEYS[current]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in section [{current}]")
        sections[current].append((key, value.strip(), lineno))
    return sections


class _Section:
    def __init__(self, name: str, entries: list[tuple[str, str, int]]):
        self.name = name
        self.entries = entries
        seen: dict[str, int] = {}
        for key, _, lineno in entries:
            if key in seen and key != "term":
                raise ConfigError(f"line {lineno}: duplicate key {key!r} in section [{name}]")
            seen[key] = lineno

    def get(self, key: str, default: Optional[str] = None) -> tuple[Optional[str], int]:
        for k, value, lineno in self.entries:
            if k == key:
                return value, lineno
        return default, 0

    def get_all(self, key: str) -> list[tuple[str, int]]:
        return [(value, lineno) for k, value, lineno in self.entries if k == key]


def _parse_float(value: str, lineno: int, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects a number, got {value!r}") from None


def _parse_int(value: str, lineno: int, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects an integer, got {value!r}") from None


def _parse_float_list(value: str, lineno: int, key: str) -> tuple[float, ...]:
    if value.startswith("linspace:"):
        parts = value.split(":")
        if len(parts) != 4:
            raise ConfigError(f"line {lineno}: {key} linspace needs start:stop:count")
        start = _parse_float(parts[1], lineno, key)
        stop = _parse_float(parts[2], lineno, key)
        count = _parse_int(parts[3], lineno, key)
        if count < 1:
            raise ConfigError(f"line {lineno}: {key} linspace count must be >= 1")
        return tuple(float(v) for v in np.linspace(start, stop, count))
    return tuple(_parse_float(v.strip(), lineno, key) for v in value.split(",") if v.strip())


def _parse_int_list(value: str, lineno: int, key: str) -> tuple[int, ...]:
    if value.startswith("range:"):
        parts = value.split(":")
        if len(parts) != 3:
            raise ConfigError(f"line {lineno}: {key} range needs range:first:last")
        first = _parse_int(parts[1], lineno, key)
        last = _parse_int(parts[2], lineno, key)
        return tuple(range(first, last + 1))
    return tuple(_parse_int(v.strip(), lineno, key) for v in value.split(",") if v.strip())


def _parse_regions(value: str, lineno: int) -> tuple[tuple[int, ...], ...]:
    regions = []
    for token in value.split(","):
        token = token.strip()
        if not token:
            continue
        if "-" in token:
            first, last = token.split("-", 1)
            a = _parse_int(first, lineno, "regions")
            b = _parse_int(last, lineno, "regions")
            if b < a:
                raise ConfigError(f"line {lineno}: region {token!r} runs backwards")
            regions.append(tuple(range(a, b + 1)))
        elif "." in token:
            regions.append(tuple(_parse_int(v, lineno, "regions") for v in token.split(".")))
        else:
            regions.append((_parse_int(token, lineno, "regions"),))
    if not regions:
        raise ConfigError(f"line {lineno}: regions list is empty")
    return tuple(regions)


def pauli_string_matrix(letters: str) -> np.ndarray:
    """Kronecker product of single-site Paulis named by i/x/y/z letters."""
    matrix = np.array([[1.0 + 0j]])
    for letter in letters:
        if letter not in _PAULI_LETTERS:
            raise ValueError(f"unknown Pauli letter {letter!r} (expected i, x, y, or z)")
        matrix = np.kron(matrix, PAULI[_PAULI_LETTERS[letter]])
    return matrix


def _parse_term(value: str, lineno: int) -> tuple[float, str, tuple[int, ...]]:
    """Grammar: `<coeff> * <opstring> @ <site> [<site> ...]`."""
    try:
        coeff_part, rest = value.split("*", 1)
        op_part, site_part = rest.split("@", 1)
    except ValueError:
        raise ConfigError(f"line {lineno}: term must look like '1.0 * zz @ 0 1', got {value!r}") from None
    coeff = _parse_float(coeff_part.strip(), lineno, "term")
    opstring = op_part.strip().lower()
    sites = tuple(_parse_int(tok, lineno, "term") for tok in site_part.split())
    if len(opstring) != len(sites):
        raise ConfigError(f"line {lineno}: term operator {opstring!r} names {len(opstring)} sites, got {len(sites)}")
    if not sites:
        raise ConfigError(f"line {lineno}: term needs at least one site")
    for letter in opstring:
        if letter not in _PAULI_LETTERS:
            raise ConfigError(f"line {lineno}: unknown Pauli letter {letter!r} in term")
    return coeff, opstring, sites


def parse_config(
    text: str,
    base_dir: Optional[Path] = None,
    dimension_cap_override: Optional[int] = None,
) -> RunConfig:
    """Parse, fill defaults, and resolve every cross-reference on the instance."""
    sections = _tokenize(text)
    sec = {name: _Section(name, sections.get(name, [])) for name in _KNOWN_KEYS}

    lattice = sec["lattice"]
    generator, gen_line = lattice.get("generator")
    edge_list, edge_line = lattice.get("edge_list")
    if generator and edge_list:
        raise ConfigError(f"line {edge_line}: give either generator or edge_list, not both")
    if not generator and not edge_list:
        generator = "chain:8"

    family, fam_line = lattice.get("family")
    growth_n_raw, n_line = lattice.get("growth_n")
    growth_alpha_raw, alpha_line = lattice.get("growth_alpha")
    growth_a_raw, a_line = lattice.get("growth_a")
    growth_n = _parse_int(growth_n_raw, n_line, "growth_n") if growth_n_raw else None
    growth_alpha = _parse_float(growth_alpha_raw, alpha_line, "growth_alpha") if growth_alpha_raw else None
    growth_a = _parse_float(growth_a_raw, a_line, "growth_a") if growth_a_raw else None

    if family is None:
        if generator and generator.startswith("chain:"):
            family = "chain"
        elif generator and generator.startswith("tree:"):
            family = "tree-n"
        elif generator and generator.startswith("grid:"):
            family = "grid-n"
        else:
            family = "generic"
    if family not in ("chain", "tree-n", "grid-n", "generic"):
        raise ConfigError(f"line {fam_line}: unknown growth family {family!r}")
    if family in ("tree-n", "grid-n") and growth_n is None and generator:
        parts = generator.split(":")
        if len(parts) == 3:
            try:
                growth_n = int(parts[1])
            except ValueError:
                pass
    if family == "generic" and growth_alpha is None:
        growth_alpha = 0.0

    interaction_sec = sec["interaction"]
    preset, preset_line = interaction_sec.get("preset", "tfim")
    if preset not in ("tfim", "heisenberg", "field", "terms"):
        raise ConfigError(f"line {preset_line}: unknown interaction preset {preset!r}")
    coupling_raw, coupling_line = interaction_sec.get("coupling", "1.0")
    field_raw, field_line = interaction_sec.get("field", "1.0")
    coupling = _parse_float(coupling_raw, coupling_line, "coupling")
    field_strength = _parse_float(field_raw, field_line, "field")
    term_entries = interaction_sec.get_all("term")
    terms = tuple(value for value, _ in term_entries)
    for value, lineno in term_entries:
        _parse_term(value, lineno)
    if preset == "terms" and not terms:
        raise ConfigError("interaction preset 'terms' needs at least one 'term =' line")

    state_sec = sec["state"]
    state_preset, state_line = state_sec.get("preset", "all-down")
    if state_preset not in ("all-down", "ground", "vector"):
        raise ConfigError(f"line {state_line}: unknown state preset {state_preset!r}")
    amplitudes_raw, amp_line = state_sec.get("amplitudes")
    amplitudes: Optional[tuple[complex, ...]] = None
    if amplitudes_raw:
        try:
            amplitudes = tuple(complex(v.strip()) for v in amplitudes_raw.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"line {amp_line}: amplitudes must be complex numbers") from None
    if state_preset == "vector" and amplitudes is None:
        raise ConfigError("state preset 'vector' needs an amplitudes list")

    quench_sec = sec["quench"]
    q_raw, q_line = quench_sec.get("q", "1, 2")
    branches = _parse_int_list(q_raw, q_line, "q")
    if not branches or any(q not in (1, 2) for q in branches):
        raise ConfigError(f"line {q_line}: q must list branches from {{1, 2}}")
    sites_raw, sites_line = quench_sec.get("sites", "0")
    quench_sites = _parse_int_list(sites_raw, sites_line, "sites")
    operator_raw, op_line = quench_sec.get("operator", "x" * len(quench_sites))
    quench_operator = operator_raw.lower()
    if len(quench_operator) != len(quench_sites):
        raise ConfigError(f"line {op_line}: operator {quench_operator!r} must name one Pauli per quench site")
    for letter in quench_operator:
        if letter not in _PAULI_LETTERS:
            raise ConfigError(f"line {op_line}: unknown Pauli letter {letter!r} in quench operator")
    strength_raw, strength_line = quench_sec.get("strength", "1.0")
    strength = _parse_float(strength_raw, strength_line, "strength")

    decay_sec = sec["decay"]
    decay_form, form_line = decay_sec.get("form", "power-law")
    if decay_form not in ("power-law", "exponential", "tabulated"):
        raise ConfigError(f"line {form_line}: unknown decay form {decay_form!r}")
    exponent_raw, exp_line = decay_sec.get("exponent", "2.0")
    decay_exponent = _parse_float(exponent_raw, exp_line, "exponent")
    table_raw, table_line = decay_sec.get("table")
    decay_table = tuple(_parse_float_list(table_raw, table_line, "table")) if table_raw else None
    if decay_form == "tabulated" and decay_table is None:
        raise ConfigError("decay form 'tabulated' needs a table")
    mu_raw, mu_line = decay_sec.get("mu", "0.5, 1.0")
    mu_values = _parse_float_list(mu_raw, mu_line, "mu")
    if not mu_values or any(mu <= 0 for mu in mu_values):
        raise ConfigError(f"line {mu_line}: mu values must be positive")

    grids_sec = sec["grids"]
    t_raw, t_line = grids_sec.get("t", "linspace:0:2:41")
    t_grid = _parse_float_list(t_raw, t_line, "t")
    x_raw, x_line = grids_sec.get("x", "")
    x_grid = _parse_int_list(x_raw, x_line, "x") if x_raw else ()
    regions_raw, regions_line = grids_sec.get("regions", "")
    regions = _parse_regions(regions_raw, regions_line) if regions_raw else ()

    obs_sec = sec["observables"]
    a_site_raw, a_site_line = obs_sec.get("a_site", "0")
    a_site = _parse_int(a_site_raw, a_site_line, "a_site")
    a_operator, a_op_line = obs_sec.get("a_operator", "sz")
    b_site_raw, b_site_line = obs_sec.get("b_site", "-1")
    b_site = _parse_int(b_site_raw, b_site_line, "b_site")
    b_operator, b_op_line = obs_sec.get("b_operator", "sz")
    for name, lineno in ((a_operator, a_op_line), (b_operator, b_op_line)):
        if name not in PAULI:
            raise ConfigError(f"line {lineno}: unknown observable {name!r} (expected id, sx, sy, or sz)")

    holevo_sec = sec["holevo"]
    letters_raw, letters_line = holevo_sec.get("letters", "i, x")
    letters = tuple(v.strip().lower() for v in letters_raw.split(",") if v.strip())
    if not letters:
        raise ConfigError(f"line {letters_line}: letters list is empty")
    for word in letters:
        if len(word) != len(quench_sites):
            raise ConfigError(f"line {letters_line}: letter {word!r} must name one Pauli per quench site")
        for letter in word:
            if letter not in _PAULI_LETTERS:
                raise ConfigError(f"line {letters_line}: unknown Pauli letter {letter!r} in letters")
    probs_raw, probs_line = holevo_sec.get("probabilities", "")
    if probs_raw:
        probabilities = _parse_float_list(probs_raw, probs_line, "probabilities")
    else:
        probabilities = tuple(1.0 / len(letters) for _ in letters)
    if len(probabilities) != len(letters):
        raise ConfigError(f"line {probs_line}: need one probability per letter")
    if any(p < 0 for p in probabilities) or abs(sum(probabilities) - 1.0) > 1e-9:
        raise ConfigError(f"line {probs_line}: probabilities must be non-negative and sum to 1")
    letter_kind, kind_line = holevo_sec.get("letter_kind", "unitary")
    if letter_kind not in ("unitary", "perturbation"):
        raise ConfigError(f"line {kind_line}: letter_kind must be 'unitary' or 'perturbation'")

    limits_sec = sec["limits"]
    cap_raw, cap_line = limits_sec.get("dimension_cap", str(DEFAULT_DIMENSION_CAP))
    dimension_cap = _parse_int(cap_raw, cap_line, "dimension_cap")
    if dimension_cap < 2:
        raise ConfigError(f"line {cap_line}: dimension_cap must be >= 2")
    if dimension_cap_override is not None:
        dimension_cap = dimension_cap_override

    config = RunConfig(
        generator=generator,
        edge_list=edge_list,
        family=family,
        growth_n=growth_n,
        growth_alpha=growth_alpha,
        growth_a=growth_a,
        interaction_preset=preset,
        coupling=coupling,
        field_strength=field_strength,
        terms=terms,
        state_preset=state_preset,
        amplitudes=amplitudes,
        branches=branches,
        quench_sites=quench_sites,
        quench_operator=quench_operator,
        strength=strength,
        decay_form=decay_form,
        decay_exponent=decay_exponent,
        decay_table=decay_table,
        mu_values=mu_values,
        t_grid=t_grid,
        x_grid=x_grid,
        regions=regions,
        a_site=a_site,
        a_operator=a_operator,
        b_site=b_site,
        b_operator=b_operator,
        letters=letters,
        probabilities=probabilities,
        letter_kind=letter_kind,
        dimension_cap=dimension_cap,
    )
    build_system(config, base_dir=base_dir)
    return config


@dataclass
class ResolvedSystem:
    """Everything a command needs, constructed once from a RunConfig."""

    config: RunConfig
    graph: LatticeGraph
    interaction: Interaction
    space: ProductSpace
    psi0: np.ndarray
    decay: DecayFunction
    growth: GrowthConstants
    quench_matrix: np.ndarray
    x_region: frozenset[int]
    b_site: int


def build_system(config: RunConfig, base_dir: Optional[Path] = None) -> ResolvedSystem:
    if config.edge_list:
        path = Path(config.edge_list)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise ConfigError(f"edge_list file {path} does not exist")
        graph = LatticeGraph.from_edge_list_text(path.read_text())
    else:
        try:
            graph = LatticeGraph.from_generator(config.generator)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    space = ProductSpace.qubits(graph.n_vertices)
    if space.total_dim > config.dimension_cap:
        raise ConfigError(
            f"total dimension {space.total_dim} exceeds the cap {config.dimension_cap}"
        )

    def check_site(site: int, what: str) -> int:
        if not (0 <= site < graph.n_vertices):
            raise ConfigError(f"{what} {site} does not exist on a {graph.n_vertices}-site lattice")
        return site

    if config.interaction_preset == "tfim":
        interaction = transverse_field_ising(graph, config.coupling, config.field_strength)
    elif config.interaction_preset == "heisenberg":
        interaction = heisenberg(graph, config.coupling)
    elif config.interaction_preset == "field":
        interaction = on_site_field(graph, PAULI["sx"], config.field_strength)
    else:
        built = []
        for value in config.terms:
            coeff, opstring, sites = _parse_term(value, 0)
            for s in sites:
                check_site(s, "term site")
            built.append((sites, coeff * pauli_string_matrix(opstring)))
        interaction = Interaction.build(space.site_dims, built)

    try:
        growth = fit_growth_constants(
            graph, config.family, alpha=config.growth_alpha, n=config.growth_n, a=config.growth_a
        )
    except ValueError as exc:
        raise ConfigError(f"growth constants: {exc}") from exc

    if config.state_preset == "all-down":
        psi0 = all_down_state(space)
    elif config.state_preset == "ground":
        psi0 = Propagator(build_hamiltonian(interaction, space)).ground_state()
    else:
        amps = np.asarray(config.amplitudes, dtype=complex)
        if amps.size != space.total_dim:
            raise ConfigError(f"amplitudes list has {amps.size} entries, the space needs {space.total_dim}")
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ConfigError("amplitudes vector is zero")
        psi0 = amps / norm

    for s in config.quench_sites:
        check_site(s, "quench site")
    x_region = frozenset(config.quench_sites)
    quench_matrix = pauli_string_matrix(config.quench_operator)

    if config.decay_form == "power-law":
        decay = DecayFunction.power_law(config.decay_exponent)
    elif config.decay_form == "exponential":
        decay = DecayFunction.exponential(config.decay_exponent)
    else:
        decay = DecayFunction.tabulated(config.decay_table)
        if len(config.decay_table) <= graph.diameter:
            raise ConfigError(
                f"tabulated decay covers distances 0..{len(config.decay_table) - 1}, "
                f"the lattice has diameter {graph.diameter}"
            )

    for region in config.regions:
        for s in region:
            check_site(s, "region site")
        if region_distance(graph, x_region, frozenset(region)) == 0:
            raise ConfigError(
                f"region {sorted(region)} touches the quench region {sorted(x_region)} (d(X, Y) must be > 0)"
            )

    eccentricity = int(graph.dist[sorted(x_region)].min(axis=0).max())
    for x in config.x_grid:
        if x < 0:
            raise ConfigError(f"profile radius {x} is negative")
        if x >= eccentricity:
            raise ConfigError(
                f"profile radius {x} swallows the lattice (complement empty beyond {eccentricity - 1})"
            )

    check_site(config.a_site, "observable site")
    b_site = config.b_site if config.b_site >= 0 else graph.n_vertices - 1
    check_site(b_site, "observable site")

    return ResolvedSystem(
        config=config,
        graph=graph,
        interaction=interaction,
        space=space,
        psi0=psi0,
        decay=decay,
        growth=growth,
        quench_matrix=quench_matrix,
        x_region=x_region,
        b_site=b_site,
    )


def _format_float_list(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


def render_config(config: RunConfig) -> str:
    """Emit a config file equivalent to `config`, defaults included."""
    lines = ["[lattice]"]
    if config.edge_list:
        lines.append(f"edge_list = {config.edge_list}")
    else:
        lines.append(f"generator = {config.generator}")
    lines.append(f"family = {config.family}")
    if config.growth_n is not None:
        lines.append(f"growth_n = {config.growth_n}")
    if config.growth_alpha is not None:
        lines.append(f"growth_alpha = {config.growth_alpha!r}")
    if config.growth_a is not None:
        lines.append(f"growth_a = {config.growth_a!r}")
    lines += ["", "[interaction]", f"preset = {config.interaction_preset}"]
    lines.append(f"coupling = {config.coupling!r}")
    lines.append(f"field = {config.field_strength!r}")
    for term in config.terms:
        lines.append(f"term = {term}")
    lines += ["", "[state]", f"preset = {config.state_preset}"]
    if config.amplitudes is not None:
        lines.append("amplitudes = " + ", ".join(str(a) for a in config.amplitudes))
    lines += ["", "[quench]"]
    lines.append("q = " + ", ".join(str(q) for q in config.branches))
    lines.append("sites = " + ", ".join(str(s) for s in config.quench_sites))
    lines.append(f"operator = {config.quench_operator}")
    lines.append(f"strength = {config.strength!r}")
    lines += ["", "[decay]", f"form = {config.decay_form}"]
    lines.append(f"exponent = {config.decay_exponent!r}")
    if config.decay_table is not None:
        lines.append("table = " + _format_float_list(config.decay_table))
    lines.append("mu = " + _format_float_list(config.mu_values))
    lines += ["", "[grids]"]
    lines.append("t = " + _format_float_list(config.t_grid))
    if config.x_grid:
        lines.append("x = " + ", ".join(str(x) for x in config.x_grid))
    if config.regions:
        lines.append("regions = " + ", ".join(".".join(str(s) for s in region) for region in config.regions))
    lines += ["", "[observables]"]
    lines.append(f"a_site = {config.a_site}")
    lines.append(f"a_operator = {config.a_operator}")
    lines.append(f"b_site = {config.b_site}")
    lines.append(f"b_operator = {config.b_operator}")
    lines += ["", "[holevo]"]
    lines.append("letters = " + ", ".join(config.letters))
    lines.append("probabilities = " + _format_float_list(config.probabilities))
    lines.append(f"letter_kind = {config.letter_kind}")
    lines += ["", "[limits]", f"dimension_cap = {config.dimension_cap}", ""]
    return "\n".join(lines)
