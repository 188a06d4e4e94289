#!/usr/bin/env python3

"""
INI-style problem configs: loading into problem instances, the M2 = auto
rule of the three-solution example, annular inputs and writing configs back.
"""

from configparser import ConfigParser
from configparser import Error as ParserError
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from dataclasses import replace
from os.path import abspath, basename, exists, isfile, splitext
from phi_lab.main.analysis.homeo import HomeoBundle
from phi_lab.main.analysis.problem import SUPPORT_KEYS
from phi_lab.main.analysis.problem import Numerics
from phi_lab.main.analysis.problem import ProblemInstance
from phi_lab.main.analysis.problem import reduce_annular
from phi_lab.main.analysis.quadrature import SingularityHint
from phi_lab.main.analysis.theorems import example_threshold_M2
from phi_lab.main.errors import ConfigError
from phi_lab.main.errors import InputError
from phi_lab.main.file.table_files import write_text
from phi_lab.main.processing.expr import Expression
from phi_lab.main.processing.expr import eval_expr
from phi_lab.main.processing.expr import parse_expr
from phi_lab.main.processing.expr import substitute_parameters
from typing import Dict, List, Tuple

AUTO = "auto"

# Free variable of every expression key
VARIABLES = {"phi":"x", "psi1":"y", "psi2":"y", "c":"t", "d":"t", "h":"t", "f":"s",
            "w":"r", "A":"s", "k":"r"}

@dataclass
class LabConfig:
    """
    A loaded config: the problem instance with the resolved parameters and
    the [run] settings of the commands.
    """
    path:str
    instance:ProblemInstance
    parameters:Dict[str, float] = field(default_factory=dict)
    tags:Dict[str, str] = field(default_factory=dict)
    run:Dict[str, str] = field(default_factory=dict)

def read_config(path:str=None) -> ConfigParser:
    """
    Reads a config file, keeping the case of its keys.

    :param path: Path of the config file, defaults to None
    :type path: str, optional
    :return: Parsed config
    :rtype: ConfigParser
    """
    if path is None or not exists(path) or not isfile(path):
        raise ConfigError(f"Config file {path!r} does not exist")
    parser = ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as file:
            parser.read_file(file)
    except (ParserError, UnicodeDecodeError, OSError) as error:
        raise ConfigError(f"Config file {path!r} is unreadable: {error}") from None
    return parser

def _required(parser:ConfigParser, section:str, key:str) -> str:
    if not parser.has_section(section) or not parser.has_option(section, key):
        raise ConfigError(f"Config is missing [{section}] {key}")
    value = parser.get(section, key).strip()
    if value == "":
        raise ConfigError(f"[{section}] {key} is empty")
    return value

def _number(source:str, label:str) -> float:
    """
    Evaluates a constant expression such as 1/16 or (2.0).
    """
    try:
        e = parse_expr(source, "t")
    except InputError as error:
        raise ConfigError(f"{label} is not a number: {error}") from None
    if not e.is_constant():
        raise ConfigError(f"{label} must be a constant, got {source!r}")
    return eval_expr(e, 0.0)

def numerics_from_section(values:Dict[str, str], base:Numerics=None) -> Numerics:
    """
    Maps [numerics] keys onto the Numerics record, converting each to its field type.

    :param values: Keys and raw values of the section
    :type values: dict
    :param base: Record to start from, defaults to Numerics()
    :type base: Numerics, optional
    :return: Numerics with the given values
    :rtype: Numerics
    """
    base = Numerics() if base is None else base
    kinds = {f.name:f.type for f in fields(Numerics)}
    changes = {}
    for key, raw in values.items():
        if key not in kinds:
            raise ConfigError(f"Unknown numerics key {key!r}")
        try:
            changes[key] = int(raw) if kinds[key] is int else float(raw)
        except ValueError:
            raise ConfigError(f"[numerics] {key} must be {kinds[key].__name__}, got {raw!r}") from None
        if not changes[key] > 0:
            raise ConfigError(f"[numerics] {key} must be positive, got {raw!r}")
    return replace(base, **changes)

def _expression(source:str, key:str, parameters:Dict[str, float]) -> Expression:
    return parse_expr(substitute_parameters(source, parameters), VARIABLES[key])

def _homeo(parser:ConfigParser, parameters:Dict[str, float], numerics:Numerics) -> HomeoBundle:
    phi = _expression(_required(parser, "homeo", "phi"), "phi", parameters)
    psi1 = _expression(_required(parser, "homeo", "psi1"), "psi1", parameters)
    psi2 = _expression(_required(parser, "homeo", "psi2"), "psi2", parameters)
    return HomeoBundle(phi, psi1, psi2, numerics.inverse_tolerance, numerics.bracket_growth)

def _weight_settings(parser:ConfigParser,
            parameters:Dict[str, float]) -> Tuple[List[SingularityHint], Dict[str, float]]:
    hints = []
    declared = {}
    if not parser.has_section("weight"):
        return hints, declared
    for endpoint in ("left", "right"):
        key = f"singular_{endpoint}"
        if parser.has_option("weight", key):
            raw = parser.get("weight", key).strip()
            exponent = None if raw == "" else _number(substitute_parameters(raw, parameters),
                        f"[weight] {key}")
            hints.append(SingularityHint(endpoint, exponent))
    for key in SUPPORT_KEYS:
        if parser.has_option("weight", key):
            declared[key] = _number(substitute_parameters(parser.get("weight", key), parameters),
                        f"[weight] {key}")
    return hints, declared

def _coefficient(parser:ConfigParser, key:str, parameters:Dict[str, float]) -> Expression:
    source = "1"
    if parser.has_section("coefficients") and parser.has_option("coefficients", key):
        source = parser.get("coefficients", key).strip()
    return _expression(source, key, parameters)

def _numerics(parser:ConfigParser, overrides:Dict[str, object]=None) -> Numerics:
    values = dict(parser.items("numerics")) if parser.has_section("numerics") else {}
    numerics = numerics_from_section(values)
    if overrides is not None:
        numerics = numerics_from_section({k:str(v) for k, v in overrides.items()
                    if v is not None}, numerics)
    return numerics

def load_config(path:str=None, overrides:Dict[str, object]=None) -> LabConfig:
    """
    Loads a problem config into a problem instance.

    [parameters] values are substituted into every expression. A parameter
    set to auto is only allowed for M2: it resolves to the three-solution
    threshold of the instance built from the other sections times
    M2_margin (default 2).

    :param path: Path of the config file, defaults to None
    :type path: str, optional
    :param overrides: Numerics fields overriding [numerics], defaults to None
    :type overrides: dict, optional
    :return: Loaded config
    :rtype: LabConfig
    """
    parser = read_config(path)
    numerics = _numerics(parser, overrides)
    parameters = {}
    tags = {}
    pending = []
    raw_parameters = dict(parser.items("parameters")) if parser.has_section("parameters") else {}
    for name, raw in raw_parameters.items():
        if raw.strip().lower() == AUTO:
            if name != "M2":
                raise ConfigError(f"Only M2 can be auto, got {name} = auto")
            pending.append(name)
            continue
        parameters[name] = _number(raw, f"[parameters] {name}")
        tags[name] = "declared"
    homeo = _homeo(parser, parameters, numerics)
    c = _coefficient(parser, "c", parameters)
    d = _coefficient(parser, "d", parameters)
    h = _expression(_required(parser, "weight", "h"), "h", parameters)
    hints, declared = _weight_settings(parser, parameters)
    f_source = _required(parser, "nonlinearity", "f")
    name = splitext(basename(path))[0]
    if len(pending) > 0:
        # The threshold only uses f-independent constants.
        base = ProblemInstance(homeo, c, d, h, parse_expr("s", "s"), hints, declared,
                    numerics, name)
        margin = parameters.get("M2_margin", 2.0)
        if not margin > 1.0:
            raise ConfigError(f"M2_margin must be greater than 1, got {margin!r}")
        parameters["M2"] = margin * example_threshold_M2(base)
        tags["M2"] = f"auto, threshold x {margin!r}"
        instance = base.with_f(_expression(f_source, "f", parameters))
    else:
        instance = ProblemInstance(homeo, c, d, h, _expression(f_source, "f", parameters),
                    hints, declared, numerics, name)
    run = dict(parser.items("run")) if parser.has_section("run") else {}
    return LabConfig(abspath(path), instance, parameters, tags, run)

def load_annulus(path:str=None, overrides:Dict[str, object]=None) -> ProblemInstance:
    """
    Loads an [annulus] config and reduces it to a problem instance on (0,1).

    The [annulus] section holds w and k (expressions in r), A (in s), R1, R2
    and N; [homeo] holds the psi pair for the induced phi and
    [nonlinearity] the f of the radial problem.

    :param path: Path of the config file, defaults to None
    :type path: str, optional
    :param overrides: Numerics fields overriding [numerics], defaults to None
    :type overrides: dict, optional
    :return: Reduced instance
    :rtype: ProblemInstance
    """
    parser = read_config(path)
    numerics = _numerics(parser, overrides)
    raw_parameters = dict(parser.items("parameters")) if parser.has_section("parameters") else {}
    parameters = {name:_number(raw, f"[parameters] {name}") for name, raw in raw_parameters.items()}
    w = _expression(_required(parser, "annulus", "w"), "w", parameters)
    A = _expression(_required(parser, "annulus", "A"), "A", parameters)
    k = _expression(_required(parser, "annulus", "k"), "k", parameters)
    R1 = _number(substitute_parameters(_required(parser, "annulus", "R1"), parameters), "R1")
    R2 = _number(substitute_parameters(_required(parser, "annulus", "R2"), parameters), "R2")
    N = _number(substitute_parameters(_required(parser, "annulus", "N"), parameters), "N")
    psi1 = _expression(_required(parser, "homeo", "psi1"), "psi1", parameters)
    psi2 = _expression(_required(parser, "homeo", "psi2"), "psi2", parameters)
    f = _expression(_required(parser, "nonlinearity", "f"), "f", parameters)
    instance = reduce_annular(w, A, k, R1, R2, N, psi1, psi2, f, numerics)
    instance.name = splitext(basename(path))[0]
    return instance

def config_text(instance:ProblemInstance) -> str:
    """
    Returns the config text of an instance, with every numerics value that
    differs from the default.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :return: INI text
    :rtype: str
    """
    b = instance.homeo
    lines = ["[homeo]", f"phi = {b.phi.source}", f"psi1 = {b.psi1.source}",
                f"psi2 = {b.psi2.source}", "", "[coefficients]", f"c = {instance.c.source}",
                f"d = {instance.d.source}", "", "[weight]", f"h = {instance.h.source}"]
    for hint in instance.hints:
        exponent = "" if hint.exponent is None else repr(hint.exponent)
        lines.append(f"singular_{hint.endpoint} = {exponent}".rstrip())
    for key in SUPPORT_KEYS:
        if key in instance.declared:
            lines.append(f"{key} = {instance.declared[key]!r}")
    lines.extend(["", "[nonlinearity]", f"f = {instance.f.source}"])
    default = Numerics()
    changed = [f"{f.name} = {getattr(instance.numerics, f.name)!r}" for f in fields(Numerics)
                if getattr(instance.numerics, f.name) != getattr(default, f.name)]
    if len(changed) > 0:
        lines.extend(["", "[numerics]"] + changed)
    return "\n".join(lines) + "\n"

def write_config(instance:ProblemInstance, path:str=None) -> str:
    """
    Writes the config of an instance, replacing any existing file.

    :param instance: Problem instance
    :type instance: ProblemInstance
    :param path: Path to write to, defaults to None
    :type path: str, optional
    :return: Absolute path written
    :rtype: str
    """
    return write_text(path, config_text(instance))
