#!/usr/bin/env python3

"""
Problem instances shared by the tests.
"""

from os.path import abspath, join
from pathlib import Path
from phi_lab.main.analysis.homeo import HomeoBundle
from phi_lab.main.analysis.problem import Numerics
from phi_lab.main.analysis.problem import ProblemInstance
from phi_lab.main.file.config import LabConfig
from phi_lab.main.file.config import load_config
from phi_lab.main.processing.expr import parse_expr

CONFIG_DIR = abspath(Path(__file__).parents[1] / "configs")

def get_config_path(name:str) -> str:
    return join(CONFIG_DIR, name)

def get_instance(f:str="s", phi:str="x", psi1:str="y", psi2:str="y", c:str="1", d:str="1",
            h:str="1", numerics:Numerics=None, name:str="fixture") -> ProblemInstance:
    """
    Returns an instance from expression sources, the linear identity problem by default.
    """
    homeo = HomeoBundle(parse_expr(phi, "x"), parse_expr(psi1, "y"), parse_expr(psi2, "y"))
    return ProblemInstance(homeo, parse_expr(c, "t"), parse_expr(d, "t"), parse_expr(h, "t"),
                parse_expr(f, "s"), numerics=numerics, name=name)

def get_quadratic(numerics:Numerics=None) -> ProblemInstance:
    """
    Returns f(s) = s^2 with phi the identity, c = d = h = 1, where R1(m) = 512/m and R2(m) = 8/m.
    """
    return get_instance("s^2", numerics=numerics, name="quadratic")

def get_linear(numerics:Numerics=None) -> ProblemInstance:
    return get_instance("s", numerics=numerics, name="linear")

def get_gap_instance() -> ProblemInstance:
    """
    Returns an instance whose weight vanishes on [0.4, 0.6] and is symmetric about 1/2.
    """
    return get_instance(h="piece(0<=t<0.4 : 1; 0.4<=t<0.6 : 0; 0.6<=t<=1 : 1)", name="gap")

def get_example() -> LabConfig:
    """
    Returns the three-solution example loaded from its checked-in config.
    """
    return load_config(get_config_path("three_solutions.cfg"))
