#!/usr/bin/env python3

import phi_lab
from os.path import join
from pathlib import Path
from phi_lab.main.analysis.problem import Numerics
from phi_lab.main.errors import ConfigError
from phi_lab.main.errors import InputError
from phi_lab.main.file.config import config_text
from phi_lab.main.file.config import load_annulus
from phi_lab.main.file.config import load_config
from phi_lab.main.file.config import numerics_from_section
from phi_lab.main.file.config import read_config
from phi_lab.main.file.config import write_config
from phi_lab.main.file.table_files import write_text
from phi_lab.test.fixtures import get_config_path
from phi_lab.test.temp_dir import get_test_dir

LINEAR = """[homeo]
phi = x
psi1 = y
psi2 = y

[weight]
h = {h}

[nonlinearity]
f = {f}
"""

def write_linear(directory:str, name:str, h:str="1", f:str="s", extra:str="") -> str:
    return write_text(join(directory, name), LINEAR.format(h=h, f=f) + extra)

def test_read_config():
    """
    Tests the read_config function.
    """
    parser = read_config(get_config_path("quadratic.cfg"))
    assert parser.get("homeo", "phi") == "x"
    assert parser.has_option("numerics", "mgrid_per_decade")
    test_dir = get_test_dir()
    for path in (None, join(test_dir, "missing.cfg"), test_dir):
        try:
            read_config(path)
            assert False
        except ConfigError:
            pass
    path = write_text(join(test_dir, "bad.cfg"), "phi = x\n")
    try:
        read_config(path)
        assert False
    except ConfigError:
        pass

def test_numerics_from_section():
    """
    Tests the numerics_from_section function.
    """
    numerics = numerics_from_section({"mesh_nodes":"129", "solver_tol":"1e-8"})
    assert numerics.mesh_nodes == 129
    assert numerics.solver_tol == 1e-8
    assert numerics.quad_tol == Numerics().quad_tol
    base = Numerics(mesh_nodes=65)
    assert numerics_from_section({}, base).mesh_nodes == 65
    for values in ({"mesh": "129"}, {"mesh_nodes":"12.5"}, {"solver_tol":"-1"},
                {"solver_tol":"small"}):
        try:
            numerics_from_section(values)
            assert False
        except ConfigError:
            pass

def test_packaged_configs():
    """
    Tests that the example configs are found inside the installed package.
    """
    package = Path(phi_lab.__file__).parent
    for name in ("annulus.cfg", "linear.cfg", "quadratic.cfg", "three_solutions.cfg",
                "three_solutions_rational.cfg"):
        path = Path(get_config_path(name))
        assert path.is_file()
        assert package in path.parents

def test_load_config():
    """
    Tests the load_config function.
    """
    config = load_config(get_config_path("quadratic.cfg"))
    instance = config.instance
    assert instance.name == "quadratic"
    assert instance.f(2.0) == 4.0
    assert instance.numerics.mgrid_lo == 1e-2
    assert instance.numerics.mgrid_per_decade == 16
    assert config.run["lambda"] == "10"
    assert config.parameters == {}
    assert config.path.endswith("quadratic.cfg")
    # Test overrides, None keeping the config value
    config = load_config(get_config_path("quadratic.cfg"), {"solver_tol":1e-8, "mgrid_lo":None})
    assert config.instance.numerics.solver_tol == 1e-8
    assert config.instance.numerics.mgrid_lo == 1e-2
    # Test parameters with M2 = auto
    config = load_config(get_config_path("three_solutions.cfg"))
    assert config.parameters["a"] == 1.0
    assert config.tags["a"] == "declared"
    assert config.tags["M2"].startswith("auto")
    assert config.parameters["M2"] > 1e4
    instance = config.instance
    assert instance.name == "three_solutions"
    assert abs(instance.f(0.5) - 0.5625) < 1e-12
    assert abs(instance.f(1.0) - 4.0) < 1e-12
    M2 = config.parameters["M2"]
    assert abs(instance.f(M2) - 2.0 ** 1.5 * (M2 + M2 ** 2) ** 0.5) < 1e-9 * instance.f(M2)
    assert [(hint.endpoint, hint.exponent) for hint in instance.hints] == [("right", 1.0)]
    assert instance.h(0.03) == 0.0

def test_load_config_errors():
    """
    Tests the errors raised by load_config.
    """
    test_dir = get_test_dir()
    path = write_text(join(test_dir, "no_weight.cfg"), "[homeo]\nphi = x\npsi1 = y\npsi2 = y\n"
                + "\n[nonlinearity]\nf = s\n")
    bad = [path,
        write_linear(test_dir, "auto.cfg", extra="\n[parameters]\na = auto\n"),
        write_linear(test_dir, "variable.cfg", extra="\n[parameters]\na = t\n"),
        write_linear(test_dir, "margin.cfg", extra="\n[parameters]\nM2 = auto\nM2_margin = 1\n"),
        write_linear(test_dir, "numerics.cfg", extra="\n[numerics]\nmesh_nodes = many\n"),
        write_linear(test_dir, "empty.cfg", f="")]
    for path in bad:
        try:
            load_config(path)
            assert False
        except ConfigError:
            pass
    # Invalid problems are input errors
    path = write_linear(test_dir, "weight.cfg", h="t - 0.5")
    try:
        load_config(path)
        assert False
    except InputError:
        pass
    # Parameters are substituted into every expression
    path = write_linear(test_dir, "parameter.cfg", f="s^p", extra="\n[parameters]\np = 3\n")
    assert load_config(path).instance.f(2.0) == 8.0

def test_load_annulus():
    """
    Tests the load_annulus function.
    """
    instance = load_annulus(get_config_path("annulus.cfg"))
    assert instance.name == "annulus"
    assert abs(instance.d(0.5) - 2.25) < 1e-12
    assert abs(instance.h(0.5) - 2.25) < 1e-12
    assert instance.c(0.5) == 1.0
    assert abs(instance.homeo.phi_values(2.0) - 4.0) < 1e-12
    assert instance.f(2.0) == 8.0
    try:
        load_annulus(get_config_path("quadratic.cfg"))
        assert False
    except ConfigError:
        pass

def test_write_config():
    """
    Tests the write_config and config_text functions.
    """
    test_dir = get_test_dir()
    instance = load_config(get_config_path("quadratic.cfg")).instance
    text = config_text(instance)
    assert "[numerics]\n" in text
    assert "mgrid_per_decade = 16\n" in text
    assert "quad_tol" not in text
    path = write_config(instance, join(test_dir, "sub", "copy.cfg"))
    copy = load_config(path).instance
    assert copy.name == "copy"
    assert copy.f.source == instance.f.source
    assert copy.numerics == instance.numerics
    # Test an instance with declared support and weight hints
    instance = load_config(get_config_path("three_solutions.cfg")).instance
    text = config_text(instance)
    assert "singular_right = 1.0\n" in text
    copy = load_config(write_config(instance, join(test_dir, "example.cfg"))).instance
    assert copy.hints == instance.hints
    assert abs(copy.f(3.0) - instance.f(3.0)) < 1e-12 * instance.f(3.0)
    # Test the reduced annulus
    reduced = load_annulus(get_config_path("annulus.cfg"))
    copy = load_config(write_config(reduced, join(test_dir, "reduced.cfg"))).instance
    assert abs(copy.h(0.5) - 2.25) < 1e-12
    assert abs(copy.homeo.phi_values(3.0) - 9.0) < 1e-12

def all_tests():
    """
    Runs all tests for the config module.
    """
    test_read_config()
    test_numerics_from_section()
    test_packaged_configs()
    test_load_config()
    test_load_config_errors()
    test_load_annulus()
    test_write_config()
