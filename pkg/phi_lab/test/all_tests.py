#!/usr/bin/env python3

import sys
from traceback import print_exc
from argparse import ArgumentParser
from phi_lab.main.color_print import color_print
from phi_lab.main.errors import LabError
from phi_lab.test.analysis.analysis_tests import test_all as analysis_test
from phi_lab.test.file.file_tests import test_all as file_test
from phi_lab.test.processing.processing_tests import test_all as pro_test
from phi_lab.test.test_lab import all_tests as lab_test

def _run_group(tests, name:str) -> bool:
    try:
        for test in tests:
            test()
        color_print(f"All {name} tests passed.", "g")
        return True
    except (AssertionError, LabError):
        color_print("Check failed:", "r")
        print_exc()
        return False

def test_all() -> bool:
    """
    Runs all unit tests for the phi_lab program.

    :return: Whether every test passed
    :rtype: bool
    """
    return _run_group([pro_test, analysis_test, file_test, lab_test], "phi_lab")

def test_analysis() -> bool:
    """
    Runs unit tests related to the homeomorphisms, the operator, the solver and the theorems.
    """
    return _run_group([analysis_test], "analysis")

def test_file() -> bool:
    """
    Runs unit tests related to config, table and report files and the command line.
    """
    return _run_group([file_test, lab_test], "file")

def test_processing() -> bool:
    """
    Runs unit tests related to expressions and grids.
    """
    return _run_group([pro_test], "processing")

def main():
    parser = ArgumentParser()
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "-f",
        "--file",
        help="Runs tests for file handling modules.",
        action="store_true")
    group.add_argument(
        "-a",
        "--analysis",
        help="Runs tests for the numerical analysis modules.",
        action="store_true")
    group.add_argument(
        "-p",
        "--processing",
        help="Runs tests for expression and grid processing.",
        action="store_true")
    args = parser.parse_args()
    if args.file:
        passed = test_file()
    elif args.analysis:
        passed = test_analysis()
    elif args.processing:
        passed = test_processing()
    else:
        passed = test_all()
    sys.exit(0 if passed else 1)

if __name__ == "__main__":
    main()
