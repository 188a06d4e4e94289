#!/usr/bin/env python3

"""
Combined unit tests for the file package
"""

from phi_lab.test.file.test_config import all_tests as test_config
from phi_lab.test.file.test_reports import all_tests as test_reports
from phi_lab.test.file.test_table_files import all_tests as test_table_files

def test_all():
    """
    Runs all file tests.
    """
    test_table_files()
    test_config()
    test_reports()
