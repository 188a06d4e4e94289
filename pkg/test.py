#!/usr/bin/env python3

"""Runs all unit tests."""

from phi_lab.test.all_tests import main

if __name__ == "__main__":
    main()
