#!/usr/bin/env python3

"""
Defines test file package.
"""
