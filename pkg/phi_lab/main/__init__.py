#!/usr/bin/env python3

"""
Defines main package.
"""
