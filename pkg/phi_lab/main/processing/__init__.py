#!/usr/bin/env python3

"""
Defines processing package.
"""
