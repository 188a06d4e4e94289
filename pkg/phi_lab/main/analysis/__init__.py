#!/usr/bin/env python3

"""
Defines analysis package.
"""
