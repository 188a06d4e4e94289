#!/usr/bin/env python3

"""
Defines test analysis package.
"""
