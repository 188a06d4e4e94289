#!/usr/bin/env python3

"""
Defines test processing package.
"""
