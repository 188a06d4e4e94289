#!/usr/bin/env python3

"""
Defines file package.
"""
