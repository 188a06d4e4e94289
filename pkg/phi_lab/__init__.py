#!/usr/bin/env python3

"""
Defines phi_lab package.
"""
