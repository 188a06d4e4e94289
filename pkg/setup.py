#!/usr/bin/env python3

"""
Setuptools setup file.
"""

import setuptools

console_scripts = ["phi-lab = phi_lab.main.lab:main",
            "phi-lab-test = phi_lab.test.all_tests:main"]

with open("README.md", "r") as fh:
    long_description = fh.read()

desc = "Numerical lab for positive solutions of singular phi-Laplacian Dirichlet problems."

setuptools.setup(
    name="phi-lab",
    version="0.1.0",
    description=desc,
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["examples", "examples.*"]),
    package_data={"phi_lab":["configs/*.cfg"]},
    install_requires=[
        "numpy",
        "pyparsing>=3",
        "scipy",
        "tqdm"],
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent"
    ],
    python_requires='>=3.8',
    entry_points={"console_scripts": console_scripts}
)
