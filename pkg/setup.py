"""
A setuptools based setup module to install the package with pip.

Generated from https://github.com/pypa/sampleproject.
"""

# XXX: keep in sync with package.py

# Always prefer setuptools over distutils
from setuptools import setup, find_packages
import pathlib

THISDIR = pathlib.Path(__file__).parent.resolve()

# Get the long description from the README file
long_description = (THISDIR / "README.md").read_text(encoding="utf-8")

setup(
    name="transferbound",
    version="0.1.0",
    description="Estimate tracking-error bounds when transferring inverse models between systems.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3 :: Only",
    ],
    keywords="control, transfer learning, bayesian optimization, gaussian process",
    package_dir={"": "python"},
    packages=find_packages(where="python", exclude=["tests", "tests.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.9",
        "pydantic>=2",
    ],
    # used via `pip install transferbound[dev]`
    extras_require={
        "dev": ["black"],
        "test": [
            "pytest>=7",
        ],
        "doc": [
            "sphinx==7.2.*",
            "furo==2023.9.*",
        ],
    },
    entry_points={
        "console_scripts": [
            "transferbound=transferbound.cli:main",
        ],
    },
)
