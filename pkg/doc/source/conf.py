# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import transferbound

# -- Project information -----------------------------------------------------

project = "transferbound"
copyright = "2026, transferbound developers"
author = "transferbound developers"
version = transferbound.__version__
release = version

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
]

autodoc_member_order = "bysource"
napoleon_google_docstring = True

exclude_patterns = []


# -- Options for HTML output -------------------------------------------------

html_theme = "furo"
