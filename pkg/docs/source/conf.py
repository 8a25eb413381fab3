# Sphinx configuration for the taskenv documentation

import os
import sys

sys.path.insert(0, os.path.abspath("../.."))

import taskenv  # noqa: E402

project = "taskenv"
author = "taskenv developers"
copyright = f"2025, {author}"
version = release = taskenv.__version__

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.viewcode",
    "sphinx.ext.napoleon",
    "sphinx.ext.intersphinx",
    "sphinx_autodoc_typehints",
]

exclude_patterns = ["_build"]
# taskdl listings are shown as plain text
highlight_language = "none"

html_theme = "sphinx_rtd_theme"
html_title = f"taskenv {release}"
html_theme_options = {"navigation_depth": 3}

# Docstrings follow the Google style (Args/Returns/Raises)
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_attr_annotations = True

autodoc_default_options = {
    "members": True,
    "member-order": "bysource",
    "undoc-members": True,
    "exclude-members": "model_config,model_fields,model_computed_fields",
}
autosummary_generate = True

typehints_fully_qualified = False
always_document_param_types = True

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "pydantic": ("https://docs.pydantic.dev/latest/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
}
