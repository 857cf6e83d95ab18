# Sphinx configuration of the mvreflect documentation.
import os
import sys
sys.path.insert(0, os.path.abspath('../..'))

import mvreflect

# -- Project information -----------------------------------------------------

project = 'mvreflect'
copyright = '2026, mvreflect developers'
author = 'mvreflect developers'
release = mvreflect.__version__
version = '.'.join(release.split('.')[:2])

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'recommonmark',
    'sphinx.ext.viewcode'
]

source_suffix = ['.rst', '.md']
master_doc = 'index'
templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

autodoc_member_order = 'bysource'
autodoc_default_options = {'members': True, 'undoc-members': False}
napoleon_google_docstring = True

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
}

# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
