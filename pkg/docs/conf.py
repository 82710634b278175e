#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# mesaplume documentation build configuration file.
import sys, os

cwd = os.getcwd()
project_root = os.path.dirname(cwd)
sys.path.insert(0, project_root)

import mesaplume

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode']
templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'mesaplume'
copyright = u'2026, mesaplume developers'

version = mesaplume.__version__
release = mesaplume.__version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'mesaplumedoc'

man_pages = [
    ('index', 'mesaplume', u'mesaplume Documentation',
     [u'mesaplume developers'], 1)
]
