# -*- coding: utf-8 -*-
from .__version__ import __version__
__author__ = 'mesaplume developers'
__email__ = 'mesaplume@users.noreply.github.com'
