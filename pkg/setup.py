#!/usr/bin/env python
# -*- coding: utf-8 -*-
from setuptools import find_packages
from setuptools import setup


with open('mesaplume/__version__.py') as versionfile:
    VERSION = versionfile.read().split('\'')[1]

with open('README.rst') as readmefile:
    readme = readmefile.read()

with open('requirements.txt') as f:
    requires = [line.strip() for line in f.readlines() if line.strip()]


setup(
    name='mesaplume',
    version=VERSION,
    description='Simulate the wind-driven dispersion of MeSA released from microspheres.',
    long_description=readme,
    author='mesaplume developers',
    author_email='mesaplume@users.noreply.github.com',
    packages=find_packages(exclude=['tests']),
    package_dir={'mesaplume': 'mesaplume'},
    package_data={'mesaplume': ['configs/*.conf']},
    include_package_data=True,
    install_requires=requires,
    python_requires='>=3.9',
    extras_require={
        'render': ['matplotlib>=3.5'],
        'fast': ['numba>=0.57'],
        'testing': ['pytest', 'mock', 'pytest-cov'],
    },
    license="BSD",
    zip_safe=False,
    keywords='mesaplume molecular-communication dispersion advection-diffusion',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Natural Language :: English',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    test_suite='tests',
    entry_points={
        'console_scripts': [
            'mesaplume = mesaplume.main:main',
        ],
    }
)
