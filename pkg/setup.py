#!/usr/bin/env python

# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from os import path
from setuptools import setup, find_packages
from dsni import __version__, __license__, __author__, __contact__


def long_description():
    try:
        readme_path = path.join(path.dirname(__file__), 'README.md')
        with open(readme_path, 'r') as f:
            return f.read()
    except IOError:
        return (
            "Synthetic nephrographic phase CT with a shifted-window diffusion model"
        )


setup(
    name='dsni',
    version=__version__,
    license=__license__,
    author=__author__,
    author_email=__contact__,
    description='Three-phase CT urography preprocessing and nephrographic phase synthesis',
    long_description=long_description(),
    long_description_content_type='text/markdown',
    platforms="Windows, Linux",
    python_requires=">=3.8",
    setup_requires=[
        'setuptools>=40.0'
    ],
    install_requires=[
        'click>=7.0',
        'PyYAML>=5.4',
        'easy_enum==0.2.0',
        'numpy>=1.20',
        'scipy>=1.6',
        'jsonschema>=3.2'
    ],
    tests_require=[
        'pytest',
        'pytest-console-scripts'
    ],
    classifiers=[
        'Programming Language :: Python :: 3',
        'Operating System :: POSIX :: Linux',
        'Operating System :: Microsoft :: Windows',
        'License :: OSI Approved :: BSD License',
        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Medical Science Apps.',
        'Topic :: Scientific/Engineering :: Artificial Intelligence'
    ],
    packages=find_packages('.', exclude=['tests', 'examples', 'examples.*']),
    entry_points={
        'console_scripts': [
            'dsni = dsni.run.__main__:main',
        ],
    }
)
