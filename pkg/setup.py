import os
from setuptools import setup, find_packages
from setup_helpers import parse_requirements, read_text

PATH_ROOT = os.path.dirname(__file__)

# CONFIG
NAME = 'fpcascade'
VERSION = '0.1.0'
DESCRIPTION = (
    'Exact solution of the turbulent-cascade Fokker-Planck equation '
    'with finite-difference and Monte-Carlo oracles'
)
LONG_DESCRIPTION = read_text(os.path.join(PATH_ROOT, 'README.md'))
AUTHOR = 'Woojin cho'
AUTHOR_EMAIL = 'woojin.cho@gmail.com'
URL = ''
INSTALL_REQUIREMENTS = parse_requirements(
    os.path.join(PATH_ROOT, 'requirements.txt')
)
EXTRAS_REQUIRE = {
    'test': [
        _ for _ in parse_requirements(os.path.join(PATH_ROOT, 'requirements-test.txt'))
        if _ not in INSTALL_REQUIREMENTS
    ],
}
PACKAGES = find_packages(exclude=['tests', 'tests.*', 'examples', 'examples.*'])
ENTRY_POINTS = {
    'console_scripts': [
        'fpcascade = fpcascade.scripts.cli:cli',
    ],
}
KEYWORDS = ['fokker-planck', 'turbulence', 'cascade', 'monte-carlo']
PYTHON_REQUIRES = '>=3.9'
ZIP_SAFE = False
CLASSIFIERS = [
    'Programming Language :: Python :: 3',
    'Programming Language :: Python :: 3.9',
    'Programming Language :: Python :: 3.10',
    'Programming Language :: Python :: 3.11',
    'Programming Language :: Python :: 3.12',
]

# SETUP
setup(
    name=NAME,
    version=VERSION,
    description=DESCRIPTION,
    long_description=LONG_DESCRIPTION,
    long_description_content_type='text/markdown',
    author=AUTHOR,
    author_email=AUTHOR_EMAIL,
    url=URL,
    install_requires=INSTALL_REQUIREMENTS,
    extras_require=EXTRAS_REQUIRE,
    packages=PACKAGES,
    entry_points=ENTRY_POINTS,
    keywords=KEYWORDS,
    python_requires=PYTHON_REQUIRES,
    zip_safe=ZIP_SAFE,
    classifiers=CLASSIFIERS,
)
