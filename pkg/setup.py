from __future__ import generator_stop
from setuptools import setup, find_packages
from crowdcache import VERSION

REQUIREMENTS = [
    'numpy',
    'scipy',
    'statsd',
    'lockfile',
]
TEST_REQUIREMENTS = [
    'coverage',
    'hypothesis',
    'mock',
    'mypy',
    'pylint',
    'pytest',
    'pytest-cov',
    'pytest-mypy',
    'pytest-pylint',
    'pytest-runner',
]

setup(
    name='crowdcache',
    version=VERSION,
    description='Age-of-information and latency simulator for cache-enabled mobile crowdsensing.',
    long_description="""
    Simulates a base station that serves published sensing tasks either by
    re-sensing them over OFDMA subchannels or from a cache of earlier results,
    and compares a joint assignment, allocation, reuse and caching policy with
    simpler baselines over parameter sweeps.
    """,
    license='MIT',
    classifiers=[
        'Development Status :: 4 - Beta',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering',
    ],
    packages=find_packages(exclude=['tests']),
    install_requires=REQUIREMENTS,
    setup_requires=[
        'pytest-cov',
        'pytest-mypy',
        'pytest-pylint',
        'pytest-runner',
    ],
    tests_require=TEST_REQUIREMENTS,
    entry_points={
        'console_scripts': [
            'crowdcache = crowdcache.harness:main',
        ],
    },
    python_requires='>=3.7,<4',
)
