from setuptools import setup, find_packages


setup(
    name='povm_coherence',
    version='0.1.0',
    packages=find_packages(exclude=['tests']),
    python_requires='>=3.10',
    install_requires=[
        'numpy==2.0.1',
        'pandas==2.2.2',
        'scipy==1.14.1',
        'cvxpy==1.6.0',
    ],
    extras_require={
        'test': ['pytest==8.3.2'],
    },
    entry_points={
        'console_scripts': [
            'povm-coherence=povm_coherence.cli:main',
        ],
    },
    description=(
                 'Block coherence measures with respect to projective '
                 'measurements and POVM coherence measures computed through '
                 'the canonical Naimark extension, with randomized property '
                 'suites and a JSON command-line front end.'
                 ),
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
)
