from setuptools import find_packages, setup


setup(
    name="surrogate_metabbo",
    version="0.1.0",
    description="Learn surrogates of benchmark functions and a policy that configures differential evolution on them",
    license="MIT",
    keywords="meta-black-box-optimization differential-evolution reinforcement-learning surrogate KAN",
    package_dir={"": "python"},
    packages=find_packages("python", exclude=["tests"]),
    install_requires=[
        "funcy>=1.11",
        "jsonschema>=2.5",
        "numpy>=1.17",
        "pycodestyle>=2.5.0",
        "pyyaml>=5.1",
        "scipy>=1.7",
        "setuptools",
        "simplejson>=3.8",
        "tabulate>=0.8.3",
        "tqdm>=4.43",
    ],
    package_data={
        "metabbo": [
            "config/*.json",
            "config/*.schema",
            "config/*.yaml",
            "config/presets/*",
        ]
    },
    entry_points={
        "console_scripts": [
            "metabbo = metabbo.commands:run_arg_as_command",
            "run_tests.py = metabbo.selftest:run_tests",
        ]
    },
)
