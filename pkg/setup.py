from setuptools import setup, find_packages

setup(
    name="dimer_hysteresis",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "colorama>=0.4.6",
        "numpy>=1.22",
        "scipy>=1.9",
        "matplotlib>=3.5",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-asyncio>=0.20.0",
            "pylint>=2.17.0",
            "black>=23.0.0",
            "mypy>=1.0.0",
            "flake8>=6.0.0",
            "isort>=5.12.0",
        ]
    },
    entry_points={
        "console_scripts": [
            "dimer-hysteresis=dimer_hysteresis.cli.runner:main",
        ],
    },
    python_requires=">=3.8",
)
