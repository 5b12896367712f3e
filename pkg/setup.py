"""
Setup configuration for the smoothppl package.
This file is maintained for compatibility with older build systems.
For modern installations, prefer using pyproject.toml.
"""

from pathlib import Path

from setuptools import find_packages, setup

# Read the contents of README file
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text(encoding="utf-8")

setup(
    name="smoothppl",
    version="0.1.0",
    author="smoothppl contributors",
    description="Smoothness analysis and selective reparameterisation for a small probabilistic programming language",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"smoothppl": ["programs/*.ppl"]},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=["numpy>=1.22", "scipy>=1.9"],
    entry_points={
        "console_scripts": [
            "smoothppl=smoothppl.cli:main",
        ],
    },
    keywords="probabilistic programming variational inference static analysis",
)
