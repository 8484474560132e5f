"""
Setup configuration for noisy-ldpc.
Reads dependencies from requirements files to maintain single source of truth.
"""

from pathlib import Path

from setuptools import find_packages, setup


def read_requirements(filename):
    """Read requirements from a file, filtering out comments and -r includes."""
    requirements_file = Path(__file__).parent / "requirements" / filename
    if not requirements_file.exists():
        return []

    requirements = []
    with open(requirements_file, "r") as f:
        for line in f:
            line = line.strip()
            # Skip comments, empty lines, and -r includes
            if line and not line.startswith("#") and not line.startswith("-r"):
                # Remove inline comments
                if "#" in line:
                    line = line.split("#")[0].strip()
                if line:
                    requirements.append(line)
    return requirements


def read_dev_requirements():
    """Read all development requirements (test.in plus dev.in)."""
    dev_requirements = []
    dev_requirements.extend(read_requirements("test.in"))
    dev_requirements.extend(read_requirements("dev.in"))
    return dev_requirements


readme_file = Path(__file__).parent / "README.md"
long_description = readme_file.read_text(encoding="utf-8") if readme_file.exists() else ""

setup(
    name="noisy-ldpc",
    description=(
        "Simulation, density evolution, EXIT analysis and robust code design "
        "for LDPC decoders with noisy message passing"
    ),
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    py_modules=["run_experiments"],
    include_package_data=True,
    python_requires=">=3.11",
    setup_requires=["setuptools_scm"],
    install_requires=read_requirements("common.in"),
    extras_require={
        "dev": read_dev_requirements(),
    },
    entry_points={
        "console_scripts": [
            "noisy-ldpc=run_experiments:cli_main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3.13",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Communications",
    ],
    license="MIT",
)
