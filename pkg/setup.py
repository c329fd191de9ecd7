import os
from setuptools import setup

PACKAGE_DIR = os.path.abspath(os.path.dirname(__file__))
README_FP = os.path.join(PACKAGE_DIR, "README.md")
with open(README_FP, encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="edrlab",
    version="0.1.0",
    description="Error and disturbance of linear position measurements",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=["edrlab"],
    install_requires=[
        "numpy",
        "pandas",
        "scipy",
    ],
    extras_require={
        "test": ["hypothesis"],
    },
    entry_points={
        "console_scripts": [
            "edrlab=edrlab.command:main",
        ],
    },
    classifiers=[
        "Intended Audience :: Science/Research",
        "Operating System :: POSIX :: Linux",
        "Operating System :: MacOS :: MacOS X",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Physics",
    ],
)
