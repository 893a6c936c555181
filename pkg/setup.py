from setuptools import setup, find_packages

setup(
    name="swapbin",
    version="0.1.0",
    description="Multi-scale binning predictors for online swap regret and calibration",
    author="Swapbin Team",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    py_modules=["main"],
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.9",
        "psutil>=5.9.0",
        "tqdm>=4.64",
        "rich>=12.0",
    ],
    extras_require={
        "test": ["pytest>=7.0"],
    },
    python_requires=">=3.8",
    entry_points={
        "console_scripts": [
            "swapbin=main:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
