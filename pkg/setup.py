from setuptools import setup

setup(
    name="pyrankinfer",
    version="0.1.0",
    description="Library for ranking inference from top-choice multiway comparisons.",
    long_description="",
    author="Abdul Zagirov",
    author_email="zagirovaa@netcon.pro",
    license="GNU GPLv3",
    packages=["pyrankinfer"],
    zip_safe=False,
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
    ],
    entry_points={
        "console_scripts": ["pyrankinfer=pyrankinfer.cli:main"],
    }
)
