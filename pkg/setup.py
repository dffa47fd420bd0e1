from setuptools import setup, find_packages

setup(
    name="loo_subsample",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"loo_subsample": ["config.template.env"]},
    install_requires=[
        "numpy",
        "scipy",
        "pydantic",
        "python-dotenv",
        "pandas>=1.5",
    ],
    extras_require={
        "dev": [
            "pytest",
            "pytest-cov",
            "black",
            "flake8",
            "mypy",
        ],
    },
    entry_points={
        "console_scripts": [
            "loo-subsample=loo_subsample.main:main",
        ],
    },
    python_requires=">=3.9",
)
