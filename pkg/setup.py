import setuptools

with open("README.rst", "r") as fh:
    long_description = fh.read()

about = {}
with open("rocofd/_version.py", "r") as fh:
    exec(fh.read(), about)

# tests
TEST_REQUIRE = [
    "black",
    "flake8",
    "hypothesis",
    "isort",
    "pytest",
]

setuptools.setup(
    name="rocof-dispatch",
    version=about["__version__"],
    description="Nodal RoCoF screening and nodal inertia dispatch for power networks",
    long_description=long_description,
    long_description_content_type="text/x-rst",
    packages=setuptools.find_packages(exclude=["test"]),
    include_package_data=True,
    install_requires=[
        "boltons",
        "braceexpand",
        "google-cloud-storage",
        "networkx",
        "numpy",
        "scipy>=1.7",
        "torch",
    ],
    extras_require={
        "test": TEST_REQUIRE,
        "dev": TEST_REQUIRE,
    },
    entry_points={
        "console_scripts": ["rocofd=rocofd.cli:main"],
    },
    keywords="power-systems rocof inertia dc-power-flow linear-programming",
    license="Apache 2.0",
    classifiers=[
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
    ],
    python_requires=">=3.8",
)
