import pathlib
from setuptools import find_packages, setup
import codecs
import os.path


def read(rel_path):
    here = os.path.abspath(os.path.dirname(__file__))
    with codecs.open(os.path.join(here, rel_path), 'r') as fp:
        return fp.read()


def get_version(rel_path):
    for line in read(rel_path).splitlines():
        if line.startswith('__version__'):
            delim = '"' if '"' in line else "'"
            return line.split(delim)[1]
    else:
        raise RuntimeError("Unable to find version string.")


# The directory containing this file
HERE = pathlib.Path(__file__).parent

# The text of the README file
README = (HERE / "README.md").read_text(encoding='utf-8')

# This call to setup() does all the work
setup(
    name="mvreflect",
    version=get_version("mvreflect/__init__.py"),
    description="mvreflect: simulation and statistical verification of reflecting McKean-Vlasov SDEs",
    long_description=README,
    long_description_content_type="text/markdown",
    license='Apache License 2.0',
    classifiers=[
        'Development Status :: 3 - Alpha',

        'Intended Audience :: Education',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Mathematics',

        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],
    packages=find_packages(exclude=['tests', 'tests.*', 'examples', 'examples.*']),
    include_package_data=True,
    install_requires=['numpy', 'scipy>=1.6', 'tqdm>=4.27', 'pydantic>=2.0.0', 'filelock'],
    extras_require={'test': ['pytest>=7.4.0']},
    entry_points={
        'console_scripts': ['mvreflect=mvreflect.__main__:main'],
    },
)
