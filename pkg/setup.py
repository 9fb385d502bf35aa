from setuptools import setup, find_packages

setup(
    name="idflow",
    version="0.1",
    description="Quantum Fisher metric, intrinsic density of states and density flow of open qubit dynamics",
    packages=find_packages('src'),
    package_data={'idflow': ['py.typed'], },
    python_requires='>=3.8',  # typing.Literal and TypedDict
    package_dir={'': 'src'},
    install_requires=[
        'numpy~=1.23.4',
        'scipy~=1.9.3',
        'pandas~=1.5.0',
        'loguru~=0.6.0',
        'tenacity~=8.1.0',
        'pydantic~=2.5',
        'matplotlib~=3.6.2',
    ],
    entry_points={
        'console_scripts': ['idflow=idflow.cli:main'],
    },
)
