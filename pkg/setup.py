from pathlib import Path

from setuptools import find_packages, setup

root = Path(__file__).parent
version = {}
exec((root / "prompt_graph" / "version.py").read_text(encoding="utf-8"), version)

setup(
    name="prompt_graph",
    version=version["__version__"],
    description="Motor de grafos de prompts para agentes LLM con entorno de prueba",
    long_description=(root / "README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    author="Prompt Graph Team",
    license="MIT",
    python_requires=">=3.9",
    packages=find_packages(exclude=["tests", "tests.*", "dashboard"]),
    package_data={
        "prompt_graph": [
            "assets/graphs/*.json",
            "assets/databases/*.json",
            "assets/manuals/*.txt",
            "assets/scripts/*.json",
            "assets/config/*.yaml",
        ],
    },
    install_requires=[
        "numpy>=1.26",
        "networkx>=3.2",
        "requests>=2.31.0",
        "tenacity>=8.2.0",
        "python-dotenv>=1.0.0",
        "pyyaml>=6.0",
        "questionary>=2.0.0",
        "rich>=13.7.0",
    ],
    extras_require={
        "dashboard": ["streamlit>=1.51.0", "plotly>=6.5.0", "pandas>=2.3.3"],
        "test": ["pytest>=8.3.0", "pytest-cov>=6.0.0"],
    },
    entry_points={
        "console_scripts": ["prompt-graph=prompt_graph.cli.main:main"],
    },
)
