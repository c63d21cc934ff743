# XXX: keep any change in sync with setup.py

name = "transferbound"

version = "0.1.0"

description = (
    "Estimate tracking-error bounds when transferring inverse models between systems."
)

uuid = "9c1f4d7be2a54f0c8e3b6a1d5f20c7e4"

requires = [
    "python-3.9+",
    "numpy-1.22+",
    "scipy-1.9+",
    "pydantic-2+",
]

private_build_requires = [
    "python-3.9+",
]

build_command = "python {root}/build.py"

__test_command_base = "pytest {root}/python/tests"

tests = {
    "unit-39": {
        "command": __test_command_base,
        "requires": ["python-3.9", "pytest-7+"],
    },
    "unit-311": {
        "command": __test_command_base,
        "requires": ["python-3.11", "pytest-7+"],
    },
    "slow": {
        "command": "TRANSFERBOUND_RUN_SLOW=1 " + __test_command_base + " -m slow",
        "requires": ["python-3.11", "pytest-7+"],
        "run_on": "explicit",
    },
}

cachable = True


tools = [
    "transferbound",
]


def commands():
    env.PYTHONPATH.append("{root}/python")

    alias("transferbound", "python -m transferbound")
