import nox


# ============================================
#                    lint
# ============================================
@nox.session
def lint(session: nox.Session) -> None:
    """
    Runs the code linting suite.
    """
    session.install("poetry")
    session.run("poetry", "install", "--only", "dev")
    session.run("poetry", "run", "black", "./epcritical")
    session.run("poetry", "run", "pylint", "./epcritical")
    session.run("poetry", "run", "mypy", "./epcritical")


# ============================================
#                    tests
# ============================================
@nox.session
def tests(session: nox.Session) -> None:
    """
    Runs the test suite. Pass `-- -m "not slow"` to skip the sweeps.
    """
    session.install("poetry")
    session.run("poetry", "install")
    session.run("poetry", "run", "pytest", *session.posargs)
