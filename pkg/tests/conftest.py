import mpmath as mp

J = mp.matrix([[0, -1], [1, 0]])


def mp_transfer(pieces, z, dps=50):
    """Product of exact constant-piece propagators exp(-z H J dt), in high precision.

    pieces: sequence of ((h1, h2, h3), dt).
    """
    with mp.workdps(dps):
        w = mp.eye(2)
        zz = mp.mpc(z)
        for (h1, h2, h3), dt in pieces:
            h = mp.matrix([[h1, h3], [h3, h2]])
            w = w * mp.expm(-zz * h * J * dt)
        return w


def mp_mobius(w, tau):
    return complex((w[0, 0] * tau + w[0, 1]) / (w[1, 0] * tau + w[1, 1]))


# acceptance summary lines, printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
