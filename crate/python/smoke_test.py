"""Smoke test for the help_py extension module.

Build the module first, for example with
    cargo build --release -p help-py --features extension-module
The script imports help_py from the path, or else copies the freshly built
shared library from target/ into a temporary directory and imports it from there.
"""

import importlib
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def import_module():
    try:
        return importlib.import_module("help_py")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libhelp_py.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "help_py.so"))
            sys.path.insert(0, tmp)
            return importlib.import_module("help_py")
    sys.exit("help_py not found; build it with cargo first")


def main():
    hp = import_module()
    os.environ.setdefault("HELP_DATA_DIR", os.path.join(ROOT, "crates", "core", "data"))

    a5 = hp.load_bundle("a5")
    assert a5.group == "A5" and a5.order == 60
    assert a5.element_orders == [1, 2, 3, 5]
    assert a5.missing_pq_orders == [6, 10, 15]

    zc = hp.check_zc(a5)
    assert zc.proved and zc.verdict == "proved", zc.verdict
    assert zc.solutions(6) == []
    assert zc.solutions(5) == a5.trivial_tuples(5)

    assert hp.check_pq(hp.load_bundle("s4")).verdict == "proved (solvable shortcut)"

    m11 = hp.load_bundle("m11")
    assert m11.brauer_primes == [5, 11]
    assert hp.check_pq(m11).proved
    o12 = hp.solve_order(m11, 12)
    assert o12["status"] == "solved"
    assert o12["admissible"] == []
    assert len(o12["rejected"]) == 3
    assert {t[12]["2a"] for t in o12["rejected"]} == {1, -1}
    for t in o12["rejected"]:
        assert not hp.wagner_test(m11, 12, t)

    c6 = hp.load_bundle("cyclic:6")
    for t in c6.trivial_tuples(6):
        assert hp.wagner_test(c6, 6, t)

    try:
        hp.load_bundle("no-such-group")
    except ValueError:
        pass
    else:
        raise AssertionError("missing bundle accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
