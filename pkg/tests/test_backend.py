import os
import subprocess
import sys

PROBE = ("from heisurf import _backend, verify; r = verify.criterion_8(); "
         "print(_backend.BACKEND, r.passed)")


def _probe(env_value):
    env = dict(os.environ)
    env.pop("HEISURF_PURE_PYTHON", None)
    if env_value is not None:
        env["HEISURF_PURE_PYTHON"] = env_value
    out = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def test_env_forces_fallback():
    assert _probe("1") == ["python", "True"]


def test_default_prefers_compiled():
    backend, ok = _probe(None)
    assert ok == "True"
    try:
        import heisurf._ckernels  # noqa: F401
    except ImportError:
        assert backend == "python"
    else:
        assert backend == "cython"
