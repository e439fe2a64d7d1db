"""Builds the native extension by delegating to the repository's CMake tree."""

import os
import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

ROOT = Path(__file__).resolve().parent


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        ext_path = Path(self.get_ext_fullpath(ext.name)).resolve()
        ext_path.parent.mkdir(parents=True, exist_ok=True)
        build_dir = Path(self.build_temp).resolve() / "cmake_build"
        build_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(ROOT),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                "-DTABREP_BUILD_PYTHON=ON",
                f"-DPython3_EXECUTABLE={sys.executable}",
                f"-DPYTHON_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core",
             f"-j{os.cpu_count() or 2}"],
            check=True,
        )

        built = sorted((build_dir / "bindings").glob("_core.*.so")) or sorted(
            (build_dir / "bindings").glob("_core*.so")
        )
        if not built:
            raise RuntimeError("cmake did not produce the _core extension")
        shutil.copy2(built[0], ext_path)


setup(
    ext_modules=[CMakeExtension("tabrep._core")],
    cmdclass={"build_ext": CMakeBuild},
)
