# Copyright (C) 2026 safe-forge contributors
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the safe-forge toolkit.

The heavy lifting lives in the `_safe_forge` extension; this package just
re-exports it. Installed wheels ship the extension inside the package;
development builds put it on PYTHONPATH next to the CMake build tree.
"""

try:
    from ._safe_forge import *  # noqa: F401,F403
    from ._safe_forge import __doc__ as _ext_doc  # noqa: F401
except ImportError:  # CMake build tree layout
    from _safe_forge import *  # noqa: F401,F403

__version__ = "0.1.0"
