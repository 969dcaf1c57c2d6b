"""Write-temp-then-rename file output."""

import contextlib
import os
import tempfile
from pathlib import Path


def _umask():
    m = os.umask(0)
    os.umask(m)
    return m


@contextlib.contextmanager
def atomic_open(path):
    """Text handle whose content replaces ``path`` only when the block succeeds."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        os.chmod(tmp, 0o666 & ~_umask())
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    with atomic_open(path) as fh:
        fh.write(text)
