"""Locate JSON-pointer targets in raw JSON text.

Validation errors carry a JSON pointer; this maps the pointer back to a
line/column in the original file so diagnostics are line-addressed.  The
walk uses the stdlib decoder's raw_decode, so offsets are exact for any
document the stdlib can parse.
"""

import json

_WS = " \t\n\r"


def _skip_ws(text, i):
    while i < len(text) and text[i] in _WS:
        i += 1
    return i


def pointer_offset(text, pointer):
    """Character offset of the value a JSON pointer refers to.

    Raises KeyError when the pointer has no target in `text`.
    """
    decoder = json.JSONDecoder()
    idx = _skip_ws(text, 0)
    if pointer in ("", "/"):
        return idx
    for raw_token in pointer.lstrip("/").split("/"):
        token = raw_token.replace("~1", "/").replace("~0", "~")
        idx = _skip_ws(text, idx)
        if idx >= len(text):
            raise KeyError(pointer)
        if text[idx] == "{":
            i = _skip_ws(text, idx + 1)
            found = False
            while True:
                if i >= len(text) or text[i] == "}":
                    break
                key, j = decoder.raw_decode(text, i)
                j = _skip_ws(text, j)
                if j >= len(text) or text[j] != ":":
                    raise KeyError(pointer)
                j = _skip_ws(text, j + 1)
                if key == token:
                    idx = j
                    found = True
                    break
                _, j = decoder.raw_decode(text, j)
                j = _skip_ws(text, j)
                if j < len(text) and text[j] == ",":
                    i = _skip_ws(text, j + 1)
                else:
                    break
            if not found:
                raise KeyError(pointer)
        elif text[idx] == "[":
            try:
                n = int(token)
            except ValueError:
                raise KeyError(pointer)
            i = _skip_ws(text, idx + 1)
            for k in range(n):
                if i >= len(text) or text[i] == "]":
                    raise KeyError(pointer)
                _, i = decoder.raw_decode(text, i)
                i = _skip_ws(text, i)
                if i < len(text) and text[i] == ",":
                    i = _skip_ws(text, i + 1)
                else:
                    raise KeyError(pointer)
            if i >= len(text) or text[i] == "]":
                raise KeyError(pointer)
            idx = i
        else:
            raise KeyError(pointer)
    return idx


def pointer_line(text, pointer):
    """1-based (line, column) of a JSON pointer target; (1, 1) fallback."""
    try:
        off = pointer_offset(text, pointer)
    except (KeyError, json.JSONDecodeError, ValueError):
        return 1, 1
    line = text.count("\n", 0, off) + 1
    col = off - text.rfind("\n", 0, off)
    return line, col
