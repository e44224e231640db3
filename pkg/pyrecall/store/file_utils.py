import json
import os
import pathlib
from typing import Any, Dict, List, Union, cast

JSONData = Union[List[Any], Dict[str, Any]]


# Splitting this out for testing with no side effects
def mkdir(directory: str) -> None:
    return pathlib.Path(directory).mkdir(parents=True, exist_ok=True)


def safe_jsonify(directory: str, filename: str, data: JSONData) -> None:
    mkdir(directory)
    fname = os.path.join(directory, filename)
    with open(fname, 'w', encoding='utf-8') as json_file:
        json.dump(data, json_file, indent=2, sort_keys=True)


def load_json(filename: str) -> JSONData:
    with open(filename, encoding='utf-8') as json_file:
        return cast(JSONData, json.load(json_file))


def write_text(directory: str, filename: str, text: str) -> None:
    ''' Replace a file atomically so readers never observe a half-written version '''
    mkdir(directory)
    fname = os.path.join(directory, filename)
    tmp_name = f"{fname}.tmp"
    with open(tmp_name, 'w', encoding='utf-8') as out:
        out.write(text)
    os.replace(tmp_name, fname)


def append_lines(filename: str, lines: List[str]) -> None:
    with open(filename, 'a', encoding='utf-8') as out:
        for line in lines:
            out.write(line + '\n')
        out.flush()


def read_lines(filename: str) -> List[str]:
    with open(filename, encoding='utf-8') as handle:
        return handle.read().split('\n')
