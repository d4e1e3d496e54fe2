"""共享夹具"""
import json

import numpy as np
import pytest

from prodsat.workers import set_thread_limit


@pytest.fixture(autouse=True)
def _sequential_workers():
    """每个测试默认顺序执行，测试结束后恢复环境变量控制"""
    set_thread_limit(1)
    yield
    set_thread_limit(None)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def write_json(tmp_path):
    """把字典写到 tmp_path 下并返回路径字符串"""
    def _write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)
    return _write
