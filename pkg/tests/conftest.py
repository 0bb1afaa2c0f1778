import json

import pytest

from insightrank.tables import Cell, Table

CAR_SALES = {
    "id": "car-sales",
    "dim_names": ["Brand", "Year"],
    "cells": [
        {"dims": ["A", "2015"], "value": 13},
        {"dims": ["A", "2016"], "value": 14},
        {"dims": ["A", "2017"], "value": 20},
        {"dims": ["B", "2015"], "value": 51},
        {"dims": ["B", "2016"], "value": 49},
        {"dims": ["B", "2017"], "value": 60},
        {"dims": ["C", "2015"], "value": 13},
        {"dims": ["C", "2016"], "value": 20},
        {"dims": ["C", "2017"], "value": 23},
    ],
    "meta": {"measure": "Sales"},
}


@pytest.fixture
def car_sales_path(tmp_path):
    path = tmp_path / "car-sales.json"
    path.write_text(json.dumps(CAR_SALES))
    return path


@pytest.fixture
def car_sales_table():
    return Table(
        id=CAR_SALES["id"],
        dim_names=tuple(CAR_SALES["dim_names"]),
        cells=tuple(
            Cell(dims=tuple(c["dims"]), value=float(c["value"]))
            for c in CAR_SALES["cells"]
        ),
        meta=dict(CAR_SALES["meta"]),
    )
