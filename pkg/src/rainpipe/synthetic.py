"""Synthetic data in the weatherAUS layout, for demos and tests without the Kaggle file.

The generator is loosely physical: afternoon humidity, cloud cover, low
pressure and rain today raise the chance of rain tomorrow, and morning
humidity tracks afternoon humidity closely. Missing-cell rates roughly follow
the real file. It is not a stand-in for real-data results.
"""
from __future__ import annotations

import csv
import datetime
from pathlib import Path

import numpy as np

COMPASS = ("N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE",
           "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW")
LOCATIONS = ("Albury", "BadgerysCreek", "Cobar", "CoffsHarbour", "Moree", "Newcastle",
             "NorahHead", "Penrith", "Richmond", "Sydney", "WaggaWagga", "Williamtown",
             "Canberra", "Ballarat", "Bendigo", "Sale", "Melbourne", "Mildura", "Portland",
             "Brisbane", "Cairns", "GoldCoast", "Townsville", "Adelaide", "MountGambier",
             "Perth", "Albany", "Hobart", "Launceston", "AliceSprings", "Darwin", "Katherine")
MISSING_RATE = {
    "Sunshine": 0.43, "Evaporation": 0.48, "Cloud3pm": 0.40, "Cloud9am": 0.38,
    "MinTemp": 0.005, "MaxTemp": 0.002, "Rainfall": 0.01, "WindGustDir": 0.065,
    "WindGustSpeed": 0.065, "WindDir9am": 0.07, "WindDir3pm": 0.027, "WindSpeed9am": 0.01,
    "WindSpeed3pm": 0.018, "Humidity9am": 0.012, "Humidity3pm": 0.025, "Pressure9am": 0.098,
    "Pressure3pm": 0.098, "Temp9am": 0.006, "Temp3pm": 0.019,
}


def generate(n_rows: int, seed: int = 0, with_risk: bool = True, unlabeled_rate: float = 0.0):
    """Return ``(header, rows)`` with every cell as text, like a CSV reader would."""
    rng = np.random.default_rng(seed)
    n = n_rows
    loc = rng.integers(0, len(LOCATIONS), n)
    start = datetime.date(2008, 12, 1).toordinal()
    day = start + rng.integers(0, 3300, n)
    dates = [datetime.date.fromordinal(int(d)) for d in day]
    month = np.array([d.month for d in dates])
    season = np.cos(2 * np.pi * (month - 1) / 12)  # +1 in southern summer
    wet_site = rng.normal(0, 0.6, len(LOCATIONS))[loc]

    min_t = 12 + 6 * season + rng.normal(0, 4, n)
    max_t = min_t + 10 + rng.normal(0, 3, n)
    hum3 = np.clip(50 + 12 * wet_site - 6 * season + rng.normal(0, 19, n), 1, 100).round()
    hum9 = np.clip(hum3 + 17 + rng.normal(0, 9, n), 1, 100).round()
    cloud3 = np.clip(np.round(4.5 + (hum3 - 50) / 12 + rng.normal(0, 2, n)), 0, 8)
    cloud9 = np.clip(np.round(cloud3 + rng.normal(0, 1.7, n)), 0, 8)
    sunshine = np.clip(12 - 1.1 * cloud3 + rng.normal(0, 1.5, n), 0, 14).round(1)
    pres9 = 1017.6 + 3 * season - (hum3 - 50) / 10 + rng.normal(0, 6, n)
    pres3 = pres9 - 2.4 + rng.normal(0, 1.2, n)
    rain_today_amt = np.where(rng.random(n) < 0.22 + 0.002 * (hum9 - 68),
                              rng.exponential(6, n), rng.exponential(0.15, n)).round(1)
    rain_today = rain_today_amt > 1.0
    gust = np.clip(40 + rng.normal(0, 13, n), 6, 135).round()
    ws9 = np.clip(gust / 3 + rng.normal(0, 6, n), 0, 130).round()
    ws3 = np.clip(gust / 2.2 + rng.normal(0, 6, n), 0, 87).round()
    temp9 = (min_t + 5 + rng.normal(0, 1.5, n)).round(1)
    temp3 = (max_t - 1.8 + rng.normal(0, 1.2, n)).round(1)
    evap = np.clip(5.5 + 2.5 * season - 0.04 * (hum3 - 50) + rng.normal(0, 2.5, n), 0, 80).round(1)

    logit = (-2.05 + 0.075 * (hum3 - 50) + 0.18 * (cloud3 - 4.5) - 0.05 * (pres3 - 1015)
             + 0.55 * rain_today - 0.05 * (sunshine - 7.5) + 0.012 * (gust - 40))
    rain_tomorrow = rng.random(n) < 1 / (1 + np.exp(-logit))
    risk = np.where(rain_tomorrow, 1.1 + rng.exponential(7, n), rng.exponential(0.2, n).clip(0, 1.0))

    def num(a, dec=1):
        return [f"{v:.{dec}f}" for v in a]

    cols = {
        "Date": [d.isoformat() for d in dates],
        "Location": [LOCATIONS[i] for i in loc],
        "MinTemp": num(min_t), "MaxTemp": num(max_t), "Rainfall": num(rain_today_amt),
        "Evaporation": num(evap), "Sunshine": num(sunshine),
        "WindGustDir": [COMPASS[i] for i in rng.integers(0, 16, n)],
        "WindGustSpeed": num(gust, 0),
        "WindDir9am": [COMPASS[i] for i in rng.integers(0, 16, n)],
        "WindDir3pm": [COMPASS[i] for i in rng.integers(0, 16, n)],
        "WindSpeed9am": num(ws9, 0), "WindSpeed3pm": num(ws3, 0),
        "Humidity9am": num(hum9, 0), "Humidity3pm": num(hum3, 0),
        "Pressure9am": num(pres9), "Pressure3pm": num(pres3),
        "Cloud9am": num(cloud9, 0), "Cloud3pm": num(cloud3, 0),
        "Temp9am": num(temp9), "Temp3pm": num(temp3),
        "RainToday": ["Yes" if r else "No" for r in rain_today],
        "RISK_MM": num(risk),
        "RainTomorrow": ["Yes" if r else "No" for r in rain_tomorrow],
    }
    rain_today_col = cols["RainToday"]
    rain_miss = rng.random(n) < MISSING_RATE["Rainfall"]
    for name, rate in MISSING_RATE.items():
        miss = rain_miss if name == "Rainfall" else rng.random(n) < rate
        col = cols[name]
        for i in np.flatnonzero(miss):
            col[i] = "NA"
    for i in np.flatnonzero(rain_miss):
        rain_today_col[i] = "NA"
    if unlabeled_rate > 0:
        for i in np.flatnonzero(rng.random(n) < unlabeled_rate):
            cols["RainTomorrow"][i] = "NA"
    if not with_risk:
        del cols["RISK_MM"]
    header = list(cols)
    return header, list(zip(*cols.values()))


def write_synthetic_csv(path, n_rows: int, seed: int = 0, with_risk: bool = True,
                        unlabeled_rate: float = 0.0) -> Path:
    header, rows = generate(n_rows, seed, with_risk, unlabeled_rate)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path
