#!/usr/bin/env python3
"""Regenerate everything under fixtures/.

usage: make_fixtures.py [OUT_DIR]

Output is deterministic: the same script always writes the same bytes.
"""

import json
import math
import random
import sys
from datetime import datetime, timedelta
from pathlib import Path

WEEKS = {"mar": "2023-03-13", "jun": "2023-06-12", "sep": "2023-09-11", "dec": "2023-12-11"}

# base $/MWh, evening peak $/MWh, midday solar dip as a fraction of base
LMP_SHAPE = {"mar": (45.0, 95.0, 0.55), "jun": (40.0, 120.0, 0.25), "sep": (60.0, 180.0, 0.45), "dec": (70.0, 110.0, 0.9)}

CORRIDOR = [
    ("SD", 0.0, 20.0),
    ("LA", 120.0, 90.0),
    ("BAK", 230.0, 120.0),
    ("FRE", 340.0, 95.0),
    ("MOD", 430.0, 27.0),
    ("SAC", 500.0, 9.0),
    ("RED", 660.0, 170.0),
    ("MED", 810.0, 420.0),
]
NETWORK_DEMAND = [
    ("SD", "LA", 150.0),
    ("LA", "BAK", 90.0),
    ("MOD", "SAC", 60.0),
    ("LA", "FRE", 20.0),
    ("BAK", "SAC", 12.0),
    ("SD", "BAK", 8.0),
    ("LA", "SAC", 3.0),
    ("SD", "SAC", 2.0),
    ("LA", "RED", 1.0),
    ("BAK", "MED", 0.4),
]
STATIONS = ["LA", "BAK", "FRE", "MOD", "SAC", "RED"]
DEMAND = [
    ("SD", "LA", 5.0),
    ("LA", "BAK", 6.0),
    ("MOD", "SAC", 4.0),
    ("SD", "FRE", 1.0),
    ("LA", "SAC", 2.0),
    ("SD", "SAC", 2.0),
    ("LA", "RED", 2.0),
    ("BAK", "MED", 1.0),
]


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def write_json(path, obj):
    write(path, json.dumps(obj, indent=2) + "\n")


def series_csv(unit, start, step_minutes, values):
    out = ["timestamp,value[%s]" % unit]
    for k, v in enumerate(values):
        t = start + timedelta(minutes=step_minutes * k)
        out.append("%s,%s" % (t.strftime("%Y-%m-%dT%H:%M:%S"), round(v, 6)))
    return "\n".join(out) + "\n"


def bump(hour, center, width):
    d = min(abs(hour - center), 24.0 - abs(hour - center))
    return math.exp(-0.5 * (d / width) ** 2)


def seasonal_signals(out):
    for name, day in WEEKS.items():
        rng = random.Random("signals-" + name)
        start = datetime.fromisoformat(day)
        base, peak, dip = LMP_SHAPE[name]
        lmp, avg, mar, ru, rd = [], [], [], [], []
        for h in range(7 * 24):
            hour = h % 24
            solar = bump(hour, 12.5, 2.5)
            evening = bump(hour, 19.0, 1.5)
            price = base * (1.0 - (1.0 - dip) * solar) + (peak - base) * evening + rng.uniform(-4.0, 4.0)
            lmp.append(max(price, 1.0))
            avg.append(620.0 - 260.0 * solar * (1.2 - dip) + 120.0 * evening + rng.uniform(-20.0, 20.0))
            mar.append(900.0 + 150.0 * solar - 60.0 * evening + rng.uniform(-40.0, 40.0))
            # regulation up beats the wholesale price only in rare hours
            up = rng.uniform(3.0, 14.0)
            if rng.random() < 0.01:
                up = price * rng.uniform(1.05, 1.6)
            ru.append(up)
            rd.append(rng.uniform(2.0, 12.0))
        d = out / "signals" / name
        write(d / "lmp.csv", series_csv("$/MWh", start, 60, lmp))
        write(d / "co2_avg.csv", series_csv("lb/MWh", start, 60, avg))
        write(d / "co2_marginal.csv", series_csv("lb/MWh", start, 60, mar))
        write(d / "ru_price.csv", series_csv("$/MWh", start, 60, ru))
        write(d / "rd_price.csv", series_csv("$/MWh", start, 60, rd))


def grid(steps, origin="2023-03-01T00:00:00"):
    return {"t_begin": 0, "t_end": steps - 1, "delta_t": 0.5, "origin": origin}


def single_visit(m, q_ini, station, c, e, t):
    return {
        "customer": m,
        "visits": [{"station_id": station, "consumption_kwh": c, "demand_to_go_kwh": e, "arrival_step": t}],
        "q_ini_kwh": q_ini,
        "cargo_kg": 30000.0,
        "distance_mi": 500.0,
    }


def one_customer(out):
    write_json(
        out / "one_customer" / "scenario.json",
        {
            "time": grid(8),
            "batteries": {"capacity_kwh": 500.0, "eta": 0.95, "p_max_kw": 250.0},
            "stations": [{"id": "S1", "zone": "Z1", "slots": [0, 1]}],
            "trips": [single_visit(0, 450.0, "S1", 300.0, 250.0, 3)],
            "tariffs": {"grid_price": 0.1, "swap_revenue": 20.0, "energy_revenue": 0.3, "shortage_penalty": 1.0, "grid_limit_kwh": 1000.0},
        },
    )


def carbon(out, name, xi, energy_revenue=0.4, shortage_penalty=1.0):
    start = datetime(2023, 3, 1)
    d = out / name
    write(d / "co2_avg.csv", series_csv("t/kWh", start, 30, xi))
    write(d / "co2_marginal.csv", series_csv("t/kWh", start, 30, xi))
    write_json(
        d / "scenario.json",
        {
            "time": grid(10),
            "batteries": {"capacity_kwh": 400.0, "eta": 0.95, "p_max_kw": 400.0},
            "stations": [{"id": "S1", "zone": "Z1", "slots": [0]}],
            "trips": [single_visit(0, 300.0, "S1", 200.0, 300.0, 1), single_visit(1, 300.0, "S1", 250.0, 250.0, 5)],
            "tariffs": {"grid_price": 0.1, "swap_revenue": 50.0, "energy_revenue": energy_revenue, "shortage_penalty": shortage_penalty, "grid_limit_kwh": 400.0},
            "signals": {"co2_avg": "co2_avg.csv", "co2_marginal": "co2_marginal.csv"},
        },
    )


def ancillary(out):
    start = datetime(2023, 3, 1)
    lmp = [0.08, 0.12, 0.1, 0.06, 0.05, 0.11, 0.09, 0.1, 0.07, 0.1]
    rd = [0.0] * 10
    rd[3], rd[4] = 0.03, 0.02
    d = out / "ancillary"
    write(d / "ru_price.csv", series_csv("$/kWh", start, 30, [0.5 * f for f in lmp]))
    write(d / "rd_price.csv", series_csv("$/kWh", start, 30, rd))
    xi = [0.0002] * 10
    xi[2] = 0.001
    write(d / "co2_avg.csv", series_csv("t/kWh", start, 30, xi))
    write_json(
        d / "scenario.json",
        {
            "time": grid(10),
            "batteries": {"capacity_kwh": 400.0, "eta": 0.95, "p_max_kw": 400.0},
            "stations": [{"id": "S1", "zone": "Z1", "slots": [0]}],
            "trips": [single_visit(0, 300.0, "S1", 200.0, 300.0, 1), single_visit(1, 300.0, "S1", 250.0, 250.0, 5)],
            "tariffs": {"grid_price": lmp, "swap_revenue": 50.0, "energy_revenue": 0.4, "shortage_penalty": 1.0, "grid_limit_kwh": 400.0},
            "signals": {"ru_price": "ru_price.csv", "rd_price": "rd_price.csv", "co2_avg": "co2_avg.csv"},
        },
    )


def demand_csv(demand):
    pos = {z: (p, e) for z, p, e in CORRIDOR}
    rows = ["origin,destination,frequency,distance_mi,elevation_m"]
    for o, t, f in demand:
        rows.append("%s,%s,%s,%s,%s" % (o, t, f, pos[t][0] - pos[o][0], pos[t][1] - pos[o][1]))
    return "\n".join(rows) + "\n"


def corridor_scenario(network_file, battery_kwh, sweep):
    return {
        "time": grid(48),
        "batteries": {"capacity_kwh": battery_kwh, "eta": 0.95, "p_max_kw": 400.0},
        "stations": [{"id": "S_" + z, "zone": z, "slots": list(range(6))} for z in STATIONS],
        "tariffs": {"grid_price": 0.1, "swap_revenue": 20.0, "energy_revenue": 0.3, "shortage_penalty": 1.0, "grid_limit_kwh": 5000.0},
        "corridor": {
            "network_file": network_file,
            "demand_file": "demand.csv",
            "sweep_kwh": sweep,
            "reserve_fraction": 0.05,
            "first_departure_hour": 1.0,
            "departure_spacing_hours": 1.0,
            "departure_slots": 4,
        },
    }


def corridor(out):
    d = out / "corridor"
    rows = ["from,to,distance_mi,elevation_m"]
    for i, (a, pa, ea) in enumerate(CORRIDOR):
        for b, pb, eb in CORRIDOR[i + 1 :]:
            rows.append("%s,%s,%s,%s" % (a, b, pb - pa, eb - ea))
    write(d / "network.csv", "\n".join(rows) + "\n")
    write(d / "demand.csv", demand_csv(DEMAND))
    write_json(d / "scenario.json", corridor_scenario("network.csv", 500.0, [350.0 + 50.0 * k for k in range(10)]))


def network(out):
    d = out / "network"
    write(d / "demand.csv", demand_csv(NETWORK_DEMAND))
    write_json(d / "scenario.json", corridor_scenario("../corridor/network.csv", 500.0, [500.0]))


def seasonal_days(out):
    for name, day in WEEKS.items():
        origin = day + "T00:00:00"
        sig = "../signals/%s/" % name
        write_json(
            out / "seasonal" / ("%s.json" % name),
            {
                "time": grid(48, origin),
                "batteries": {"capacity_kwh": 500.0, "eta": 0.95, "p_max_kw": 250.0},
                "stations": [{"id": "S1", "zone": "BAK", "slots": [0, 1]}, {"id": "S2", "zone": "SAC", "slots": [0, 1]}],
                "trips": [
                    single_visit(0, 480.0, "S1", 220.0, 450.0, 8),
                    single_visit(1, 500.0, "S1", 230.0, 400.0, 20),
                    single_visit(2, 450.0, "S2", 260.0, 380.0, 26),
                    single_visit(3, 500.0, "S2", 240.0, 300.0, 36),
                ],
                "tariffs": {
                    "grid_price": {"signal": "lmp"},
                    "swap_revenue": 20.0,
                    "energy_revenue": 0.35,
                    "shortage_penalty": 1.0,
                    "grid_limit_kwh": 300.0,
                },
                "signals": {
                    "lmp": sig + "lmp.csv",
                    "co2_avg": sig + "co2_avg.csv",
                    "co2_marginal": sig + "co2_marginal.csv",
                    "ru_price": sig + "ru_price.csv",
                    "rd_price": sig + "rd_price.csv",
                },
            },
        )


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures"
    seasonal_signals(out)
    one_customer(out)
    xi = [0.0002] * 10
    xi[2] = 0.001
    carbon(out, "carbon", xi)
    carbon(out, "carbon_flat", [0.0004] * 10, energy_revenue=0.9, shortage_penalty=1.5)
    ancillary(out)
    corridor(out)
    network(out)
    seasonal_days(out)


if __name__ == "__main__":
    main()
