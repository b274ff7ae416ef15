"""Generate the bundled pump-and-dump fixture under tests/fixtures/.

Fifteen thinly traded coins, each with Poisson background trading over a
five-day interval, a handful of organic activity surges and one scripted
pump-and-dump burst.

The corpus is built so that hourly price/volume thresholds cannot separate
the manipulation while window-level path features can:

* organic surges trade at pump-like volume with balanced sides and no
  price direction, so every pure volume threshold that catches the pumps
  also fires on surges;
* the pump ramps the price up ~70% and dumps it back inside three
  minutes, so the hourly close barely moves and the price threshold never
  sees the spike;
* within the burst, returns are volatile and buy/sell flow follows the
  ramp (buys up, sells down), leaving a window-level footprint in the
  return and side channels.

Deterministic: every draw flows from SEED.  Run from the repository root:

    python3 scripts/make_fixture.py
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

SEED = 20190301
N_COINS = 15
SPAN_HOURS = 120  # +-2.5 days of trading around each event
TRADES_PER_HOUR = 150.0
BURST_TRADES = 240
BURST_SECONDS = 170.0
SURGES_PER_COIN = 8
BASE_MS = 1_551_398_400_000  # 2019-03-01 00:00:00 UTC
MS_PER_HOUR = 3_600_000

OUT_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


class PriceWalk:
    """Mean-reverting log-price shared by all background segments."""

    def __init__(self, rng, price0):
        self.rng = rng
        self.log_p = np.log(price0)
        self.anchor = self.log_p

    def step(self, scale=1.0):
        self.log_p += self.rng.normal(0.0, 0.004 * scale) + 0.01 * (self.anchor - self.log_p)
        return float(np.exp(self.log_p))

    @property
    def price(self):
        return float(np.exp(self.log_p))


def background_trades(rng, walk, t0_ms, t1_ms):
    """Poisson arrivals riding the shared price walk."""
    n = rng.poisson(max(t1_ms - t0_ms, 0) / MS_PER_HOUR * TRADES_PER_HOUR)
    ts = np.sort(rng.integers(t0_ms, t1_ms, size=n))
    rows = []
    for t in ts:
        amount = float(rng.lognormal(5.5, 0.45))
        side = "buy" if rng.random() < 0.5 else "sell"
        rows.append((int(t), side, walk.step(), amount))
    return rows


def surge_trades(rng, walk, start_ms):
    """Organic activity surge: pump-like hourly volume, but spread over
    10-20 minutes with balanced sides and no price direction."""
    n = int(rng.integers(180, 300))
    duration = float(rng.uniform(600, 1200)) * 1000
    ts = np.sort(rng.integers(0, int(duration), size=n)) + start_ms
    rows = []
    for t in ts:
        amount = float(rng.lognormal(5.9, 0.7))
        side = "buy" if rng.random() < 0.5 else "sell"
        rows.append((int(t), side, walk.step(), amount))
    return rows


def burst_trades(rng, start_ms, price0):
    """The pump: volatile ramp to ~+70%, then a dump back to the start."""
    n_up = int(BURST_TRADES * 0.6)
    n_down = BURST_TRADES - n_up
    ts = np.sort(rng.integers(0, int(BURST_SECONDS * 1000), size=BURST_TRADES)) + start_ms
    ramp = np.concatenate(
        [
            np.linspace(0.0, 1.0, n_up) ** 1.3,
            np.linspace(1.0, 0.02, n_down) ** 0.7,
        ]
    )
    peak = 0.7 + rng.uniform(-0.1, 0.1)
    rows = []
    for i, t in enumerate(ts):
        price = price0 * (1.0 + peak * ramp[i]) * (1.0 + rng.normal(0.0, 0.012))
        amount = float(rng.lognormal(5.9, 0.7))
        buy_prob = 0.9 if i < n_up else 0.15
        side = "buy" if rng.random() < buy_prob else "sell"
        rows.append((int(t), side, price, amount))
    return rows


def dedupe_timestamps(rows):
    """Bump duplicate millisecond stamps so each trade has a unique time."""
    out = []
    last = -1
    for t, side, price, amount in sorted(rows, key=lambda r: r[0]):
        if t <= last:
            t = last + 1
        out.append((t, side, price, amount))
        last = t
    return out


def main():
    rng = np.random.default_rng(SEED)
    trade_lines = ["symbol,timestamp,side,price,amount"]
    label_lines = ["symbol,group,timestamp,exchange"]
    for coin in range(N_COINS):
        symbol = f"C{coin:02d}BTC"
        start = BASE_MS + coin * (SPAN_HOURS + 30) * MS_PER_HOUR
        end = start + SPAN_HOURS * MS_PER_HOUR
        walk = PriceWalk(rng, float(rng.uniform(0.0005, 0.005)))
        # pump a few minutes into an hour near the middle of the interval
        event_hour = start // MS_PER_HOUR + SPAN_HOURS // 2 + int(rng.integers(-6, 7))
        event_ms = event_hour * MS_PER_HOUR + int(rng.integers(60, 150)) * 1000
        # organic surges anywhere outside a buffer around the pump
        surge_starts = []
        while len(surge_starts) < SURGES_PER_COIN:
            t = int(rng.integers(start, end - 400_000))
            if abs(t - event_ms) > 2 * MS_PER_HOUR and all(
                abs(t - s) > 2 * MS_PER_HOUR for s in surge_starts
            ):
                surge_starts.append(t)
        rows = []
        cursor = start
        for s in sorted(surge_starts + [event_ms]):
            rows += background_trades(rng, walk, cursor, s)
            if s == event_ms:
                rows += burst_trades(rng, s, walk.price)
                cursor = s + int(BURST_SECONDS * 1000) + 1000
            else:
                rows += surge_trades(rng, walk, s)
                cursor = s + 1_300_000
        rows += background_trades(rng, walk, cursor, end)
        for t, side, price, amount in dedupe_timestamps(rows):
            trade_lines.append(f"{symbol},{t},{side},{price:.10f},{amount:.4f}")
        label_lines.append(f"{symbol},group{coin:02d},{event_ms},fixturex")
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    trades_csv = "\n".join(trade_lines) + "\n"
    labels_csv = "\n".join(label_lines) + "\n"
    (OUT_DIR / "trades.csv").write_text(trades_csv, encoding="utf-8")
    (OUT_DIR / "labels.csv").write_text(labels_csv, encoding="utf-8")
    manifest = {
        "seed": SEED,
        "n_events": N_COINS,
        "files": {
            "trades.csv": hashlib.sha256(trades_csv.encode()).hexdigest(),
            "labels.csv": hashlib.sha256(labels_csv.encode()).hexdigest(),
        },
    }
    (OUT_DIR / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(trade_lines) - 1} trades, {N_COINS} labels to {OUT_DIR}")


if __name__ == "__main__":
    main()
