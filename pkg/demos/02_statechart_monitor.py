"""
State charts as runtime monitors
================================

Monitors are small state charts fed with copies of bus messages. The safety
monitor below flags any battery reading at or below 20%.
"""

from btverify import data_path
from btverify.bus import Bus
from btverify.monitor import MonitorInstance, load_monitor

spec = load_monitor(data_path("monitors", "battery_safety.json"))
print(spec.name, "states:", spec.chart.states, "watching", [str(p) for p in spec.patterns])

# %%
# A toy battery component on a bus. The port monitor hook copies every
# request and reply on the skill-to-battery connection into the monitor.
bus = Bus()
level = {"value": 60.0}
bus.register_endpoint("battery", lambda request: {"level": level["value"]})
monitor = MonitorInstance(spec)
monitor.attach(bus)

for value in (60.0, 45.0, 31.0, 10.0, 50.0):
    level["value"] = value
    bus.query("skill/BatteryLevelAbove30", "battery", "level")
    print(f"level {value:5.1f} -> monitor state {monitor.state}")

# %%
# The verdict latches at the first violating reply and names its witness.
print(monitor.verdict.to_json())
