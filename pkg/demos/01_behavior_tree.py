"""
Ticking a behavior tree
=======================

A behavior tree is driven by periodic ticks from the root. Sequences stop at
the first child that does not succeed, Fallbacks at the first child that does
not fail, and a leaf that was Running but loses its tick receives a halt.
"""

from btverify import data_path
from btverify.behavior_tree import (BehaviorTreeEngine, FunctionExecutor, TickStatus,
                                    TickTrace, load_bt, tick_once)

S, F, R = TickStatus.SUCCESS, TickStatus.FAILURE, TickStatus.RUNNING

# Load the recharge-aware navigation tree shipped with the package.
tree = load_bt(data_path("bt", "scenario.xml"))
for path, node in tree.walk():
    print("  " * len(path) + f"{node.kind.value} {node.id or node.name or ''}")

# %%
# Leaves are plain callables here. With a full battery the robot heads for the
# destination and only the left branch is ticked.
world = {"BatteryLevelAbove30": S, "BatteryNotRecharging": S, "GotoDestination": R,
         "AtChargingStation": F, "GotoChargingStation": R, "WaitForUser": R}
executor = FunctionExecutor({k: (lambda k=k: world[k]) for k in world})
trace = TickTrace()
print("root:", tick_once(tree, executor, trace=trace).value)
print("ticked:", trace.leaf_ticks())

# %%
# Run the tree for a few cycles and drop the battery to 25% in cycle 2. The
# battery condition now fails, so GotoDestination loses its tick and is halted
# in the same cycle, while the recharge branch takes over.
engine = BehaviorTreeEngine(tree, executor)
for cycle in range(4):
    if cycle == 2:
        world["BatteryLevelAbove30"] = F
    status = engine.tick()
    print(f"cycle {cycle}: root={status.value:8} ticked={engine.trace.leaf_ticks(cycle)} "
          f"halted={engine.trace.halts(cycle)}")
print("halts received by leaves:", executor.halted)
