"""Load a small configuration space, check assignments and cut it into groups.

Run: python3 demos/01_config_space.py
"""

from pathlib import Path

from kcfg_rl import check_dependencies, group_by_dependency, load_config_space, validate_group
from kcfg_rl.config_space import ConfigGroup

space = load_config_space((Path(__file__).parents[1] / "tests/fixtures/space.jsonl").read_text())
print(f"{len(space)} symbols in dependency order:")
for name in space.names():
    print(f"  {name:34s} {space[name].kind}")

# Defaults always satisfy the dependency rules.
default = space.default_assignment()
print("\ndefault assignment violations:", check_dependencies(space, default))

# NUMA needs SMP. Turning it on alone breaks that.
broken = dict(default, CONFIG_NUMA="Yes")
print("NUMA without SMP:", check_dependencies(space, broken))

# Groups must stay within one kind.
print("\nmixed-kind group problems:",
      validate_group(space, ConfigGroup("Bool", ("CONFIG_SMP", "CONFIG_HZ_100"))))

print("\ngroups of at most 2, parents first:")
for g in group_by_dependency(space, 2):
    print(f"  {g.group_type:6s} {', '.join(g.candidate)}")
