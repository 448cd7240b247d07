"""Random-agent throughput benchmark over a batch of environments.

Run: python3 demos/08_throughput.py
"""

from generalsim.cli import run_benchmark

report = run_benchmark(height=24, width=24, batch=8, duration=3.0, seed=0)
print(f"grid {report['grid'][0]}x{report['grid'][1]}, batch {report['batch']}")
print(f"aggregate: {report['steps_per_second']:.0f} half-turn steps/s "
      f"({report['total_steps']} steps in {report['elapsed_s']}s)")
for entry in report["per_env"]:
    print(f"  env {entry['env']}: {entry['steps']} steps, "
          f"{entry['episodes']} episode resets")
