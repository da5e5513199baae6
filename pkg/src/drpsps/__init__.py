"""Day-ahead unit commitment with wildfire-driven line shutoffs.

The planner chooses generator commitments and which risky lines to de-energize,
knowing that the outage distribution depends on that choice, and hedges against
a total-variation ball of distributions around it.
"""

__version__ = "0.1.0"
