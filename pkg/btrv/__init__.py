"""
btrv: runtime verification for behavior trees

Behavior trees, their skills and components are modelled as channel systems
of program graphs; SCOPE properties become monitors that watch the running
system or judge recorded traces.
"""

__version__ = "0.1.0"
