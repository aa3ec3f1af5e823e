"""EHZ capacity, equality cases and billiard dynamics for planar Lagrangian products."""
